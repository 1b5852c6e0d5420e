use super::ray::{intersect_triangle, Hit, Ray};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Point3, Scene, Vec3};

const LEAF_SIZE: usize = 4;
const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: index of the first primitive. Inner: index of the right child
    /// (the left child always follows its parent).
    offset: u32,
    /// Number of primitives; zero marks an inner node.
    count: u32,
    axis: u8,
}

/// Bounding volume hierarchy over every triangle in a [`Scene`].
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle vertices in leaf order.
    tris: Vec<[Point3; 3]>,
    /// `(mesh_id, triangle_id)` for each entry of `tris`.
    refs: Vec<(u32, u32)>,
    /// Raw (winding) normals, unit length.
    normals: Vec<Vec3>,
}

struct Prim {
    bounds: Aabb,
    centroid: Point3,
    index: u32,
}

impl Bvh {
    pub fn build(scene: &Scene) -> Result<Self> {
        let mut prims = Vec::with_capacity(scene.triangle_count());
        let mut all_refs = Vec::with_capacity(scene.triangle_count());
        for (mi, mesh) in scene.meshes().iter().enumerate() {
            for ti in 0..mesh.triangles.len() {
                let tri = mesh.triangle(ti);
                let bounds = Aabb::from_points(tri);
                prims.push(Prim {
                    bounds,
                    centroid: (tri[0] + tri[1] + tri[2]) / 3.0,
                    index: all_refs.len() as u32,
                });
                all_refs.push((mi as u32, ti as u32));
            }
        }
        if prims.is_empty() {
            return Err(Error::invalid("cannot build a BVH over an empty scene"));
        }
        let mut nodes = Vec::with_capacity(2 * prims.len() / LEAF_SIZE + 1);
        build_recursive(&mut prims, 0, &mut nodes, 0);

        let mut tris = Vec::with_capacity(prims.len());
        let mut refs = Vec::with_capacity(prims.len());
        let mut normals = Vec::with_capacity(prims.len());
        for p in &prims {
            let (mi, ti) = all_refs[p.index as usize];
            let tri = scene.triangle(mi as usize, ti as usize);
            tris.push(tri);
            refs.push((mi, ti));
            normals.push((tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized());
        }
        Ok(Bvh {
            nodes,
            tris,
            refs,
            normals,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.count > 0).count()
    }

    pub fn primitive_count(&self) -> usize {
        self.tris.len()
    }

    /// Check structural invariants: every primitive in exactly one leaf and
    /// every node box containing its descendants. Used by tests.
    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = vec![0u32; self.tris.len()];
        self.check_node(0, &mut seen)?;
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(Error::Invariant(format!("primitive {i} appears {} times", seen[i])));
        }
        Ok(())
    }

    fn check_node(&self, idx: usize, seen: &mut [u32]) -> Result<Aabb> {
        let node = self.nodes[idx];
        let content = if node.count > 0 {
            let range = node.offset as usize..(node.offset + node.count) as usize;
            for i in range.clone() {
                seen[i] += 1;
            }
            range.fold(Aabb::EMPTY, |b, i| b.union(Aabb::from_points(self.tris[i])))
        } else {
            let l = self.check_node(idx + 1, seen)?;
            let r = self.check_node(node.offset as usize, seen)?;
            l.union(r)
        };
        if !node.bounds.contains_box(&content) {
            return Err(Error::Invariant(format!("node {idx} does not contain its descendants")));
        }
        Ok(node.bounds)
    }

    /// Nearest hit along the ray. Ties in `t` go to the lowest `(mesh_id, triangle_id)`.
    pub fn intersect_nearest(&self, ray: &Ray) -> Option<Hit> {
        let inv = inverse_dir(ray.dir);
        let mut best: Option<(f64, usize)> = None;
        let mut t_far = ray.t_max;
        let mut stack = [0u32; MAX_DEPTH * 2];
        let mut sp = 1usize;
        while sp > 0 {
            sp -= 1;
            let idx = stack[sp] as usize;
            let node = self.nodes[idx];
            if !slab_hit(&node.bounds, ray, inv, t_far) {
                continue;
            }
            if node.count > 0 {
                let clipped = Ray { t_max: t_far, ..*ray };
                for i in node.offset as usize..(node.offset + node.count) as usize {
                    if let Some(t) = intersect_triangle(&clipped, &self.tris[i]) {
                        let better = match best {
                            None => true,
                            Some((bt, bi)) => t < bt || (t == bt && self.refs[i] < self.refs[bi]),
                        };
                        if better {
                            best = Some((t, i));
                            t_far = t;
                        }
                    }
                }
            } else {
                let (left, right) = ((idx + 1) as u32, node.offset);
                let (near, far) = if ray.dir[node.axis as usize] >= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                stack[sp] = far;
                stack[sp + 1] = near;
                sp += 2;
            }
        }
        best.map(|(t, i)| self.make_hit(ray, t, i))
    }

    /// True if anything intersects the ray within its interval.
    pub fn occluded(&self, ray: &Ray) -> bool {
        let inv = inverse_dir(ray.dir);
        let mut stack = [0u32; MAX_DEPTH * 2];
        let mut sp = 1usize;
        while sp > 0 {
            sp -= 1;
            let idx = stack[sp] as usize;
            let node = self.nodes[idx];
            if !slab_hit(&node.bounds, ray, inv, ray.t_max) {
                continue;
            }
            if node.count > 0 {
                let mut range = node.offset as usize..(node.offset + node.count) as usize;
                if range.any(|i| intersect_triangle(ray, &self.tris[i]).is_some()) {
                    return true;
                }
            } else {
                stack[sp] = node.offset;
                stack[sp + 1] = (idx + 1) as u32;
                sp += 2;
            }
        }
        false
    }

    fn make_hit(&self, ray: &Ray, t: f64, i: usize) -> Hit {
        let n = self.normals[i];
        let front_face = n.dot(ray.dir) < 0.0;
        let (mesh_id, triangle_id) = self.refs[i];
        Hit {
            t,
            point: ray.at(t),
            normal: if front_face { n } else { -n },
            front_face,
            mesh_id: mesh_id as usize,
            triangle_id: triangle_id as usize,
        }
    }
}

fn inverse_dir(d: Vec3) -> Vec3 {
    Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z)
}

/// Slab test with a slightly widened far bound so boxes of zero thickness and
/// rounding at box faces never cull a triangle the exact test would accept.
#[inline]
fn slab_hit(b: &Aabb, ray: &Ray, inv: Vec3, t_far: f64) -> bool {
    let mut t0 = ray.t_min;
    let mut t1 = t_far;
    for axis in 0..3 {
        let o = ray.origin[axis];
        let ta = (b.min[axis] - o) * inv[axis];
        let tb = (b.max[axis] - o) * inv[axis];
        // f64::min/max discard NaN (0·∞ when the origin lies on a slab face).
        t0 = t0.max(ta.min(tb));
        t1 = t1.min(ta.max(tb) * (1.0 + 4.0 * f64::EPSILON));
    }
    t0 <= t1 * (1.0 + 4.0 * f64::EPSILON) + 1e-12
}

fn build_recursive(prims: &mut [Prim], first: usize, nodes: &mut Vec<Node>, depth: usize) -> usize {
    let bounds = prims.iter().fold(Aabb::EMPTY, |b, p| b.union(p.bounds));
    let idx = nodes.len();
    nodes.push(Node {
        bounds,
        offset: first as u32,
        count: prims.len() as u32,
        axis: 0,
    });
    if prims.len() <= LEAF_SIZE || depth + 1 >= MAX_DEPTH {
        return idx;
    }
    let centroids = Aabb::from_points(prims.iter().map(|p| p.centroid));
    let axis = centroids.longest_axis();
    if centroids.extent()[axis] <= 0.0 {
        return idx;
    }
    let mid = prims.len() / 2;
    prims.select_nth_unstable_by(mid, |a, b| {
        a.centroid[axis]
            .total_cmp(&b.centroid[axis])
            .then(a.index.cmp(&b.index))
    });
    let (left, right) = prims.split_at_mut(mid);
    build_recursive(left, first, nodes, depth + 1);
    let right_idx = build_recursive(right, first + mid, nodes, depth + 1);
    nodes[idx].offset = right_idx as u32;
    nodes[idx].count = 0;
    nodes[idx].axis = axis as u8;
    idx
}

pub fn build_bvh(scene: &Scene) -> Result<Bvh> {
    Bvh::build(scene)
}

pub fn intersect_nearest(ray: &Ray, bvh: &Bvh) -> Option<Hit> {
    bvh.intersect_nearest(ray)
}

impl Bvh {
    /// Linear scan over every triangle with the same tie-breaking as
    /// [`Bvh::intersect_nearest`]. Reference path for tests and audits.
    pub fn intersect_brute_force(&self, ray: &Ray) -> Option<Hit> {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.tris.len() {
            if let Some(t) = intersect_triangle(ray, &self.tris[i]) {
                let better = match best {
                    None => true,
                    Some((bt, bi)) => t < bt || (t == bt && self.refs[i] < self.refs[bi]),
                };
                if better {
                    best = Some((t, i));
                }
            }
        }
        best.map(|(t, i)| self.make_hit(ray, t, i))
    }
}
