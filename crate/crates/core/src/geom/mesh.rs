use serde::{Deserialize, Serialize};

use super::material::Material;
use super::vec::{Aabb, Point3, Vec3};
use crate::error::{Error, Result};

/// Minimum triangle area, m².
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;

/// Tag carried by the ground-plane mesh.
pub const GROUND_TAG: &str = "ground";
/// Tag carried by vegetation blockers.
pub const TREE_TAG: &str = "tree";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
    pub material: Material,
    pub tag: String,
}

impl Mesh {
    pub fn new(
        vertices: Vec<Point3>,
        triangles: Vec<[u32; 3]>,
        material: Material,
        tag: impl Into<String>,
    ) -> Result<Self> {
        let mesh = Mesh {
            vertices,
            triangles,
            material,
            tag: tag.into(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if self.triangles.is_empty() {
            return Err(Error::invalid(format!("mesh `{}` has no triangles", self.tag)));
        }
        if let Some(v) = self.vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("mesh `{}`: non-finite vertex {v:?}", self.tag)));
        }
        let n = self.vertices.len() as u32;
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&k| k >= n) {
                return Err(Error::invalid(format!(
                    "mesh `{}`: triangle {i} index out of range",
                    self.tag
                )));
            }
            if self.triangle_area(i) <= MIN_TRIANGLE_AREA {
                return Err(Error::invalid(format!(
                    "mesh `{}`: triangle {i} is degenerate",
                    self.tag
                )));
            }
        }
        Ok(())
    }

    pub fn triangle(&self, i: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Outward normal following the winding order, unit length.
    pub fn triangle_normal(&self, i: usize) -> Vec3 {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(c - a).normalized()
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle(i);
        0.5 * (b - a).cross(c - a).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
    }

    pub fn is_ground(&self) -> bool {
        self.tag == GROUND_TAG
    }
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Twice the signed area (positive for counter-clockwise rings).
pub fn signed_area2(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum()
}

/// Drop the closing vertex, repeated vertices and collinear vertices.
/// Returns a counter-clockwise ring.
pub fn clean_footprint(polygon: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    const EPS: f64 = 1e-9;
    if let Some(p) = polygon.iter().find(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::invalid(format!("footprint vertex {p:?} is not finite")));
    }
    let same = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() <= EPS && (a[1] - b[1]).abs() <= EPS;
    let mut ring: Vec<[f64; 2]> = Vec::with_capacity(polygon.len());
    for &p in polygon {
        if ring.last().is_none_or(|&q| !same(p, q)) {
            ring.push(p);
        }
    }
    while ring.len() > 1 && same(ring[0], *ring.last().unwrap()) {
        ring.pop();
    }
    // Collinear removal; a reversal (spike) makes the footprint degenerate.
    let mut changed = true;
    while changed && ring.len() >= 3 {
        changed = false;
        let n = ring.len();
        for i in 0..n {
            let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            let scale = ((b[0] - a[0]).hypot(b[1] - a[1])) * ((c[0] - b[0]).hypot(c[1] - b[1]));
            if cross2(a, b, c).abs() <= 1e-12 * scale.max(1e-12) {
                let dot = (b[0] - a[0]) * (c[0] - b[0]) + (b[1] - a[1]) * (c[1] - b[1]);
                if dot < 0.0 {
                    return Err(Error::invalid("footprint folds back on itself"));
                }
                ring.remove(i);
                changed = true;
                break;
            }
        }
    }
    if ring.len() < 3 {
        return Err(Error::invalid("footprint needs at least 3 distinct, non-collinear vertices"));
    }
    let area2 = signed_area2(&ring);
    if area2.abs() <= 2.0 * MIN_TRIANGLE_AREA {
        return Err(Error::invalid("footprint has zero area"));
    }
    if !is_simple(&ring) {
        return Err(Error::invalid("footprint is self-intersecting"));
    }
    if area2 < 0.0 {
        ring.reverse();
    }
    Ok(ring)
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let on_segment = |a: [f64; 2], b: [f64; 2], p: [f64; 2]| {
        p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
    };
    let d1 = cross2(q1, q2, p1);
    let d2 = cross2(q1, q2, p2);
    let d3 = cross2(p1, p2, q1);
    let d4 = cross2(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn is_simple(ring: &[[f64; 2]]) -> bool {
    let n = ring.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Ear-clipping triangulation of a simple counter-clockwise ring.
/// Output triangles are counter-clockwise; always `n - 2` of them.
pub fn triangulate_polygon(ring: &[[f64; 2]]) -> Result<Vec<[u32; 3]>> {
    let mut idx: Vec<usize> = (0..ring.len()).collect();
    let mut out = Vec::with_capacity(ring.len().saturating_sub(2));
    while idx.len() > 3 {
        let n = idx.len();
        let ear = (0..n).find(|&k| {
            let (a, b, c) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            if cross2(ring[a], ring[b], ring[c]) <= 0.0 {
                return false;
            }
            !idx.iter().any(|&p| {
                p != a
                    && p != b
                    && p != c
                    && cross2(ring[a], ring[b], ring[p]) >= 0.0
                    && cross2(ring[b], ring[c], ring[p]) >= 0.0
                    && cross2(ring[c], ring[a], ring[p]) >= 0.0
            })
        });
        let Some(k) = ear else {
            return Err(Error::invalid("footprint triangulation failed (no ear found)"));
        };
        out.push([idx[(k + n - 1) % n] as u32, idx[k] as u32, idx[(k + 1) % n] as u32]);
        idx.remove(k);
    }
    out.push([idx[0] as u32, idx[1] as u32, idx[2] as u32]);
    Ok(out)
}

/// Extrude a footprint into a prism with vertical walls and a flat roof, no floor.
///
/// Vertices are laid out as the bottom ring followed by the top ring, both
/// counter-clockwise from above; walls come first, then the roof.
pub fn extrude_footprint(
    polygon: &[[f64; 2]],
    height: f64,
    material: Material,
    tag: impl Into<String>,
) -> Result<Mesh> {
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::invalid(format!("building height {height} must be positive")));
    }
    let ring = clean_footprint(polygon)?;
    let n = ring.len();
    let mut vertices = Vec::with_capacity(2 * n);
    vertices.extend(ring.iter().map(|p| Vec3::new(p[0], p[1], 0.0)));
    vertices.extend(ring.iter().map(|p| Vec3::new(p[0], p[1], height)));

    let mut triangles = Vec::with_capacity(3 * n - 2);
    for i in 0..n {
        let j = (i + 1) % n;
        let (b0, b1, t0, t1) = (i as u32, j as u32, (n + i) as u32, (n + j) as u32);
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
    }
    for [a, b, c] in triangulate_polygon(&ring)? {
        let off = n as u32;
        triangles.push([a + off, b + off, c + off]);
    }
    Mesh::new(vertices, triangles, material, tag)
}

/// Axis-aligned cuboid vegetation blocker with its base at `center.z`.
pub fn make_tree_blocker(center: Point3, width: f64, depth: f64, height: f64) -> Result<Mesh> {
    for (name, v) in [("width", width), ("depth", depth), ("height", height)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("tree {name} {v} must be positive")));
        }
    }
    if !center.is_finite() {
        return Err(Error::invalid("tree center is not finite"));
    }
    let (hx, hy) = (width / 2.0, depth / 2.0);
    let mut vertices = Vec::with_capacity(8);
    for iz in 0..2 {
        for iy in 0..2 {
            for ix in 0..2 {
                vertices.push(Vec3::new(
                    center.x + if ix == 0 { -hx } else { hx },
                    center.y + if iy == 0 { -hy } else { hy },
                    center.z + if iz == 0 { 0.0 } else { height },
                ));
            }
        }
    }
    // Corners counter-clockwise as seen from outside.
    const FACES: [[u32; 4]; 6] = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [3, 2, 6, 7],
        [2, 0, 4, 6],
        [1, 3, 7, 5],
    ];
    let triangles = FACES
        .iter()
        .flat_map(|&[a, b, c, d]| [[a, b, c], [a, c, d]])
        .collect();
    Mesh::new(vertices, triangles, Material::blocker(), TREE_TAG)
}

/// Flat ground square at z = 0 spanning `[-half_extent, half_extent]²`.
pub fn ground_plane(half_extent: f64, material: Material) -> Result<Mesh> {
    if !(half_extent.is_finite() && half_extent > 0.0) {
        return Err(Error::invalid("ground extent must be positive"));
    }
    let l = half_extent;
    Mesh::new(
        vec![
            Vec3::new(-l, -l, 0.0),
            Vec3::new(l, -l, 0.0),
            Vec3::new(l, l, 0.0),
            Vec3::new(-l, l, 0.0),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
        material,
        GROUND_TAG,
    )
}
