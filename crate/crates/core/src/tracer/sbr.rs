use rayon::prelude::*;

use super::launch::{generate_launch_directions, launch_levels, mean_ray_spacing};
use super::path::{LaunchConfig, RxSphere, MAX_REFLECTIONS};
use crate::accel::{Bvh, Ray, SURFACE_EPS};
use crate::geom::{Point3, Scene, Vec3};

/// Ordered list of triangles `(mesh_id, triangle_id)` a launched ray bounced off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReflectionSequence {
    len: u8,
    prims: [(u32, u32); MAX_REFLECTIONS],
}

impl ReflectionSequence {
    pub const EMPTY: ReflectionSequence = ReflectionSequence {
        len: 0,
        prims: [(0, 0); MAX_REFLECTIONS],
    };

    pub fn from_slice(prims: &[(u32, u32)]) -> Self {
        assert!(prims.len() <= MAX_REFLECTIONS);
        let mut s = Self::EMPTY;
        for &p in prims {
            s.push(p);
        }
        s
    }

    fn push(&mut self, p: (u32, u32)) {
        self.prims[self.len as usize] = p;
        self.len += 1;
    }

    pub fn as_slice(&self) -> &[(u32, u32)] {
        &self.prims[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl RxSphere {
    /// Capture radius for a receiver at unfolded distance `length` from the source.
    pub fn radius(&self, length: f64, spacing: f64) -> f64 {
        match *self {
            RxSphere::Adaptive { scale } => 0.5 * scale * length * spacing,
            RxSphere::Fixed { radius } => radius,
        }
    }
}

/// Receivers sorted by x so a segment only tests the ones in its x-slab.
struct RxIndex<'a> {
    rx: &'a [Point3],
    order: Vec<u32>,
    xs: Vec<f64>,
}

impl<'a> RxIndex<'a> {
    fn new(rx: &'a [Point3]) -> Self {
        let mut order: Vec<u32> = (0..rx.len() as u32).collect();
        order.sort_by(|&a, &b| rx[a as usize].x.total_cmp(&rx[b as usize].x).then(a.cmp(&b)));
        let xs = order.iter().map(|&i| rx[i as usize].x).collect();
        RxIndex { rx, order, xs }
    }

    fn in_slab(&self, lo: f64, hi: f64) -> &[u32] {
        let a = self.xs.partition_point(|&x| x < lo);
        let b = self.xs.partition_point(|&x| x <= hi);
        &self.order[a..b.max(a)]
    }
}

const CHUNK: usize = 2048;

/// Launch rays from `tx` and record, per receiver, every reflection sequence
/// whose ray passed through the receiver's capture sphere. The result is
/// sorted by receiver index, then sequence, without duplicates.
///
/// Rays come from the nested lattices of [`launch_levels`]; each ray's
/// capture radius follows the spacing of its own lattice, so a larger budget
/// keeps every earlier capture.
pub fn shoot_rays(
    scene: &Scene,
    bvh: &Bvh,
    tx: Point3,
    rx: &[Point3],
    cfg: &LaunchConfig,
) -> Vec<(u32, ReflectionSequence)> {
    if cfg.max_reflections == 0 || rx.is_empty() {
        return Vec::new();
    }
    let rays: Vec<(Vec3, f64)> = launch_levels(cfg.ray_count)
        .into_iter()
        .flat_map(|n| {
            let spacing = mean_ray_spacing(n);
            generate_launch_directions(n).into_iter().map(move |d| (d, spacing))
        })
        .collect();
    let index = RxIndex::new(rx);

    let mut all: Vec<(u32, ReflectionSequence)> = rays
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut found = Vec::new();
            for &(d, spacing) in chunk {
                trace_one(scene, bvh, tx, d, &index, spacing, cfg, &mut found);
            }
            found.sort_unstable();
            found.dedup();
            found
        })
        .reduce(Vec::new, |mut a, b| {
            a.extend(b);
            a
        });
    all.sort_unstable();
    all.dedup();
    all
}

#[allow(clippy::too_many_arguments)]
fn trace_one(
    scene: &Scene,
    bvh: &Bvh,
    tx: Point3,
    dir0: Vec3,
    index: &RxIndex,
    spacing: f64,
    cfg: &LaunchConfig,
    found: &mut Vec<(u32, ReflectionSequence)>,
) {
    let mut origin = tx;
    let mut dir = dir0;
    let mut travelled = 0.0;
    let mut seq = ReflectionSequence::EMPTY;
    for bounce in 0..=cfg.max_reflections {
        let remaining = cfg.max_path_length - travelled;
        let t_min = if bounce == 0 { 0.0 } else { SURFACE_EPS };
        if remaining <= t_min {
            break;
        }
        let ray = Ray {
            origin,
            dir,
            t_min,
            t_max: remaining,
        };
        let hit = bvh.intersect_nearest(&ray);
        let end = hit.map_or(remaining, |h| h.t);
        if bounce > 0 {
            capture(&ray, end, travelled, index, spacing, cfg, seq, found);
        }
        let Some(h) = hit else { break };
        if bounce == cfg.max_reflections || scene.mesh(h.mesh_id).material.is_blocker() {
            break;
        }
        seq.push((h.mesh_id as u32, h.triangle_id as u32));
        travelled += h.t;
        origin = h.point;
        dir = dir.reflect(h.normal).normalized();
    }
}

#[allow(clippy::too_many_arguments)]
fn capture(
    ray: &Ray,
    end: f64,
    travelled: f64,
    index: &RxIndex,
    spacing: f64,
    cfg: &LaunchConfig,
    seq: ReflectionSequence,
    found: &mut Vec<(u32, ReflectionSequence)>,
) {
    let a = ray.at(ray.t_min);
    let b = ray.at(end);
    let r_max = cfg.rx_sphere.radius(travelled + end, spacing);
    for &i in index.in_slab(a.x.min(b.x) - r_max, a.x.max(b.x) + r_max) {
        let p = index.rx[i as usize];
        let to = p - ray.origin;
        let along = to.dot(ray.dir).clamp(ray.t_min, end);
        let r = cfg.rx_sphere.radius(travelled + to.norm(), spacing);
        if (ray.at(along) - p).norm_sq() <= r * r {
            found.push((i, seq));
        }
    }
}
