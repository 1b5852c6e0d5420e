//! Shooting-and-bouncing-rays path search with deterministic refinement.

mod diffraction;
mod edges;
mod launch;
mod path;
mod refine;
mod sbr;

use rayon::prelude::*;

pub use diffraction::{diffraction_point, obstructs, wedge_contains};
pub use edges::{find_diffraction_edges, DiffractionEdge, MIN_EXTERIOR_EXCESS};
pub use launch::{generate_launch_directions, launch_levels, mean_ray_spacing, MIN_LEVEL_RAYS};
pub use path::{
    path_id, Interaction, InteractionKind, LaunchConfig, PathKind, PathRecord, RxSphere,
    MAX_REFLECTIONS, MIN_RAY_COUNT,
};
pub use refine::{image_reflection_point, world_angles, Plane};
pub use sbr::{shoot_rays, ReflectionSequence};

use crate::accel::{Bvh, Ray};
use crate::antenna::AntennaSpec;
use crate::error::{Error, Result};
use crate::geom::{Point3, Scene, Vec3};
use refine::PathBuilder;

/// Find all propagation paths from one transmitter to each receiver.
///
/// The outer vector follows `rx_positions`; each inner list is sorted by delay,
/// then path id. Second-order reflection paths come from ray shooting followed
/// by exact image-method refinement; line-of-sight, first-order reflection and
/// diffraction paths are found deterministically.
pub fn trace_paths(
    scene: &Scene,
    bvh: &Bvh,
    tx: &AntennaSpec,
    rx_positions: &[Point3],
    cfg: &LaunchConfig,
) -> Result<Vec<Vec<PathRecord>>> {
    cfg.validate()?;
    tx.validate()?;
    if let Some(i) = rx_positions.iter().position(|p| !p.is_finite()) {
        return Err(Error::invalid(format!("receiver {i} has a non-finite position")));
    }
    check_outside(bvh, tx.position)?;

    let captures = shoot_rays(scene, bvh, tx.position, rx_positions, cfg);
    let builder = PathBuilder { scene, bvh, tx, cfg };

    rx_positions
        .par_iter()
        .enumerate()
        .map(|(i, &rx)| {
            let lo = captures.partition_point(|(r, _)| (*r as usize) < i);
            let hi = captures.partition_point(|(r, _)| (*r as usize) <= i);
            paths_for_receiver(&builder, rx, captures[lo..hi].iter().map(|(_, s)| s))
        })
        .collect()
}

fn paths_for_receiver<'s>(
    builder: &PathBuilder,
    rx: Point3,
    sequences: impl Iterator<Item = &'s ReflectionSequence>,
) -> Result<Vec<PathRecord>> {
    let mut paths = Vec::new();
    if rx.distance(builder.tx.position) > 0.0 {
        if let Some(p) = builder.line_of_sight(rx)? {
            paths.push(p);
        }
    }
    paths.extend(builder.first_order_paths(rx)?);
    // Single reflections were all tried above.
    for seq in sequences.filter(|s| s.len() > 1) {
        if let Some(p) = builder.refine(rx, seq)? {
            paths.push(p);
        }
    }
    if builder.cfg.enable_diffraction {
        paths.extend(builder.diffraction_paths(rx)?);
    }
    paths.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.path_id.cmp(&b.path_id)));
    // Distinct captured sequences can refine onto the same triangles.
    paths.dedup_by(|a, b| a.path_id == b.path_id && a.interactions == b.interactions);
    let mut seen = std::collections::HashSet::new();
    paths.retain(|p| seen.insert(p.path_id));
    Ok(paths)
}

/// Rejects transmitters enclosed by a closed mesh: a ray cast straight up must
/// not hit the inside of a surface first.
fn check_outside(bvh: &Bvh, p: Point3) -> Result<()> {
    if !p.is_finite() {
        return Err(Error::invalid("transmitter position is not finite"));
    }
    let up = Ray {
        origin: p,
        dir: Vec3::Z,
        t_min: 0.0,
        t_max: f64::INFINITY,
    };
    match bvh.intersect_nearest(&up) {
        Some(h) if !h.front_face => Err(Error::invalid(format!(
            "transmitter at ({:.2}, {:.2}, {:.2}) is inside mesh {}",
            p.x, p.y, p.z, h.mesh_id
        ))),
        _ => Ok(()),
    }
}
