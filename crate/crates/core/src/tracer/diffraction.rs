use super::edges::DiffractionEdge;
use super::path::{Interaction, InteractionKind, PathRecord};
use super::refine::{PathBuilder, Plane};
use crate::em::{knife_edge_loss, knife_edge_v, wavelength};
use crate::error::Result;
use crate::geom::{Point3, Vec3};

const EDGE_END_TOL: f64 = 1e-6;

/// Point on the edge where the path `s → P → r` is shortest (equal angles to the
/// edge on both sides). `None` if it falls outside the edge or an endpoint lies
/// on the edge line.
pub fn diffraction_point(edge: &DiffractionEdge, s: Point3, r: Point3) -> Option<Point3> {
    let e = edge.direction();
    let len = edge.length();
    let (ds, dr) = (s - edge.a, r - edge.a);
    let (as_, ar) = (ds.dot(e), dr.dot(e));
    let rs = (ds - e * as_).norm();
    let rr = (dr - e * ar).norm();
    if rs < 1e-9 || rr < 1e-9 {
        return None;
    }
    let t = as_ + (ar - as_) * rs / (rs + rr);
    (t > EDGE_END_TOL && t < len - EDGE_END_TOL).then(|| edge.a + e * t)
}

/// True if `x` lies strictly inside the solid wedge whose apex is `p`.
pub fn wedge_contains(edge: &DiffractionEdge, p: Point3, x: Point3) -> bool {
    edge.face_normals.len() == 2 && edge.face_normals.iter().all(|n| (x - p).dot(*n) < -1e-9)
}

/// True if the straight segment `s → r` passes through the wedge at `p`, judged
/// in the plane perpendicular to the edge.
pub fn obstructs(edge: &DiffractionEdge, p: Point3, s: Point3, r: Point3) -> bool {
    let e = edge.direction();
    let b1 = edge.face_dirs[0];
    let b2 = e.cross(b1);
    let flat = |x: Vec3| (x.dot(b1), x.dot(b2));
    let s2 = flat(s - p);
    let r2 = flat(r - p);
    let d = (r2.0 - s2.0, r2.1 - s2.1);
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 * b.1 - a.1 * b.0;
    edge.face_dirs.iter().any(|&u| {
        let u2 = flat(u);
        let denom = cross(d, u2);
        if denom.abs() < 1e-15 {
            return false;
        }
        let t = -cross(s2, u2) / denom;
        let hit = (s2.0 + t * d.0, s2.1 + t * d.1);
        (0.0..=1.0).contains(&t) && hit.0 * u2.0 + hit.1 * u2.1 > 0.0
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum GroundLeg {
    None,
    Before,
    After,
}

impl PathBuilder<'_> {
    /// All single-edge diffraction paths to `rx`, optionally combined with one
    /// specular bounce on the ground before or after the edge.
    pub fn diffraction_paths(&self, rx: Point3) -> Result<Vec<PathRecord>> {
        let tx = self.tx.position;
        let ground = self
            .scene
            .mesh_by_tag(crate::geom::GROUND_TAG)
            .filter(|_| self.cfg.max_reflections >= 1 && tx.z > 0.0 && rx.z > 0.0);
        let mirror = |p: Point3| Point3::new(p.x, p.y, -p.z);
        let lambda = wavelength(self.cfg.frequency_hz);
        let mut out = Vec::new();
        for (edge_id, edge) in self.scene.edges().iter().enumerate() {
            let legs: &[GroundLeg] = if ground.is_some() {
                &[GroundLeg::None, GroundLeg::Before, GroundLeg::After]
            } else {
                &[GroundLeg::None]
            };
            for &leg in legs {
                let (s, r) = match leg {
                    GroundLeg::None => (tx, rx),
                    GroundLeg::Before => (mirror(tx), rx),
                    GroundLeg::After => (tx, mirror(rx)),
                };
                let Some(p) = diffraction_point(edge, s, r) else { continue };
                if wedge_contains(edge, p, s) || wedge_contains(edge, p, r) || !obstructs(edge, p, s, r) {
                    continue;
                }
                let unfolded = s.distance(p) + p.distance(r);
                if unfolded > self.cfg.max_path_length {
                    continue;
                }
                let diff = Interaction {
                    kind: InteractionKind::Diffraction,
                    point: p,
                    mesh_id: edge.mesh_id,
                    primitive_id: edge_id,
                };
                let interactions = match (leg, ground) {
                    (GroundLeg::None, _) => vec![diff],
                    (_, None) => unreachable!(),
                    (_, Some(g)) => {
                        if p.z <= 1e-6 {
                            continue;
                        }
                        let plane = Plane {
                            point: Point3::ZERO,
                            normal: Vec3::Z,
                        };
                        let crossing = if leg == GroundLeg::Before {
                            plane.cross_segment(s, p)
                        } else {
                            plane.cross_segment(p, r)
                        };
                        let Some(q) = crossing else { continue };
                        let Some(tri) = self.locate(g, &plane, q) else { continue };
                        let bounce = Interaction {
                            kind: InteractionKind::Reflection,
                            point: q,
                            mesh_id: g,
                            primitive_id: tri,
                        };
                        if leg == GroundLeg::Before {
                            vec![bounce, diff]
                        } else {
                            vec![diff, bounce]
                        }
                    }
                };
                let mut prev = tx;
                let mut clear = true;
                for q in interactions.iter().map(|i| i.point).chain(std::iter::once(rx)) {
                    if !self.visible(prev, q) {
                        clear = false;
                        break;
                    }
                    prev = q;
                }
                if !clear {
                    continue;
                }
                let v = knife_edge_v(unfolded - s.distance(r), lambda, true);
                out.push(self.record(rx, interactions, knife_edge_loss(v))?);
            }
        }
        Ok(out)
    }
}
