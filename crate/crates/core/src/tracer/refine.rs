use super::path::{delay, path_id, Interaction, InteractionKind, LaunchConfig, PathRecord};
use super::sbr::ReflectionSequence;
use crate::accel::{Bvh, Ray, SURFACE_EPS};
use crate::antenna::{world_to_antenna_frame, AntennaSpec, DirectionAngles};
use crate::em::{reflection_matrix, PolarimetricMatrix};
use crate::error::{Error, Result};
use crate::geom::{Point3, Scene, Vec3};

/// Plane through `point` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Point3,
    pub normal: Vec3,
}

impl Plane {
    pub fn signed_distance(&self, p: Point3) -> f64 {
        (p - self.point).dot(self.normal)
    }

    pub fn mirror(&self, p: Point3) -> Point3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Intersection of the segment `a → b` with the plane, strictly inside the segment.
    pub fn cross_segment(&self, a: Point3, b: Point3) -> Option<Point3> {
        let (da, db) = (self.signed_distance(a), self.signed_distance(b));
        if da * db >= 0.0 {
            return None;
        }
        Some(a + (b - a) * (da / (da - db)))
    }

    fn coincides(&self, o: &Plane) -> bool {
        self.normal.dot(o.normal).abs() > 1.0 - 1e-9 && self.signed_distance(o.point).abs() < 1e-6
    }
}

/// Specular point for a single reflection from `a` to `b` off `plane`. Both
/// endpoints must be strictly on the same side.
pub fn image_reflection_point(a: Point3, b: Point3, plane: &Plane) -> Option<Point3> {
    if plane.signed_distance(a) * plane.signed_distance(b) <= 0.0 {
        return None;
    }
    plane.cross_segment(plane.mirror(a), b)
}

/// Angles of a world direction: azimuth clockwise from north, elevation above horizon.
pub fn world_angles(d: Vec3) -> DirectionAngles {
    DirectionAngles {
        azimuth: d.x.atan2(d.y),
        elevation: d.z.clamp(-1.0, 1.0).asin(),
    }
}

/// Shared state for turning geometric candidates into validated paths.
pub(crate) struct PathBuilder<'a> {
    pub scene: &'a Scene,
    pub bvh: &'a Bvh,
    pub tx: &'a AntennaSpec,
    pub cfg: &'a LaunchConfig,
}

impl<'a> PathBuilder<'a> {
    pub fn plane(&self, mesh_id: usize, tri: usize) -> Plane {
        let mesh = self.scene.mesh(mesh_id);
        Plane {
            point: mesh.triangle(tri)[0],
            normal: mesh.triangle_normal(tri),
        }
    }

    /// Lowest-index triangle of the mesh lying in `plane` and containing `p`.
    pub fn locate(&self, mesh_id: usize, plane: &Plane, p: Point3) -> Option<usize> {
        let mesh = self.scene.mesh(mesh_id);
        (0..mesh.triangles.len()).find(|&t| {
            let n = mesh.triangle_normal(t);
            let [v0, v1, v2] = mesh.triangle(t);
            if n.dot(plane.normal).abs() < 1.0 - 1e-9 || plane.signed_distance(v0).abs() > 1e-6 {
                return false;
            }
            point_in_triangle(p, v0, v1, v2, n)
        })
    }

    pub fn visible(&self, a: Point3, b: Point3) -> bool {
        Ray::segment(a, b, SURFACE_EPS).is_none_or(|r| !self.bvh.occluded(&r))
    }

    pub fn line_of_sight(&self, rx: Point3) -> Result<Option<PathRecord>> {
        if self.visible(self.tx.position, rx) {
            self.record(rx, Vec::new(), 0.0).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Exact specular path for a captured reflection sequence, if it exists
    /// and is unobstructed.
    pub fn refine(&self, rx: Point3, seq: &ReflectionSequence) -> Result<Option<PathRecord>> {
        let tx = self.tx.position;
        let planes: Vec<(usize, Plane)> = seq
            .as_slice()
            .iter()
            .map(|&(m, t)| (m as usize, self.plane(m as usize, t as usize)))
            .collect();
        let points = match planes.as_slice() {
            [(_, p1)] => match image_reflection_point(tx, rx, p1) {
                Some(q) => vec![q],
                None => return Ok(None),
            },
            [(_, p1), (_, p2)] => {
                if p1.coincides(p2) {
                    return Ok(None);
                }
                let i1 = p1.mirror(tx);
                let i2 = p2.mirror(i1);
                let Some(q2) = p2.cross_segment(i2, rx) else { return Ok(None) };
                let Some(q1) = p1.cross_segment(i1, q2) else { return Ok(None) };
                let same_side = |pl: &Plane, a: Point3, b: Point3| {
                    pl.signed_distance(a) * pl.signed_distance(b) > 0.0
                };
                if !same_side(p1, tx, q2) || !same_side(p2, q1, rx) {
                    return Ok(None);
                }
                vec![q1, q2]
            }
            _ => return Ok(None),
        };

        let mut interactions = Vec::with_capacity(points.len());
        for ((mesh_id, plane), &q) in planes.iter().zip(&points) {
            let Some(tri) = self.locate(*mesh_id, plane, q) else { return Ok(None) };
            interactions.push(Interaction {
                kind: InteractionKind::Reflection,
                point: q,
                mesh_id: *mesh_id,
                primitive_id: tri,
            });
        }
        let mut prev = tx;
        for &q in points.iter().chain(std::iter::once(&rx)) {
            if !self.visible(prev, q) {
                return Ok(None);
            }
            prev = q;
        }
        let rec = self.record(rx, interactions, 0.0)?;
        Ok((rec.total_length <= self.cfg.max_path_length).then_some(rec))
    }

    /// Every single-reflection path to `rx`, found by testing each reflecting
    /// triangle's specular point directly. Unlike ray capture this does not
    /// depend on launch density, so surfaces seen only through a narrow gap
    /// are not missed.
    pub fn first_order_paths(&self, rx: Point3) -> Result<Vec<PathRecord>> {
        let tx = self.tx.position;
        let mut out = Vec::new();
        if self.cfg.max_reflections == 0 {
            return Ok(out);
        }
        for (m, mesh) in self.scene.meshes().iter().enumerate() {
            if mesh.material.is_blocker() {
                continue;
            }
            for t in 0..mesh.triangles.len() {
                let plane = self.plane(m, t);
                let Some(q) = image_reflection_point(tx, rx, &plane) else { continue };
                let [v0, v1, v2] = mesh.triangle(t);
                if !point_in_triangle(q, v0, v1, v2, plane.normal) {
                    continue;
                }
                let seq = ReflectionSequence::from_slice(&[(m as u32, t as u32)]);
                if let Some(p) = self.refine(rx, &seq)? {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    /// Assemble a path record from validated interaction points.
    pub fn record(
        &self,
        rx: Point3,
        interactions: Vec<Interaction>,
        diffraction_loss_db: f64,
    ) -> Result<PathRecord> {
        let tx = self.tx.position;
        let mut pts = Vec::with_capacity(interactions.len() + 2);
        pts.push(tx);
        pts.extend(interactions.iter().map(|i| i.point));
        pts.push(rx);
        let dirs: Vec<Vec3> = pts.windows(2).map(|w| (w[1] - w[0]).normalized()).collect();
        let total_length: f64 = pts.windows(2).map(|w| w[0].distance(w[1])).sum();
        if !(total_length.is_finite() && total_length >= tx.distance(rx) * (1.0 - 1e-12)) {
            return Err(Error::Invariant(format!(
                "path length {total_length} shorter than the direct distance {}",
                tx.distance(rx)
            )));
        }

        let mut t = PolarimetricMatrix::identity();
        for (k, it) in interactions.iter().enumerate() {
            if it.kind == InteractionKind::Reflection {
                let mesh = self.scene.mesh(it.mesh_id);
                let d_in = dirs[k];
                let mut n = mesh.triangle_normal(it.primitive_id);
                if n.dot(d_in) > 0.0 {
                    n = -n;
                }
                t = reflection_matrix(d_in, n, &mesh.material, self.cfg.frequency_hz)? * t;
            }
        }
        if !t.is_finite() {
            return Err(Error::Invariant("non-finite polarimetric matrix".into()));
        }

        let departure_dir = dirs[0];
        let arrival_dir = *dirs.last().expect("at least one segment");
        Ok(PathRecord {
            path_id: path_id(&interactions),
            interactions,
            total_length,
            tau: delay(total_length),
            departure_dir,
            arrival_dir,
            aod: world_to_antenna_frame(departure_dir, self.tx),
            aoa: world_angles(-arrival_dir),
            polarimetric: t,
            diffraction_loss_db,
        })
    }
}

fn point_in_triangle(p: Point3, v0: Point3, v1: Point3, v2: Point3, n: Vec3) -> bool {
    let tol = -1e-9;
    let scale = (v1 - v0).cross(v2 - v0).dot(n);
    if scale <= 0.0 {
        return false;
    }
    let w0 = (v1 - p).cross(v2 - p).dot(n) / scale;
    let w1 = (v2 - p).cross(v0 - p).dot(n) / scale;
    let w2 = (v0 - p).cross(v1 - p).dot(n) / scale;
    w0 >= tol && w1 >= tol && w2 >= tol
}
