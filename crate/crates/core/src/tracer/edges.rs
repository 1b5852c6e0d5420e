use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geom::{Mesh, Point3, Vec3};

/// Minimum exterior dihedral angle beyond π for an edge to diffract, radians.
pub const MIN_EXTERIOR_EXCESS: f64 = 0.1;

/// A convex silhouette edge of a building mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffractionEdge {
    pub mesh_id: usize,
    pub a: Point3,
    pub b: Point3,
    /// Outward normals of the adjacent faces (one entry for a free boundary edge).
    pub face_normals: Vec<Vec3>,
    /// Unit directions lying in each adjacent face, perpendicular to the edge and
    /// pointing away from it into the face.
    pub face_dirs: Vec<Vec3>,
    /// Exterior dihedral angle, radians (2π for a free boundary edge).
    pub exterior_angle: f64,
}

impl DiffractionEdge {
    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn direction(&self) -> Vec3 {
        (self.b - self.a).normalized()
    }
}

/// Collect diffracting edges from every building mesh.
///
/// Shared edges qualify when their exterior dihedral exceeds π + 0.1 rad; free
/// boundary edges (roof rims of open shells, screens) qualify unless they rest
/// on the ground. Ground and blocker meshes contribute no edges.
pub fn find_diffraction_edges(meshes: &[Mesh]) -> Vec<DiffractionEdge> {
    let mut out = Vec::new();
    for (mesh_id, mesh) in meshes.iter().enumerate() {
        if mesh.is_ground() || mesh.material.is_blocker() {
            continue;
        }
        // edge key → (triangle index, opposite vertex)
        let mut faces: BTreeMap<(u32, u32), Vec<(usize, u32)>> = BTreeMap::new();
        for (ti, t) in mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                let (i, j, opp) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                faces.entry((i.min(j), i.max(j))).or_default().push((ti, opp));
            }
        }
        for ((i, j), adj) in faces {
            let a = mesh.vertices[i as usize];
            let b = mesh.vertices[j as usize];
            let e = (b - a).normalized();
            let in_face = |opp: u32| {
                let o = mesh.vertices[opp as usize] - a;
                (o - e * o.dot(e)).normalized()
            };
            match adj.as_slice() {
                [(t1, _)] => {
                    if a.z.abs() <= 1e-9 && b.z.abs() <= 1e-9 {
                        continue;
                    }
                    let (_, opp) = adj[0];
                    out.push(DiffractionEdge {
                        mesh_id,
                        a,
                        b,
                        face_normals: vec![mesh.triangle_normal(*t1)],
                        face_dirs: vec![in_face(opp)],
                        exterior_angle: 2.0 * PI,
                    });
                }
                [(t1, o1), (t2, o2)] => {
                    let n1 = mesh.triangle_normal(*t1);
                    let n2 = mesh.triangle_normal(*t2);
                    let between = n1.dot(n2).clamp(-1.0, 1.0).acos();
                    let convex = n1.dot(mesh.vertices[*o2 as usize] - a) < 0.0;
                    let exterior = if convex { PI + between } else { PI - between };
                    if exterior > PI + MIN_EXTERIOR_EXCESS {
                        out.push(DiffractionEdge {
                            mesh_id,
                            a,
                            b,
                            face_normals: vec![n1, n2],
                            face_dirs: vec![in_face(*o1), in_face(*o2)],
                            exterior_angle: exterior,
                        });
                    }
                }
                _ => {}
            }
        }
    }
    out
}
