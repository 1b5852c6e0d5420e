use super::geodetic::GeoOrigin;
use super::mesh::Mesh;
use super::vec::{Aabb, Point3};
use crate::error::{Error, Result};
use crate::tracer::{find_diffraction_edges, DiffractionEdge};

/// Immutable collection of meshes plus the diffraction edges derived from them.
#[derive(Debug, Clone)]
pub struct Scene {
    origin: GeoOrigin,
    meshes: Vec<Mesh>,
    edges: Vec<DiffractionEdge>,
    bounds: Aabb,
}

impl Scene {
    pub fn new(origin: GeoOrigin, meshes: Vec<Mesh>) -> Result<Self> {
        origin.validate()?;
        if meshes.is_empty() {
            return Err(Error::invalid("scene needs at least one mesh"));
        }
        for m in &meshes {
            m.validate()?;
        }
        let bounds = meshes.iter().fold(Aabb::EMPTY, |b, m| b.union(m.aabb()));
        let edges = find_diffraction_edges(&meshes);
        Ok(Scene {
            origin,
            meshes,
            edges,
            bounds,
        })
    }

    pub fn origin(&self) -> &GeoOrigin {
        &self.origin
    }

    pub fn meshes(&self) -> &[Mesh] {
        &self.meshes
    }

    pub fn mesh(&self, id: usize) -> &Mesh {
        &self.meshes[id]
    }

    pub fn edges(&self) -> &[DiffractionEdge] {
        &self.edges
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn triangle_count(&self) -> usize {
        self.meshes.iter().map(|m| m.triangles.len()).sum()
    }

    pub fn triangle(&self, mesh_id: usize, tri_id: usize) -> [Point3; 3] {
        self.meshes[mesh_id].triangle(tri_id)
    }

    pub fn mesh_by_tag(&self, tag: &str) -> Option<usize> {
        self.meshes.iter().position(|m| m.tag == tag)
    }
}
