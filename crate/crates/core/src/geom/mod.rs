//! Scene construction: coordinate transforms, footprint extrusion, blockers
//! and material bookkeeping.

mod geodetic;
mod material;
mod mesh;
mod scene;
mod vec;

pub use geodetic::{enu_to_wgs84, parse_dms, wgs84_to_enu, GeoOrigin};
pub(crate) use geodetic::check_lat_lon;
pub use material::{Material, MaterialKind};
pub use mesh::{
    clean_footprint, extrude_footprint, ground_plane, make_tree_blocker, signed_area2,
    triangulate_polygon, Mesh, GROUND_TAG, MIN_TRIANGLE_AREA, TREE_TAG,
};
pub use scene::Scene;
pub use vec::{Aabb, Point3, Vec3};
