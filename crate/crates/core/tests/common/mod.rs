#![allow(dead_code)]

use raylaunch_core::accel::Bvh;
use raylaunch_core::geom::{
    extrude_footprint, ground_plane, make_tree_blocker, GeoOrigin, Material, Mesh, Scene, Vec3,
};

pub fn origin() -> GeoOrigin {
    GeoOrigin::new(49.423_75, 7.754_083, 0.0).unwrap()
}

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<[f64; 2]> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

/// Far-away absorber so a scene can be built with nothing else in it.
pub fn far_blocker() -> Mesh {
    make_tree_blocker(Vec3::new(1e5, 1e5, 0.0), 1.0, 1.0, 1.0).unwrap()
}

/// Vertical screen in the plane y = 0, spanning |x| ≤ half_width, 0 ≤ z ≤ height.
pub fn screen(half_width: f64, height: f64) -> Mesh {
    let w = half_width;
    Mesh::new(
        vec![
            Vec3::new(-w, 0.0, 0.0),
            Vec3::new(w, 0.0, 0.0),
            Vec3::new(w, 0.0, height),
            Vec3::new(-w, 0.0, height),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
        Material::concrete(),
        "screen",
    )
    .unwrap()
}

/// A handful of buildings, one tree and ground.
pub fn small_campus(with_tree: bool) -> Scene {
    let mut meshes = vec![
        extrude_footprint(&rect(-10.0, -10.0, 10.0, 10.0), 20.0, Material::concrete(), "tx_building").unwrap(),
        extrude_footprint(&rect(25.0, -30.0, 45.0, 5.0), 12.0, Material::concrete(), "east").unwrap(),
        extrude_footprint(
            &[[-40.0, 30.0], [-15.0, 30.0], [-15.0, 45.0], [-25.0, 45.0], [-25.0, 60.0], [-40.0, 60.0]],
            15.0,
            Material::concrete(),
            "north_l",
        )
        .unwrap(),
        extrude_footprint(&rect(-50.0, -60.0, -20.0, -35.0), 9.0, Material::concrete(), "south").unwrap(),
    ];
    if with_tree {
        meshes.push(make_tree_blocker(Vec3::new(15.0, 30.0, 0.0), 4.0, 4.0, 8.0).unwrap());
    }
    meshes.push(ground_plane(500.0, Material::ground()).unwrap());
    Scene::new(origin(), meshes).unwrap()
}

pub fn build(scene: &Scene) -> Bvh {
    Bvh::build(scene).unwrap()
}
