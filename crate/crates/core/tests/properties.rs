mod common;

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use raylaunch_core::accel::{Bvh, Ray, SURFACE_EPS};
use raylaunch_core::analysis::rmse;
use raylaunch_core::antenna::{AntennaSpec, DirectionAngles, Pattern, Polarization};
use raylaunch_core::channel::{apply_filter, combine_transmitters, received_power, ChannelResult, FilterRule, PathFilterSpec};
use raylaunch_core::em::{fresnel_coefficients, knife_edge_loss, reflection_matrix, PolarimetricMatrix};
use raylaunch_core::geom::{
    enu_to_wgs84, extrude_footprint, wgs84_to_enu, Material, MaterialKind, Mesh, Point3, Scene, Vec3,
};
use raylaunch_core::io::{parse_scenario, read_results, write_results, ResultRow};
use raylaunch_core::sim::{simulate_per_transmitter, Transmitter};
use raylaunch_core::tracer::{trace_paths, InteractionKind, LaunchConfig, PathKind};

fn unit() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, 0.0..2.0 * PI).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        Vec3::new(r * phi.cos(), r * phi.sin(), z)
    })
}

fn point(extent: f64) -> impl Strategy<Value = Point3> {
    (-extent..extent, -extent..extent, -extent..extent).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn geodetic_round_trip(x in -1000.0..1000.0f64, y in -1000.0..1000.0f64, z in -20.0..80.0f64) {
        let o = origin();
        let p = Point3::new(x, y, z);
        let (lat, lon, alt) = enu_to_wgs84(p, &o);
        let back = wgs84_to_enu(lat, lon, alt, &o).unwrap();
        prop_assert!((back - p).norm() < 1e-6, "{:?} -> {:?}", p, back);
    }

    #[test]
    fn extruded_mesh_is_closed_above_floor(
        radii in prop::collection::vec(4.0..30.0f64, 3..12),
        height in 3.0..40.0f64,
    ) {
        // Star-shaped polygon: one vertex per equal angular step.
        let n = radii.len();
        let poly: Vec<[f64; 2]> = radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let a = 2.0 * PI * i as f64 / n as f64;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let mesh = extrude_footprint(&poly, height, Material::concrete(), "b").unwrap();
        let mut edges: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for ((a, b), count) in edges {
            let on_floor = mesh.vertices[a as usize].z == 0.0 && mesh.vertices[b as usize].z == 0.0;
            prop_assert!(count == 2 || (on_floor && count == 1), "edge ({a}, {b}) used {count} times");
        }
    }

    #[test]
    fn fresnel_coefficients_are_passive(
        theta in 0.0..(FRAC_PI_2 - 1e-9),
        eps_r in 1.0..80.0f64,
        loss in 0.0..200.0f64,
    ) {
        let (te, tm) = fresnel_coefficients(theta, Complex64::new(eps_r, -loss)).unwrap();
        prop_assert!(te.norm() <= 1.0 + 1e-12 && tm.norm() <= 1.0 + 1e-12, "{te} {tm}");
    }

    #[test]
    fn knife_edge_is_monotone(a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(knife_edge_loss(lo) <= knife_edge_loss(hi));
    }

    #[test]
    fn pec_cascade_is_unitary(d0 in unit(), normals in prop::collection::vec(unit(), 1..4)) {
        let pec = Material::perfect_conductor();
        let mut d = d0;
        let mut m = PolarimetricMatrix::identity();
        for n in normals {
            let n = if n.dot(d) > 0.0 { -n } else { n };
            prop_assume!(-d.dot(n) > 1e-6);
            m = reflection_matrix(d, n, &pec, 3.75e9).unwrap() * m;
            d = d.reflect(n).normalized();
        }
        let (s1, s2) = m.singular_values();
        prop_assert!((s1 - 1.0).abs() < 1e-9 && (s2 - 1.0).abs() < 1e-9, "{s1} {s2}");
    }

    #[test]
    fn sector_pattern_bounds_and_symmetry(
        hpbw_az in 5.0..170.0f64,
        hpbw_el in 5.0..170.0f64,
        az in -PI..PI,
        el in -FRAC_PI_2..FRAC_PI_2,
    ) {
        let spec = AntennaSpec {
            gain_dbi: 12.5,
            pattern: Pattern::Sector { hpbw_az, hpbw_el, front_back_db: 30.0, sidelobe_floor_db: 30.0 },
            orientation_deg: 0.0,
            tilt_deg: 0.0,
            position: Point3::ZERO,
            polarization: Polarization::Vertical,
        };
        let g = |azimuth, elevation| spec.gain_db(DirectionAngles { azimuth, elevation });
        prop_assert!(g(az, el) <= g(0.0, 0.0));
        prop_assert!(g(az, el) >= 12.5 - 30.0);
        prop_assert_eq!(g(az, el), g(-az, el));
        prop_assert_eq!(g(az, el), g(az, -el));
    }

    #[test]
    fn omni_pattern_ignores_azimuth(az1 in -PI..PI, az2 in -PI..PI, el in -FRAC_PI_2..FRAC_PI_2) {
        let spec = AntennaSpec {
            gain_dbi: 4.0,
            pattern: Pattern::Omni { hpbw_el: 78.0, floor_db: 30.0 },
            ..AntennaSpec::isotropic(Point3::ZERO)
        };
        let g = |azimuth| spec.gain_db(DirectionAngles { azimuth, elevation: el });
        prop_assert_eq!(g(az1), g(az2));
    }

    #[test]
    fn global_phase_leaves_power_unchanged(
        amps in prop::collection::vec((1e-9..1e-3f64, -PI..PI), 1..8),
        phi in -PI..PI,
    ) {
        let a: Vec<Complex64> = amps.iter().map(|&(m, p)| Complex64::from_polar(m, p)).collect();
        let rot: Vec<Complex64> = a.iter().map(|x| x * Complex64::from_polar(1.0, phi)).collect();
        let (p, q) = (received_power(&a, 43.0), received_power(&rot, 43.0));
        prop_assert!(p == q || (p - q).abs() < 1e-9, "{p} vs {q}");
    }

    #[test]
    fn single_path_power_ignores_phase(m in 1e-9..1e-3f64, p1 in -PI..PI, p2 in -PI..PI) {
        let a = received_power(&[Complex64::from_polar(m, p1)], 30.0);
        let b = received_power(&[Complex64::from_polar(m, p2)], 30.0);
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn combine_is_idempotent_and_order_free(
        powers in prop::collection::vec(prop_oneof![Just(f64::NEG_INFINITY), -140.0..-20.0f64], 1..6),
        seed in any::<u64>(),
    ) {
        let results: Vec<ChannelResult> = powers
            .iter()
            .enumerate()
            .map(|(t, &p)| ChannelResult {
                rx_index: 3,
                tx_index: t,
                tx_power_dbm: 43.0,
                paths: Vec::new(),
                h: Complex64::new(0.0, 0.0),
                power_dbm: p,
            })
            .collect();
        let best = combine_transmitters(&results).unwrap();
        prop_assert_eq!(&combine_transmitters(std::slice::from_ref(&best)).unwrap(), &best);
        let mut shuffled = results.clone();
        let n = shuffled.len();
        for i in 0..n {
            let j = (seed.rotate_left(i as u32 * 7) as usize + i) % n;
            shuffled.swap(i, j);
        }
        prop_assert_eq!(combine_transmitters(&shuffled).unwrap(), best);
    }

    #[test]
    fn rmse_identities(
        pairs in prop::collection::vec((-140.0..-30.0f64, -140.0..-30.0f64), 1..40),
        shift in -50.0..50.0f64,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert_eq!(rmse(&x, &x, true).unwrap().rmse_db, 0.0);
        prop_assert_eq!(rmse(&x, &x, false).unwrap().rmse_db, 0.0);
        let (a, b) = (rmse(&x, &y, false).unwrap(), rmse(&y, &x, false).unwrap());
        prop_assert!((a.rmse_db - b.rmse_db).abs() < 1e-9);
        prop_assert!(a.rmse_db >= 0.0 && a.residuals.len() == x.len());
        // Fitting is invariant under shifting the measurements.
        let y_shift: Vec<f64> = y.iter().map(|v| v + shift).collect();
        let (f, g) = (rmse(&x, &y, true).unwrap(), rmse(&x, &y_shift, true).unwrap());
        prop_assert!((f.rmse_db - g.rmse_db).abs() < 1e-9);
        prop_assert!((g.fitted_offset_db - f.fitted_offset_db - shift).abs() < 1e-9);
        // The fitted offset beats every offset on a scan.
        for k in -200..=200 {
            let c = f.fitted_offset_db + k as f64 * 0.05;
            let r = (x.iter().zip(&y).map(|(s, m)| (m - s - c).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
            prop_assert!(f.rmse_db <= r + 1e-9);
        }
    }

    #[test]
    fn result_rows_round_trip(
        rows in prop::collection::vec(
            (
                49.0..50.0f64,
                7.0..8.0f64,
                prop::option::of(-160.0..20.0f64),
                0usize..40,
                prop::option::of(prop_oneof![
                    Just(PathKind::LineOfSight),
                    Just(PathKind::Reflection),
                    Just(PathKind::Diffraction),
                ]),
            ),
            0..20,
        )
    ) {
        let rows: Vec<ResultRow> = rows
            .into_iter()
            .enumerate()
            .map(|(index, (lat, lon, power_dbm, path_count, strongest_path_kind))| ResultRow {
                index,
                lat,
                lon,
                power_dbm,
                path_count,
                strongest_path_kind,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("out.csv");
        write_results(&file, &rows).unwrap();
        let back = read_results(&file).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(a.index, b.index);
            prop_assert!((a.lat - b.lat).abs() <= 5e-8 && (a.lon - b.lon).abs() <= 5e-8);
            prop_assert_eq!(a.power_dbm.is_some(), b.power_dbm.is_some());
            if let (Some(x), Some(y)) = (a.power_dbm, b.power_dbm) {
                prop_assert!((x - y).abs() <= 1e-5 * x.abs().max(1.0));
            }
            prop_assert_eq!(a.path_count, b.path_count);
            prop_assert_eq!(a.strongest_path_kind, b.strongest_path_kind);
        }
    }

    #[test]
    fn random_triangles_match_brute_force(
        tris in prop::collection::vec((point(20.0), point(20.0), point(20.0)), 1..60),
        rays in prop::collection::vec((point(30.0), unit()), 20),
    ) {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (a, b, c) in tris {
            if (b - a).cross(c - a).norm() * 0.5 > 1e-6 {
                let k = vertices.len() as u32;
                vertices.extend([a, b, c]);
                triangles.push([k, k + 1, k + 2]);
            }
        }
        prop_assume!(!triangles.is_empty());
        let mesh = Mesh::new(vertices, triangles, Material::concrete(), "soup").unwrap();
        let scene = Scene::new(origin(), vec![mesh]).unwrap();
        let bvh = Bvh::build(&scene).unwrap();
        for (o, d) in rays {
            let ray = Ray { origin: o, dir: d, t_min: 0.0, t_max: f64::INFINITY };
            prop_assert_eq!(bvh.intersect_nearest(&ray), bvh.intersect_brute_force(&ray));
        }
    }
}

const DOC: &str = r#"schema_version = 1
name = "fuzz"

[origin]
lat = "49°25'25.5\"N"
lon = 7.7541

[materials.brick]
eps_r = 4.4
sigma = 0.05

[[buildings]]
id = "hall"
height = 12.0
material = "brick"
footprint = [[10.0, 10.0], [30.0, 10.0], [30.0, 25.0], [10.0, 25.0]]

[[trees]]
center = [40.0, 0.0]
size = [4.0, 4.0, 8.0]

[[transmitters]]
position = [0.0, 0.0, 22.0]
power_w = 20.0
pattern = { type = "sector", hpbw_az = 65.0, hpbw_el = 22.0 }

[receivers]
route = [[50.0, 0.0], [60.0, 5.0]]

[[filters]]
kind = "diffraction"
mesh = "hall"
"#;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    /// Corrupted documents give an error, never a panic.
    #[test]
    fn scenario_loading_is_total(cut in 0..DOC.len(), pos in 0..DOC.len(), byte in 32u8..127) {
        let mut bytes = DOC.as_bytes().to_vec();
        bytes[pos] = byte;
        bytes.truncate(cut.max(1));
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_scenario(&text, std::path::Path::new("."), "fuzz.scenario");
    }
}

struct Fixture {
    scene: Scene,
    bvh: Bvh,
}

fn campus() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| {
        let scene = small_campus(true);
        let bvh = build(&scene);
        Fixture { scene, bvh }
    })
}

fn outdoor_point() -> impl Strategy<Value = Point3> {
    (-60.0..70.0f64, -70.0..80.0f64, 0.5..3.0f64)
        .prop_map(|(x, y, z)| Point3::new(x, y, z))
        .prop_filter("outside buildings", |p| {
            let inside = |x0: f64, y0: f64, x1: f64, y1: f64| {
                p.x > x0 - 1.0 && p.x < x1 + 1.0 && p.y > y0 - 1.0 && p.y < y1 + 1.0
            };
            !(inside(-10.0, -10.0, 10.0, 10.0)
                || inside(25.0, -30.0, 45.0, 5.0)
                || inside(-40.0, 30.0, -15.0, 60.0)
                || inside(-50.0, -60.0, -20.0, -35.0)
                || inside(13.0, 28.0, 17.0, 32.0))
        })
}

fn rays(n: usize) -> LaunchConfig {
    LaunchConfig {
        ray_count: n,
        ..LaunchConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn traced_paths_are_specular_and_clear(rx in outdoor_point()) {
        let f = campus();
        let tx = AntennaSpec::isotropic(Point3::new(0.0, 0.0, 28.0));
        let paths = &trace_paths(&f.scene, &f.bvh, &tx, &[rx], &rays(20_000)).unwrap()[0];
        for p in paths {
            let v = p.vertices(tx.position, rx);
            for w in v.windows(2) {
                if let Some(seg) = Ray::segment(w[0], w[1], SURFACE_EPS) {
                    prop_assert!(f.bvh.intersect_nearest(&seg).is_none());
                }
            }
            for (k, it) in p.interactions.iter().enumerate() {
                if it.kind != InteractionKind::Reflection {
                    continue;
                }
                let n = f.scene.mesh(it.mesh_id).triangle_normal(it.primitive_id);
                let a_in = (v[k + 1] - v[k]).normalized().dot(n).abs().min(1.0).acos();
                let a_out = (v[k + 2] - v[k + 1]).normalized().dot(n).abs().min(1.0).acos();
                prop_assert!((a_in - a_out).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn swapping_ends_reverses_paths(a in outdoor_point(), b in outdoor_point()) {
        let f = campus();
        let c = LaunchConfig { enable_diffraction: false, ..rays(100_000) };
        let fwd = &trace_paths(&f.scene, &f.bvh, &AntennaSpec::isotropic(a), &[b], &c).unwrap()[0];
        let rev = &trace_paths(&f.scene, &f.bvh, &AntennaSpec::isotropic(b), &[a], &c).unwrap()[0];
        // Second-order captures depend on where rays start; single bounces and
        // line of sight are found exhaustively and must match exactly.
        let key = |p: &raylaunch_core::tracer::PathRecord, reverse: bool| {
            let mut s: Vec<(usize, usize)> = p.interactions.iter().map(|i| (i.mesh_id, i.primitive_id)).collect();
            if reverse {
                s.reverse();
            }
            (s, p.total_length)
        };
        let mut x: Vec<_> = fwd.iter().filter(|p| p.reflection_count() <= 1).map(|p| key(p, false)).collect();
        let mut y: Vec<_> = rev.iter().filter(|p| p.reflection_count() <= 1).map(|p| key(p, true)).collect();
        x.sort_by(|p, q| p.0.cmp(&q.0));
        y.sort_by(|p, q| p.0.cmp(&q.0));
        prop_assert_eq!(x.len(), y.len());
        for (p, q) in x.iter().zip(&y) {
            prop_assert_eq!(&p.0, &q.0);
            prop_assert!((p.1 - q.1).abs() <= 1e-9 * p.1);
        }
    }

    #[test]
    fn filtering_never_adds_paths(
        rx in outdoor_point(),
        kind in prop::option::of(prop_oneof![Just(InteractionKind::Reflection), Just(InteractionKind::Diffraction)]),
        mesh_id in prop::option::of(0usize..6),
    ) {
        let f = campus();
        let tx = Transmitter {
            label: "t".into(),
            antenna: AntennaSpec::isotropic(Point3::new(0.0, 0.0, 28.0)),
            power_w: 20.0,
        };
        let rx_ant = AntennaSpec::isotropic(Point3::ZERO);
        let all = simulate_per_transmitter(
            &f.scene, &f.bvh, std::slice::from_ref(&tx), &rx_ant, &[rx], &rays(20_000), &PathFilterSpec::default(),
        )
        .unwrap();
        let before = &all[0][0];
        let spec = PathFilterSpec { rules: vec![FilterRule { kind, mesh_id, ..Default::default() }] };
        prop_assume!(spec.validate(&f.scene).is_ok());
        let after = apply_filter(before, &spec, &f.scene).unwrap();
        prop_assert!(after.paths.len() <= before.paths.len());
        prop_assert!(after.paths.iter().all(|p| !spec.matches(&p.path, &f.scene)));
    }
}

#[test]
fn blocker_material_never_reflects() {
    let m = Material::blocker();
    assert_eq!(m.kind, MaterialKind::Blocker);
    assert!(reflection_matrix(Vec3::new(1.0, 0.0, -1.0).normalized(), Vec3::Z, &m, 3.75e9).is_err());
}
