//! Generates the bundled synthetic campus: building footprints (GeoJSON),
//! the three refinement-stage scenario files and a synthetic measurement trace.
//!
//! Usage: `cargo run --release -p raylaunch-cli --example gen_campus -- [OUT_DIR]`
//!
//! The "measured" powers are the trees + filter simulation plus seeded
//! Gaussian noise. Route positions without any path in that simulation are
//! dropped, the way a handset logs nothing while out of coverage.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use raylaunch_core::accel::build_bvh;
use raylaunch_core::analysis::{rmse, MeasurementTrace, TraceSample};
use raylaunch_core::geom::{enu_to_wgs84, parse_dms, wgs84_to_enu, GeoOrigin, Point3};
use raylaunch_core::io::{load_scenario, write_trace_csv};
use raylaunch_core::sim::simulate;
use serde_json::json;

const SEED: u64 = 0x5eed_0375;
const NOISE_SEED: u64 = 0x7ace_0003;
const NOISE_SIGMA_DB: f64 = 3.0;
const ROUTE_POINTS: usize = 168;
const ROUTE_STEP_M: f64 = 1.1;

const TX1_LAT: &str = "49°25'25.5\"N";
const TX1_LON: &str = "7°45'14.7\"E";
const TX2_LAT: &str = "49°25'25.2\"N";
const TX2_LON: &str = "7°45'15.4\"E";

/// Route waypoints, east/north metres.
const ROUTE: [[f64; 2]; 4] = [[62.0, -40.0], [170.0, -48.0], [170.0, -150.0], [240.0, -150.0]];
/// Probability of a tree at each slot along each route leg.
const TREE_FILL: [f64; 3] = [0.8, 0.4, 0.6];

const TRACE_FILE: &str = "campus_trace.csv";
const FOOTPRINT_FILE: &str = "campus_buildings.geojson";

struct Building {
    id: String,
    height: f64,
    ring: Vec<[f64; 2]>,
}

struct Tree {
    center: [f64; 2],
    size: [f64; 3],
}

fn rotate(p: [f64; 2], c: [f64; 2], ang: f64) -> [f64; 2] {
    let (s, co) = ang.sin_cos();
    [c[0] + p[0] * co - p[1] * s, c[1] + p[0] * s + p[1] * co]
}

fn rect(cx: f64, cy: f64, w: f64, d: f64, ang: f64) -> Vec<[f64; 2]> {
    [[-w / 2.0, -d / 2.0], [w / 2.0, -d / 2.0], [w / 2.0, d / 2.0], [-w / 2.0, d / 2.0]]
        .into_iter()
        .map(|p| rotate(p, [cx, cy], ang))
        .collect()
}

/// Counter-clockwise footprint of a random plan type, local frame centred at 0.
fn random_shape(rng: &mut ChaCha8Rng, w: f64, d: f64) -> Vec<[f64; 2]> {
    let (hw, hd) = (w / 2.0, d / 2.0);
    match rng.random_range(0..5) {
        0 => vec![[-hw, -hd], [hw, -hd], [hw, hd], [-hw, hd]],
        1 => {
            let c = rng.random_range(1.5..(hw.min(hd) * 0.4));
            vec![
                [-hw + c, -hd],
                [hw - c, -hd],
                [hw, -hd + c],
                [hw, hd - c],
                [hw - c, hd],
                [-hw + c, hd],
                [-hw, hd - c],
                [-hw, -hd + c],
            ]
        }
        2 => {
            // L
            let a = rng.random_range(0.35..0.65) * w;
            let b = rng.random_range(0.35..0.65) * d;
            vec![[-hw, -hd], [hw, -hd], [hw, -hd + b], [-hw + a, -hd + b], [-hw + a, hd], [-hw, hd]]
        }
        3 => {
            // U, open to the north
            let arm = rng.random_range(0.25..0.35) * w;
            let base = rng.random_range(0.3..0.5) * d;
            vec![
                [-hw, -hd],
                [hw, -hd],
                [hw, hd],
                [hw - arm, hd],
                [hw - arm, -hd + base],
                [-hw + arm, -hd + base],
                [-hw + arm, hd],
                [-hw, hd],
            ]
        }
        _ => {
            // T
            let stem = rng.random_range(0.3..0.5) * w;
            let bar = rng.random_range(0.3..0.5) * d;
            vec![
                [-stem / 2.0, -hd],
                [stem / 2.0, -hd],
                [stem / 2.0, hd - bar],
                [hw, hd - bar],
                [hw, hd],
                [-hw, hd],
                [-hw, hd - bar],
                [-stem / 2.0, hd - bar],
            ]
        }
    }
}

fn bbox(ring: &[[f64; 2]]) -> [f64; 4] {
    ring.iter().fold([f64::MAX, f64::MAX, f64::MIN, f64::MIN], |b, p| {
        [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])]
    })
}

fn overlaps(a: [f64; 4], b: [f64; 4]) -> bool {
    a[0] < b[2] && b[0] < a[2] && a[1] < b[3] && b[1] < a[3]
}

fn expand(b: [f64; 4], m: f64) -> [f64; 4] {
    [b[0] - m, b[1] - m, b[2] + m, b[3] + m]
}

fn layout(tx2: [f64; 2]) -> (Vec<Building>, Vec<Tree>) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut buildings = Vec::new();

    // Both sector antennas sit near the ends of one hall.
    let axis = [tx2[0], tx2[1]];
    let len = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
    let ang = axis[1].atan2(axis[0]);
    let mid = [axis[0] / 2.0, axis[1] / 2.0];
    buildings.push(Building {
        id: "rrh_hall".into(),
        height: 18.0,
        ring: rect(mid[0], mid[1], len + 3.0, 12.0, ang),
    });
    // Taller neighbour in the TX2 beam; its roof edge feeds the plaza behind it.
    buildings.push(Building {
        id: "neighbor".into(),
        height: 19.0,
        ring: rect(45.0, -28.0, 22.0, 16.0, ang),
    });

    // Wall facing the transmitters across the plaza.
    buildings.push(Building {
        id: "library".into(),
        height: 16.0,
        ring: rect(108.0, -22.0, 26.0, 14.0, 0.0),
    });

    let mut reserved: Vec<[f64; 4]> = buildings.iter().map(|b| expand(bbox(&b.ring), 6.0)).collect();
    // Streets along the route, with room for the tree rows.
    for w in ROUTE.windows(2) {
        let b = [w[0][0].min(w[1][0]), w[0][1].min(w[1][1]), w[0][0].max(w[1][0]), w[0][1].max(w[1][1])];
        reserved.push(expand(b, 14.0));
    }
    // Plaza at the route start.
    reserved.push([55.0, -70.0, 95.0, -38.0]);

    let cell = 38.0;
    let mut n = 0;
    for j in -6..4 {
        for i in -5..8 {
            let cx = i as f64 * cell + rng.random_range(-6.0..6.0);
            let cy = j as f64 * cell + rng.random_range(-6.0..6.0);
            let w = rng.random_range(16.0..30.0);
            let d = rng.random_range(14.0..26.0);
            let rot = rng.random_range(-0.25..0.25);
            let height = (rng.random_range(8.0..22.0_f64) * 2.0).round() / 2.0;
            let shape = random_shape(&mut rng, w, d);
            let ring: Vec<[f64; 2]> = shape.into_iter().map(|p| rotate(p, [cx, cy], rot)).collect();
            let bb = bbox(&ring);
            if reserved.iter().any(|r| overlaps(*r, bb)) {
                continue;
            }
            reserved.push(expand(bb, 3.0));
            n += 1;
            buildings.push(Building {
                id: format!("b{n:03}"),
                height,
                ring,
            });
        }
    }

    // Tree rows along both street sides, with irregular gaps.
    let mut trees = Vec::new();
    // Cluster screening the plaza from the north-west at street level.
    for k in 0..5 {
        trees.push(Tree {
            center: [52.0 + 5.5 * k as f64, -47.0 - 3.0 * k as f64],
            size: [5.0, 5.0, 12.0],
        });
    }
    for (w, fill) in ROUTE.windows(2).zip(TREE_FILL) {
        let (a, b) = (w[0], w[1]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let l = (dx * dx + dy * dy).sqrt();
        let (ux, uy) = (dx / l, dy / l);
        let mut s = 6.0;
        while s < l - 4.0 {
            for side in [-1.0, 1.0] {
                if rng.random_bool(fill) {
                    let off = side * rng.random_range(7.5..9.5);
                    let size = rng.random_range(4.0..6.5);
                    trees.push(Tree {
                        center: [a[0] + ux * s - uy * off, a[1] + uy * s + ux * off],
                        size: [size, size, (rng.random_range(10.0..16.0_f64) * 2.0).round() / 2.0],
                    });
                }
            }
            s += rng.random_range(7.0..10.0);
        }
    }
    (buildings, trees)
}

fn route_points() -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    let mut carry = 0.0;
    for w in ROUTE.windows(2) {
        let (a, b) = (w[0], w[1]);
        let l = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let mut s = carry;
        while s <= l {
            let t = s / l;
            pts.push([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
            s += ROUTE_STEP_M;
        }
        carry = s - l;
    }
    pts
}

fn footprint_json(buildings: &[Building], origin: &GeoOrigin) -> String {
    let features: Vec<_> = buildings
        .iter()
        .map(|b| {
            let mut ring: Vec<[f64; 2]> = b
                .ring
                .iter()
                .map(|p| {
                    let (lat, lon, _) = enu_to_wgs84(Point3::new(p[0], p[1], 0.0), origin);
                    [(lon * 1e9).round() / 1e9, (lat * 1e9).round() / 1e9]
                })
                .collect();
            ring.push(ring[0]);
            json!({
                "type": "Feature",
                "properties": { "id": b.id, "building": "university", "height": b.height },
                "geometry": { "type": "Polygon", "coordinates": [ring] }
            })
        })
        .collect();
    let doc = json!({ "type": "FeatureCollection", "features": features });
    serde_json::to_string_pretty(&doc).expect("static document") + "\n"
}

fn scenario_text(name: &str, description: &str, trees: Option<&[Tree]>, filter: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {description}");
    let _ = writeln!(s, "# Generated by the gen_campus example; edit the generator, not this file.\n");
    let _ = writeln!(s, "schema_version = 1");
    let _ = writeln!(s, "name = \"{name}\"\n");
    let _ = writeln!(s, "[origin]\nlat = \"{}\"\nlon = \"{}\"\nalt = 0.0\n", esc(TX1_LAT), esc(TX1_LON));
    s.push_str(
        "[simulation]\nray_count = 200000\nmax_reflections = 2\nenable_diffraction = true\n\
         max_path_length = 3000.0\nfrequency_hz = 3.75e9\nrx_sphere = { mode = \"adaptive\", scale = 2.0 }\n\n",
    );
    s.push_str("[ground]\nenabled = true\nhalf_extent = 1000.0\nmaterial = \"ground\"\n\n");
    let _ = writeln!(s, "[footprints]\npath = \"{FOOTPRINT_FILE}\"\nmaterial = \"concrete\"\n");
    for (label, lat, lon, az, tilt) in [
        ("TX1", TX1_LAT, TX1_LON, 330.0, 10.0),
        ("TX2", TX2_LAT, TX2_LON, 124.0, 1.0),
    ] {
        let _ = writeln!(
            s,
            "[[transmitters]]\nlabel = \"{label}\"\ngeo = {{ lat = \"{}\", lon = \"{}\", height = 22.0 }}\n\
             power_w = 20.0\ngain_dbi = 12.5\npattern = {{ type = \"sector\", hpbw_az = 65.0, hpbw_el = 22.0 }}\n\
             orientation_deg = {az:.1}\ntilt_deg = {tilt:.1}\npolarization = \"vertical\"\n",
            esc(lat),
            esc(lon)
        );
    }
    s.push_str("[receiver_antenna]\ngain_dbi = 4.0\npattern = { type = \"omni\" }\npolarization = \"vertical\"\n\n");
    let _ = writeln!(s, "[receivers]\nheight = 0.2\nroute_csv = \"{TRACE_FILE}\"\n");
    if let Some(trees) = trees {
        for t in trees {
            let _ = writeln!(
                s,
                "[[trees]]\ncenter = [{:.2}, {:.2}]\nsize = [{:.2}, {:.2}, {:.1}]\n",
                t.center[0], t.center[1], t.size[0], t.size[1], t.size[2]
            );
        }
    }
    if filter {
        s.push_str(
            "# The transmitter hall stands on lower terrain than its neighbour, so the\n\
             # roof-edge diffraction over the neighbour cannot exist in reality.\n\
             [[filters]]\nkind = \"diffraction\"\nmesh = \"neighbor\"\n",
        );
    }
    s
}

fn esc(s: &str) -> String {
    s.replace('"', "\\\"")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap_or_else(|e| panic!("writing {name}: {e}"));
}

fn powers(dir: &Path, file: &str) -> Vec<f64> {
    let sc = load_scenario(&dir.join(file)).expect("generated scenario loads");
    let bvh = build_bvh(&sc.scene).expect("bvh");
    let rx = sc.receiver_points().expect("route");
    let res = simulate(&sc.scene, &bvh, &sc.transmitters, &sc.rx_antenna, &rx, &sc.config, &sc.filter)
        .expect("simulation");
    eprintln!("{file}: {} triangles, {} receivers", sc.scene.triangle_count(), rx.len());
    res.iter().map(|r| r.power_dbm).collect()
}

fn write_route(dir: &Path, origin: &GeoOrigin, pts: &[[f64; 2]], power: &[f64]) {
    let samples = pts
        .iter()
        .zip(power)
        .map(|(p, &power_dbm)| {
            let (lat, lon, _) = enu_to_wgs84(Point3::new(p[0], p[1], 0.0), origin);
            TraceSample {
                lat: (lat * 1e7).round() / 1e7,
                lon: (lon * 1e7).round() / 1e7,
                power_dbm,
                timestamp: None,
            }
        })
        .collect();
    let trace = MeasurementTrace {
        label: "synthetic campus drive".into(),
        samples,
    };
    write_trace_csv(&dir.join(TRACE_FILE), &trace).expect("trace written");
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scenarios".into()));
    std::fs::create_dir_all(&dir).expect("output directory");
    let origin = GeoOrigin::new(parse_dms(TX1_LAT).unwrap(), parse_dms(TX1_LON).unwrap(), 0.0).unwrap();
    let tx2 = wgs84_to_enu(parse_dms(TX2_LAT).unwrap(), parse_dms(TX2_LON).unwrap(), 0.0, &origin).unwrap();

    let (buildings, trees) = layout([tx2.x, tx2.y]);
    write(&dir, FOOTPRINT_FILE, &footprint_json(&buildings, &origin));
    let cases = [
        ("case1_no_trees.scenario", "campus_case1", "Stage 1: campus without vegetation.", false, false),
        ("case2_trees.scenario", "campus_case2", "Stage 2: street trees modelled as absorbing blockers.", true, false),
        (
            "case3_filtered.scenario",
            "campus_case3",
            "Stage 3: trees plus manual removal of the diffraction over the neighbouring roof.",
            true,
            true,
        ),
        ("table1.scenario", "table1", "Campus with the reference link parameters and street trees.", true, false),
    ];
    for (file, name, desc, with_trees, filter) in cases {
        let text = scenario_text(name, desc, with_trees.then_some(&trees[..]), filter);
        write(&dir, file, &text);
    }

    // Candidate route, then keep the first positions the reference model covers.
    let candidates = route_points();
    write_route(&dir, &origin, &candidates, &vec![0.0; candidates.len()]);
    if std::env::args().any(|a| a == "--survey") {
        let a = powers(&dir, "case1_no_trees.scenario");
        let b = powers(&dir, "case2_trees.scenario");
        let c = powers(&dir, "case3_filtered.scenario");
        for i in 0..candidates.len() {
            println!(
                "{i:4} {:7.1} {:7.1} {:8.1} {:8.1} {:8.1}",
                candidates[i][0], candidates[i][1], a[i], b[i], c[i]
            );
        }
        println!("{} buildings, {} trees", buildings.len(), trees.len());
        return;
    }
    let reference = powers(&dir, "case3_filtered.scenario");
    let kept: Vec<usize> = (0..candidates.len())
        .filter(|&i| reference[i].is_finite())
        .take(ROUTE_POINTS)
        .collect();
    assert_eq!(kept.len(), ROUTE_POINTS, "only {} covered route positions", kept.len());
    let pts: Vec<[f64; 2]> = kept.iter().map(|&i| candidates[i]).collect();
    write_route(&dir, &origin, &pts, &vec![0.0; pts.len()]);

    // Re-simulate on the rounded positions that the scenario will read back.
    let truth = powers(&dir, "case3_filtered.scenario");
    let mut rng = ChaCha8Rng::seed_from_u64(NOISE_SEED);
    let noise = Normal::new(0.0, NOISE_SIGMA_DB).expect("sigma");
    let measured: Vec<f64> = truth.iter().map(|t| t + noise.sample(&mut rng)).collect();
    write_route(&dir, &origin, &pts, &measured);

    let measured = raylaunch_core::io::load_trace_csv(&dir.join(TRACE_FILE), &Default::default())
        .unwrap()
        .powers();
    for file in ["case1_no_trees.scenario", "case2_trees.scenario", "case3_filtered.scenario"] {
        let sim = powers(&dir, file);
        let rep = rmse(&sim, &measured, true).unwrap();
        println!(
            "{file}: rmse {:.2} dB (offset {:.2} dB, raw {:.2} dB, {} clamped)",
            rep.rmse_db, rep.fitted_offset_db, rep.rmse_unfitted_db, rep.clamped
        );
    }
    println!("{} buildings, {} trees", buildings.len(), trees.len());
}
