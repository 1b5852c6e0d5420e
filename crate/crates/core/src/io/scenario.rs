use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use super::footprints::import_footprints;
use super::trace::{load_trace_csv, TraceColumns};
use crate::analysis::{align_positions, GridSpec, MeasurementTrace, RX_HEIGHT};
use crate::antenna::{AntennaSpec, Pattern, Polarization};
use crate::channel::{FilterRule, PathFilterSpec};
use crate::error::{Error, Result};
use crate::geom::{
    extrude_footprint, ground_plane, make_tree_blocker, parse_dms, wgs84_to_enu, GeoOrigin, Material,
    MaterialKind, Mesh, Point3, Scene,
};
use crate::sim::Transmitter;
use crate::tracer::LaunchConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Receiver set of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Receivers {
    Points(Vec<Point3>),
    Grid(GridSpec),
}

/// Fully validated scenario, ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub scene: Scene,
    pub transmitters: Vec<Transmitter>,
    pub rx_antenna: AntennaSpec,
    pub receivers: Receivers,
    pub config: LaunchConfig,
    pub filter: PathFilterSpec,
    /// Measurement trace the route was taken from, if any.
    pub trace: Option<MeasurementTrace>,
}

impl Scenario {
    pub fn origin(&self) -> &GeoOrigin {
        self.scene.origin()
    }

    /// Receiver positions; grid cells in row-major order.
    pub fn receiver_points(&self) -> Result<Vec<Point3>> {
        match &self.receivers {
            Receivers::Points(p) => Ok(p.clone()),
            Receivers::Grid(g) => g.cells(),
        }
    }
}

/// Decimal degrees or a degrees-minutes-seconds string such as `49°25'25.5"N`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Coord {
    Deg(f64),
    Dms(String),
}

impl Coord {
    fn degrees(&self) -> Result<f64> {
        match self {
            Coord::Deg(d) => Ok(*d),
            Coord::Dms(s) => parse_dms(s),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrigin {
    lat: Coord,
    lon: Coord,
    #[serde(default)]
    alt: f64,
}

fn default_ground_extent() -> f64 {
    5000.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGround {
    #[serde(default = "yes")]
    enabled: bool,
    #[serde(default = "default_ground_extent")]
    half_extent: f64,
    material: Option<Spanned<String>>,
}

impl Default for RawGround {
    fn default() -> Self {
        RawGround {
            enabled: true,
            half_extent: default_ground_extent(),
            material: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    #[serde(default = "one")]
    eps_r: f64,
    #[serde(default)]
    sigma: f64,
    #[serde(default = "dielectric")]
    kind: MaterialKind,
}

fn one() -> f64 {
    1.0
}

fn dielectric() -> MaterialKind {
    MaterialKind::Dielectric
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBuilding {
    id: Option<String>,
    height: f64,
    material: Option<Spanned<String>>,
    /// East/north metres.
    footprint: Option<Vec<[f64; 2]>>,
    /// `[lat, lon]` pairs.
    footprint_geo: Option<Vec<[Coord; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFootprints {
    path: String,
    material: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    /// `[x, y]` on the ground or `[x, y, z]` for the base centre.
    center: Vec<f64>,
    /// `[width, depth, height]`.
    size: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeoPosition {
    lat: Coord,
    lon: Coord,
    /// Height above ground, metres.
    height: f64,
}

fn default_isotropic() -> Pattern {
    Pattern::Isotropic
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransmitter {
    label: Option<String>,
    position: Option<[f64; 3]>,
    geo: Option<RawGeoPosition>,
    power_w: f64,
    #[serde(default)]
    gain_dbi: f64,
    #[serde(default = "default_isotropic")]
    pattern: Pattern,
    #[serde(default)]
    orientation_deg: f64,
    #[serde(default)]
    tilt_deg: f64,
    #[serde(default)]
    polarization: Polarization,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAntenna {
    #[serde(default)]
    gain_dbi: f64,
    #[serde(default = "default_isotropic")]
    pattern: Pattern,
    #[serde(default)]
    orientation_deg: f64,
    #[serde(default)]
    tilt_deg: f64,
    #[serde(default)]
    polarization: Polarization,
}

fn rx_height() -> f64 {
    RX_HEIGHT
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReceivers {
    #[serde(default = "rx_height")]
    height: f64,
    route: Option<Vec<[f64; 2]>>,
    route_geo: Option<Vec<[Coord; 2]>>,
    route_csv: Option<String>,
    columns: Option<TraceColumns>,
    grid: Option<GridSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: Spanned<u32>,
    name: Option<String>,
    origin: Spanned<RawOrigin>,
    #[serde(default)]
    simulation: LaunchConfig,
    #[serde(default)]
    ground: RawGround,
    #[serde(default)]
    materials: BTreeMap<String, Spanned<RawMaterial>>,
    #[serde(default)]
    buildings: Vec<Spanned<RawBuilding>>,
    footprints: Option<Spanned<RawFootprints>>,
    #[serde(default)]
    trees: Vec<Spanned<RawTree>>,
    transmitters: Vec<Spanned<RawTransmitter>>,
    receiver_antenna: Option<Spanned<RawAntenna>>,
    receivers: Spanned<RawReceivers>,
    #[serde(default)]
    filters: Vec<Spanned<FilterRule>>,
}

/// Load and validate a scenario document. Relative file references resolve
/// against the document's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, &base, &path.display().to_string())
}

struct Ctx<'a> {
    text: &'a str,
    file: &'a str,
    base: PathBuf,
}

impl Ctx<'_> {
    fn line(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn err(&self, span: Option<std::ops::Range<usize>>, field: impl Into<String>, message: impl ToString) -> Error {
        Error::Schema {
            file: self.file.to_string(),
            line: span.map(|s| self.line(s.start)),
            field: field.into(),
            message: message.to_string(),
        }
    }

    fn at<T>(&self, s: &Spanned<T>, field: impl Into<String>, message: impl ToString) -> Error {
        self.err(Some(s.span()), field, message)
    }
}

fn field_from_message(msg: &str) -> String {
    for key in ["missing field `", "unknown field `"] {
        if let Some(rest) = msg.split(key).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    "<document>".into()
}

/// Parse scenario text. `base` resolves relative paths; `file` labels errors.
pub fn parse_scenario(text: &str, base: &Path, file: &str) -> Result<Scenario> {
    let ctx = Ctx {
        text,
        file,
        base: base.to_path_buf(),
    };
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        ctx.err(e.span(), field_from_message(&msg), msg)
    })?;
    if *raw.schema_version.get_ref() != SCHEMA_VERSION {
        return Err(ctx.at(
            &raw.schema_version,
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema_version.get_ref()),
        ));
    }

    let o = raw.origin.get_ref();
    let origin = (|| GeoOrigin::new(o.lat.degrees()?, o.lon.degrees()?, o.alt))()
        .map_err(|e| ctx.at(&raw.origin, "origin", e))?;

    let config = raw.simulation;
    config.validate().map_err(|e| ctx.err(None, "simulation", e))?;

    let mut materials: BTreeMap<String, Material> = [
        Material::concrete(),
        Material::ground(),
        Material::perfect_conductor(),
    ]
    .into_iter()
    .map(|m| (m.name.clone(), m))
    .collect();
    for (name, m) in &raw.materials {
        let r = m.get_ref();
        let mat = Material::new(name.clone(), r.eps_r, r.sigma, r.kind)
            .map_err(|e| ctx.at(m, format!("materials.{name}"), e))?;
        materials.insert(name.clone(), mat);
    }
    let material = |r: &Option<Spanned<String>>, default: &str, field: &str| -> Result<Material> {
        match r {
            None => Ok(materials[default].clone()),
            Some(s) => materials
                .get(s.get_ref())
                .cloned()
                .ok_or_else(|| ctx.at(s, field, format!("unknown material `{}`", s.get_ref()))),
        }
    };
    let geo_point = |lat: &Coord, lon: &Coord| -> Result<Point3> {
        wgs84_to_enu(lat.degrees()?, lon.degrees()?, origin.alt, &origin)
    };

    let mut meshes: Vec<Mesh> = Vec::new();
    for (i, b) in raw.buildings.iter().enumerate() {
        let field = format!("buildings[{i}]");
        let r = b.get_ref();
        let mat = material(&r.material, "concrete", &format!("{field}.material"))?;
        let polygon: Vec<[f64; 2]> = match (&r.footprint, &r.footprint_geo) {
            (Some(f), None) => f.clone(),
            (None, Some(g)) => g
                .iter()
                .map(|[lat, lon]| geo_point(lat, lon).map(|p| [p.x, p.y]))
                .collect::<Result<_>>()
                .map_err(|e| ctx.at(b, &field, e))?,
            _ => return Err(ctx.at(b, &field, "exactly one of `footprint` or `footprint_geo` is required")),
        };
        let tag = r.id.clone().unwrap_or_else(|| format!("building_{i}"));
        meshes.push(extrude_footprint(&polygon, r.height, mat, &tag).map_err(|e| ctx.at(b, &field, e))?);
    }
    if let Some(fp) = &raw.footprints {
        let r = fp.get_ref();
        let mat = material(&r.material, "concrete", "footprints.material")?;
        let path = ctx.base.join(&r.path);
        let imported = import_footprints(&path, &origin)?;
        for f in imported {
            let mesh = extrude_footprint(&f.polygon, f.height, mat.clone(), &f.tag)
                .map_err(|e| ctx.at(fp, format!("footprints `{}`", f.tag), e))?;
            meshes.push(mesh);
        }
    }
    for (i, t) in raw.trees.iter().enumerate() {
        let field = format!("trees[{i}]");
        let r = t.get_ref();
        let center = match r.center.as_slice() {
            [x, y] => Point3::new(*x, *y, 0.0),
            [x, y, z] => Point3::new(*x, *y, *z),
            _ => return Err(ctx.at(t, &field, "center needs 2 or 3 coordinates")),
        };
        let [w, d, h] = r.size;
        meshes.push(make_tree_blocker(center, w, d, h).map_err(|e| ctx.at(t, &field, e))?);
    }
    if raw.ground.enabled {
        let mat = material(&raw.ground.material, "ground", "ground.material")?;
        meshes.push(ground_plane(raw.ground.half_extent, mat).map_err(|e| ctx.err(None, "ground", e))?);
    }
    let scene = Scene::new(origin, meshes).map_err(|e| ctx.err(None, "<scene>", e))?;

    if raw.transmitters.is_empty() {
        return Err(ctx.err(None, "transmitters", "at least one transmitter is required"));
    }
    let mut transmitters = Vec::new();
    for (i, t) in raw.transmitters.iter().enumerate() {
        let field = format!("transmitters[{i}]");
        let r = t.get_ref();
        let position = match (&r.position, &r.geo) {
            (Some(p), None) => Point3::new(p[0], p[1], p[2]),
            (None, Some(g)) => {
                let p = geo_point(&g.lat, &g.lon).map_err(|e| ctx.at(t, &field, e))?;
                Point3::new(p.x, p.y, g.height)
            }
            _ => return Err(ctx.at(t, &field, "exactly one of `position` or `geo` is required")),
        };
        let tx = Transmitter {
            label: r.label.clone().unwrap_or_else(|| format!("tx{i}")),
            antenna: AntennaSpec {
                gain_dbi: r.gain_dbi,
                pattern: r.pattern,
                orientation_deg: r.orientation_deg,
                tilt_deg: r.tilt_deg,
                position,
                polarization: r.polarization,
            },
            power_w: r.power_w,
        };
        tx.validate().map_err(|e| ctx.at(t, &field, e))?;
        transmitters.push(tx);
    }

    let rx_antenna = match &raw.receiver_antenna {
        None => AntennaSpec::isotropic(Point3::ZERO),
        Some(a) => {
            let r = a.get_ref();
            let spec = AntennaSpec {
                gain_dbi: r.gain_dbi,
                pattern: r.pattern,
                orientation_deg: r.orientation_deg,
                tilt_deg: r.tilt_deg,
                position: Point3::ZERO,
                polarization: r.polarization,
            };
            spec.validate().map_err(|e| ctx.at(a, "receiver_antenna", e))?;
            spec
        }
    };

    let rcv = raw.receivers.get_ref();
    let rspan = &raw.receivers;
    if !(rcv.height.is_finite() && rcv.height >= 0.0) {
        return Err(ctx.at(rspan, "receivers.height", "height must be non-negative"));
    }
    let given = [rcv.route.is_some(), rcv.route_geo.is_some(), rcv.route_csv.is_some(), rcv.grid.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(ctx.at(
            rspan,
            "receivers",
            "exactly one of `route`, `route_geo`, `route_csv` or `grid` is required",
        ));
    }
    let mut trace = None;
    let receivers = if let Some(route) = &rcv.route {
        Receivers::Points(route.iter().map(|[x, y]| Point3::new(*x, *y, rcv.height)).collect())
    } else if let Some(route) = &rcv.route_geo {
        let pts = route
            .iter()
            .map(|[lat, lon]| geo_point(lat, lon).map(|p| Point3::new(p.x, p.y, rcv.height)))
            .collect::<Result<_>>()
            .map_err(|e| ctx.at(rspan, "receivers.route_geo", e))?;
        Receivers::Points(pts)
    } else if let Some(csv) = &rcv.route_csv {
        let cols = rcv.columns.clone().unwrap_or_default();
        let t = load_trace_csv(&ctx.base.join(csv), &cols)?;
        let pts = align_positions(&t, &origin)
            .map_err(|e| ctx.at(rspan, "receivers.route_csv", e))?
            .into_iter()
            .map(|p| Point3::new(p.x, p.y, rcv.height))
            .collect();
        trace = Some(t);
        Receivers::Points(pts)
    } else {
        let mut g = rcv.grid.clone().expect("checked above");
        if g.height == RX_HEIGHT {
            g.height = rcv.height;
        }
        g.shape().map_err(|e| ctx.at(rspan, "receivers.grid", e))?;
        Receivers::Grid(g)
    };
    if let Receivers::Points(p) = &receivers {
        if p.is_empty() {
            return Err(ctx.at(rspan, "receivers", "route has no points"));
        }
    }

    let mut filter = PathFilterSpec::default();
    for (i, f) in raw.filters.iter().enumerate() {
        let one = PathFilterSpec {
            rules: vec![f.get_ref().clone()],
        };
        one.validate(&scene).map_err(|e| ctx.at(f, format!("filters[{i}]"), e))?;
        filter.rules.push(f.get_ref().clone());
    }

    Ok(Scenario {
        name: raw.name.unwrap_or_else(|| {
            Path::new(file)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        }),
        scene,
        transmitters,
        rx_antenna,
        receivers,
        config,
        filter,
        trace,
    })
}
