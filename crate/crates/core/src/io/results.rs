use std::path::Path;

use super::csv_error;
use crate::analysis::GridResult;
use crate::channel::ChannelResult;
use crate::error::{Error, Result};
use crate::geom::{enu_to_wgs84, GeoOrigin, Point3};
use crate::tracer::{InteractionKind, PathKind};

/// Six significant digits without exponent notation; empty for non-finite values.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn parse_kind(s: &str) -> Result<Option<PathKind>> {
    Ok(match s {
        "" => None,
        "los" => Some(PathKind::LineOfSight),
        "reflection" => Some(PathKind::Reflection),
        "diffraction" => Some(PathKind::Diffraction),
        other => return Err(Error::invalid(format!("unknown path kind `{other}`"))),
    })
}

fn kind_str(k: Option<PathKind>) -> &'static str {
    k.map_or("", PathKind::as_str)
}

fn opt_power(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| Error::invalid(format!("bad power `{s}`")))
    }
}

fn field(rec: &csv::StringRecord, i: usize) -> &str {
    rec.get(i).unwrap_or("")
}

fn num<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    field(rec, i)
        .parse()
        .map_err(|_| Error::invalid(format!("column `{name}`: cannot parse `{}`", field(rec, i))))
}

fn with_line(path: &Path, rec: &csv::StringRecord, e: Error) -> Error {
    Error::Schema {
        file: path.display().to_string(),
        line: rec.position().map(|p| p.line() as usize),
        field: "<row>".into(),
        message: e.to_string(),
    }
}

fn open_reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Schema {
            file: path.display().to_string(),
            line: Some(1),
            field: "<header>".into(),
            message: format!("expected columns {}", expected.join(",")),
        });
    }
    Ok(rdr)
}

/// One line of a per-receiver results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub index: usize,
    pub lat: f64,
    pub lon: f64,
    /// `None` when no path reached the receiver.
    pub power_dbm: Option<f64>,
    pub path_count: usize,
    pub strongest_path_kind: Option<PathKind>,
}

const RESULT_HEADER: [&str; 6] = ["index", "lat", "lon", "power_dbm", "path_count", "strongest_path_kind"];

pub fn result_rows(results: &[ChannelResult], rx: &[Point3], origin: &GeoOrigin) -> Vec<ResultRow> {
    results
        .iter()
        .zip(rx)
        .enumerate()
        .map(|(index, (r, p))| {
            let (lat, lon, _) = enu_to_wgs84(*p, origin);
            ResultRow {
                index,
                lat,
                lon,
                power_dbm: r.has_coverage().then_some(r.power_dbm),
                path_count: r.paths.len(),
                strongest_path_kind: r.strongest_kind(),
            }
        })
        .collect()
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(RESULT_HEADER).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            format!("{:.7}", r.lat),
            format!("{:.7}", r.lon),
            r.power_dbm.map_or(String::new(), format_sig),
            r.path_count.to_string(),
            kind_str(r.strongest_path_kind).to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = open_reader(path, &RESULT_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = (|| {
            Ok(ResultRow {
                index: num(&rec, 0, "index")?,
                lat: num(&rec, 1, "lat")?,
                lon: num(&rec, 2, "lon")?,
                power_dbm: opt_power(field(&rec, 3))?,
                path_count: num(&rec, 4, "path_count")?,
                strongest_path_kind: parse_kind(field(&rec, 5))?,
            })
        })()
        .map_err(|e| with_line(path, &rec, e))?;
        out.push(row);
    }
    Ok(out)
}

/// One cell of a coverage grid file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub x: f64,
    pub y: f64,
    pub lat: f64,
    pub lon: f64,
    pub power_dbm: Option<f64>,
    pub path_count: usize,
    pub strongest_path_kind: Option<PathKind>,
}

const GRID_HEADER: [&str; 10] = [
    "index",
    "row",
    "col",
    "x",
    "y",
    "lat",
    "lon",
    "power_dbm",
    "path_count",
    "strongest_path_kind",
];

pub fn grid_rows(grid: &GridResult, origin: &GeoOrigin) -> Vec<GridRow> {
    grid.results
        .iter()
        .zip(&grid.cells)
        .enumerate()
        .map(|(index, (r, p))| {
            let (lat, lon, _) = enu_to_wgs84(*p, origin);
            GridRow {
                index,
                row: index / grid.cols,
                col: index % grid.cols,
                x: p.x,
                y: p.y,
                lat,
                lon,
                power_dbm: r.has_coverage().then_some(r.power_dbm),
                path_count: r.paths.len(),
                strongest_path_kind: r.strongest_kind(),
            }
        })
        .collect()
}

pub fn write_grid(path: &Path, rows: &[GridRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(GRID_HEADER).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            r.row.to_string(),
            r.col.to_string(),
            format!("{:.3}", r.x),
            format!("{:.3}", r.y),
            format!("{:.7}", r.lat),
            format!("{:.7}", r.lon),
            r.power_dbm.map_or(String::new(), format_sig),
            r.path_count.to_string(),
            kind_str(r.strongest_path_kind).to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_grid(path: &Path) -> Result<Vec<GridRow>> {
    let mut rdr = open_reader(path, &GRID_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = (|| {
            Ok(GridRow {
                index: num(&rec, 0, "index")?,
                row: num(&rec, 1, "row")?,
                col: num(&rec, 2, "col")?,
                x: num(&rec, 3, "x")?,
                y: num(&rec, 4, "y")?,
                lat: num(&rec, 5, "lat")?,
                lon: num(&rec, 6, "lon")?,
                power_dbm: opt_power(field(&rec, 7))?,
                path_count: num(&rec, 8, "path_count")?,
                strongest_path_kind: parse_kind(field(&rec, 9))?,
            })
        })()
        .map_err(|e| with_line(path, &rec, e))?;
        out.push(row);
    }
    Ok(out)
}

/// One propagation path in a path dump.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub rx_index: usize,
    pub tx_index: usize,
    pub path_index: usize,
    pub path_id: u64,
    pub kind: PathKind,
    pub length_m: f64,
    pub delay_ns: f64,
    pub power_dbm: Option<f64>,
    pub diffraction_loss_db: f64,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
    /// `(kind, mesh_id, primitive_id, point)` per interaction.
    pub interactions: Vec<(InteractionKind, usize, usize, Point3)>,
}

const PATH_HEADER: [&str; 14] = [
    "rx_index",
    "tx_index",
    "path_index",
    "path_id",
    "kind",
    "length_m",
    "delay_ns",
    "power_dbm",
    "diffraction_loss_db",
    "aod_az_deg",
    "aod_el_deg",
    "aoa_az_deg",
    "aoa_el_deg",
    "interactions",
];

/// Flatten channel results into path rows.
pub fn path_rows(results: &[ChannelResult]) -> Vec<PathRow> {
    results
        .iter()
        .flat_map(|r| {
            r.paths.iter().enumerate().map(move |(i, c)| {
                let p = &c.path;
                let mag = c.amplitude.norm();
                PathRow {
                    rx_index: r.rx_index,
                    tx_index: r.tx_index,
                    path_index: i,
                    path_id: p.path_id,
                    kind: p.kind(),
                    length_m: p.total_length,
                    delay_ns: p.tau * 1e9,
                    power_dbm: (mag > 0.0).then(|| r.tx_power_dbm + 20.0 * mag.log10()),
                    diffraction_loss_db: p.diffraction_loss_db,
                    aod_az_deg: p.aod.azimuth.to_degrees(),
                    aod_el_deg: p.aod.elevation.to_degrees(),
                    aoa_az_deg: p.aoa.azimuth.to_degrees(),
                    aoa_el_deg: p.aoa.elevation.to_degrees(),
                    interactions: p
                        .interactions
                        .iter()
                        .map(|it| (it.kind, it.mesh_id, it.primitive_id, it.point))
                        .collect(),
                }
            })
        })
        .collect()
}

fn format_interactions(list: &[(InteractionKind, usize, usize, Point3)]) -> String {
    list.iter()
        .map(|(k, m, p, q)| format!("{} {m} {p} {:.6} {:.6} {:.6}", k.as_str(), q.x, q.y, q.z))
        .collect::<Vec<_>>()
        .join("; ")
}

fn parse_interactions(s: &str) -> Result<Vec<(InteractionKind, usize, usize, Point3)>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|part| {
            let bad = || Error::invalid(format!("cannot parse interaction `{}`", part.trim()));
            let f: Vec<&str> = part.split_whitespace().collect();
            if f.len() != 6 {
                return Err(bad());
            }
            let kind = match f[0] {
                "reflection" => InteractionKind::Reflection,
                "diffraction" => InteractionKind::Diffraction,
                _ => return Err(bad()),
            };
            let n = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
            Ok((
                kind,
                f[1].parse().map_err(|_| bad())?,
                f[2].parse().map_err(|_| bad())?,
                Point3::new(n(3)?, n(4)?, n(5)?),
            ))
        })
        .collect()
}

pub fn write_paths(path: &Path, rows: &[PathRow]) -> Result<()> {
    let w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    write_path_rows(w, path, rows)
}

/// Path dump to any writer; `label` names the destination in errors.
pub fn write_paths_to<W: std::io::Write>(out: W, label: &Path, rows: &[PathRow]) -> Result<()> {
    write_path_rows(csv::Writer::from_writer(out), label, rows)
}

fn write_path_rows<W: std::io::Write>(mut w: csv::Writer<W>, path: &Path, rows: &[PathRow]) -> Result<()> {
    w.write_record(PATH_HEADER).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([
            r.rx_index.to_string(),
            r.tx_index.to_string(),
            r.path_index.to_string(),
            format!("{:016x}", r.path_id),
            r.kind.as_str().to_string(),
            format_sig(r.length_m),
            format_sig(r.delay_ns),
            r.power_dbm.map_or(String::new(), format_sig),
            format_sig(r.diffraction_loss_db),
            format_sig(r.aod_az_deg),
            format_sig(r.aod_el_deg),
            format_sig(r.aoa_az_deg),
            format_sig(r.aoa_el_deg),
            format_interactions(&r.interactions),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_paths(path: &Path) -> Result<Vec<PathRow>> {
    let mut rdr = open_reader(path, &PATH_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = (|| {
            Ok(PathRow {
                rx_index: num(&rec, 0, "rx_index")?,
                tx_index: num(&rec, 1, "tx_index")?,
                path_index: num(&rec, 2, "path_index")?,
                path_id: u64::from_str_radix(field(&rec, 3), 16)
                    .map_err(|_| Error::invalid(format!("bad path id `{}`", field(&rec, 3))))?,
                kind: parse_kind(field(&rec, 4))?.ok_or_else(|| Error::invalid("empty path kind"))?,
                length_m: num(&rec, 5, "length_m")?,
                delay_ns: num(&rec, 6, "delay_ns")?,
                power_dbm: opt_power(field(&rec, 7))?,
                diffraction_loss_db: num(&rec, 8, "diffraction_loss_db")?,
                aod_az_deg: num(&rec, 9, "aod_az_deg")?,
                aod_el_deg: num(&rec, 10, "aod_el_deg")?,
                aoa_az_deg: num(&rec, 11, "aoa_az_deg")?,
                aoa_el_deg: num(&rec, 12, "aoa_el_deg")?,
                interactions: parse_interactions(field(&rec, 13))?,
            })
        })()
        .map_err(|e| with_line(path, &rec, e))?;
        out.push(row);
    }
    Ok(out)
}
