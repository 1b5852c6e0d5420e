use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::csv_error;
use crate::analysis::{MeasurementTrace, TraceSample};
use crate::error::{Error, Result};
use crate::io::format_sig;

/// Column names of a measurement CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceColumns {
    pub lat: String,
    pub lon: String,
    pub power: String,
    /// Optional; read when present.
    pub timestamp: String,
}

impl Default for TraceColumns {
    fn default() -> Self {
        TraceColumns {
            lat: "lat".into(),
            lon: "lon".into(),
            power: "power_dbm".into(),
            timestamp: "timestamp".into(),
        }
    }
}

pub fn load_trace_csv(path: &Path, columns: &TraceColumns) -> Result<MeasurementTrace> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_trace(file, &label, columns, &path.display().to_string())
}

/// Parse a trace from any reader. `source` names the input in error messages.
pub fn read_trace<R: Read>(reader: R, label: &str, columns: &TraceColumns, source: &str) -> Result<MeasurementTrace> {
    let schema = |line: Option<usize>, field: &str, message: String| Error::Schema {
        file: source.to_string(),
        line,
        field: field.to_string(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| schema(Some(1), "<header>", e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let col = |name: &str| find(name).ok_or_else(|| schema(Some(1), name, "required column is missing".into()));
    let (lat_i, lon_i, pow_i) = (col(&columns.lat)?, col(&columns.lon)?, col(&columns.power)?);
    let ts_i = find(&columns.timestamp);

    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema(e.position().map(|p| p.line() as usize), "<row>", e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize);
        let num = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| schema(line, name, format!("`{raw}` is not a finite number")))
        };
        let sample = TraceSample {
            lat: num(lat_i, &columns.lat)?,
            lon: num(lon_i, &columns.lon)?,
            power_dbm: num(pow_i, &columns.power)?,
            timestamp: ts_i.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()).map(str::to_string),
        };
        crate::geom::check_lat_lon(sample.lat, sample.lon).map_err(|e| schema(line, &columns.lat, e.to_string()))?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(schema(None, "<rows>", "trace has no samples".into()));
    }
    Ok(MeasurementTrace {
        label: label.to_string(),
        samples,
    })
}

/// Write a trace with the default column names.
pub fn write_trace_csv(path: &Path, trace: &MeasurementTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let with_ts = trace.samples.iter().any(|s| s.timestamp.is_some());
    let mut header = vec!["lat", "lon", "power_dbm"];
    if with_ts {
        header.push("timestamp");
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for s in &trace.samples {
        let mut row = vec![format!("{:.7}", s.lat), format!("{:.7}", s.lon), format_sig(s.power_dbm)];
        if with_ts {
            row.push(s.timestamp.clone().unwrap_or_default());
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
