use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::geom::{clean_footprint, wgs84_to_enu, GeoOrigin};

/// Building height used when a feature carries neither height nor levels, metres.
pub const DEFAULT_HEIGHT: f64 = 10.0;
/// Storey height for features that only give a level count, metres.
pub const LEVEL_HEIGHT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ImportedFootprint {
    /// Outer ring in local east/north metres, without the closing vertex.
    pub polygon: Vec<[f64; 2]>,
    pub height: f64,
    pub tag: String,
}

/// Read building footprints from a GeoJSON feature collection.
pub fn import_footprints(path: &Path, origin: &GeoOrigin) -> Result<Vec<ImportedFootprint>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_footprints(&text, origin, &path.display().to_string())
}

/// Parse GeoJSON text. Non-polygon features are skipped with a warning; inner
/// rings are ignored. Coordinates are taken as WGS84 longitude/latitude.
pub fn parse_footprints(text: &str, origin: &GeoOrigin, source: &str) -> Result<Vec<ImportedFootprint>> {
    let schema = |field: &str, message: String| Error::Schema {
        file: source.to_string(),
        line: None,
        field: field.to_string(),
        message,
    };
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Schema {
        file: source.to_string(),
        line: Some(e.line()),
        field: "<document>".into(),
        message: e.to_string(),
    })?;
    if let Some(crs) = doc.pointer("/crs/properties/name").and_then(Value::as_str) {
        if !(crs.contains("CRS84") || crs.contains("4326")) {
            log::warn!("{source}: coordinate system `{crs}` treated as WGS84");
        }
    }
    let features = match doc.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => doc
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("features", "expected an array".into()))?
            .clone(),
        Some("Feature") => vec![doc.clone()],
        other => return Err(schema("type", format!("expected a FeatureCollection, found {other:?}"))),
    };

    let mut out = Vec::new();
    for (i, f) in features.iter().enumerate() {
        let field = format!("features[{i}]");
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let geom = f.get("geometry").unwrap_or(&Value::Null);
        let polygons: Vec<&Value> = match geom.get("type").and_then(Value::as_str) {
            Some("Polygon") => geom.get("coordinates").into_iter().collect(),
            Some("MultiPolygon") => geom
                .get("coordinates")
                .and_then(Value::as_array)
                .map(|a| a.iter().collect())
                .unwrap_or_default(),
            other => {
                log::warn!("{source}: {field}: skipping non-polygon geometry {other:?}");
                continue;
            }
        };
        let height = feature_height(&props).map_err(|m| schema(&format!("{field}.properties"), m))?;
        let base_tag = ["id", "name"]
            .iter()
            .find_map(|k| match props.get(*k) {
                Some(Value::String(s)) => Some(s.clone()),
                Some(Value::Number(n)) => Some(n.to_string()),
                _ => None,
            })
            .or_else(|| f.get("id").map(|v| v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string())))
            .unwrap_or_else(|| format!("building_{i}"));

        for (k, poly) in polygons.iter().enumerate() {
            let rings = poly
                .as_array()
                .ok_or_else(|| schema(&format!("{field}.geometry"), "polygon must be an array of rings".into()))?;
            if rings.len() > 1 {
                log::warn!("{source}: {field}: ignoring {} inner ring(s)", rings.len() - 1);
            }
            let outer = rings
                .first()
                .and_then(Value::as_array)
                .ok_or_else(|| schema(&format!("{field}.geometry"), "polygon has no outer ring".into()))?;
            let mut ring = Vec::with_capacity(outer.len());
            for (j, pos) in outer.iter().enumerate() {
                let pair = pos
                    .as_array()
                    .filter(|a| a.len() >= 2)
                    .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
                    .ok_or_else(|| schema(&format!("{field}.geometry[{j}]"), "expected [lon, lat]".into()))?;
                let p = wgs84_to_enu(pair.1, pair.0, origin.alt, origin)
                    .map_err(|e| schema(&format!("{field}.geometry[{j}]"), e.to_string()))?;
                ring.push([p.x, p.y]);
            }
            let polygon = clean_footprint(&ring).map_err(|e| schema(&format!("{field}.geometry"), e.to_string()))?;
            let tag = if polygons.len() > 1 { format!("{base_tag}_{k}") } else { base_tag.clone() };
            out.push(ImportedFootprint { polygon, height, tag });
        }
    }
    Ok(out)
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().trim_end_matches('m').trim().parse().ok(),
        _ => None,
    }
}

fn feature_height(props: &Value) -> std::result::Result<f64, String> {
    let h = if let Some(v) = props.get("height") {
        number(v).ok_or_else(|| format!("unreadable height {v}"))?
    } else if let Some(v) = props.get("building:levels").or_else(|| props.get("levels")) {
        number(v).ok_or_else(|| format!("unreadable level count {v}"))? * LEVEL_HEIGHT
    } else {
        DEFAULT_HEIGHT
    };
    if h.is_finite() && h > 0.0 {
        Ok(h)
    } else {
        Err(format!("height {h} must be positive"))
    }
}
