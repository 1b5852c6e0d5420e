//! Comparison of simulated and measured power traces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::Bvh;
use crate::antenna::AntennaSpec;
use crate::channel::{ChannelResult, PathFilterSpec};
use crate::error::{Error, Result};
use crate::geom::{check_lat_lon, wgs84_to_enu, GeoOrigin, Point3, Scene};
use crate::sim::{simulate, Transmitter};
use crate::tracer::LaunchConfig;

/// Receiver antenna height above ground, metres.
pub const RX_HEIGHT: f64 = 0.20;

/// Simulated power assumed where no path reached the receiver, dBm.
pub const DEFAULT_FLOOR_DBM: f64 = -150.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub lat: f64,
    pub lon: f64,
    pub power_dbm: f64,
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementTrace {
    pub label: String,
    pub samples: Vec<TraceSample>,
}

impl MeasurementTrace {
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::invalid(format!("trace `{}` has no samples", self.label)));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !s.power_dbm.is_finite() {
                return Err(Error::invalid(format!("trace sample {i}: power {} is not finite", s.power_dbm)));
            }
            check_lat_lon(s.lat, s.lon).map_err(|e| Error::invalid(format!("trace sample {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn powers(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.power_dbm).collect()
    }
}

/// Receiver positions for each sample, at [`RX_HEIGHT`] above ground.
pub fn align_positions(trace: &MeasurementTrace, origin: &GeoOrigin) -> Result<Vec<Point3>> {
    trace.validate()?;
    trace
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = wgs84_to_enu(s.lat, s.lon, origin.alt, origin)
                .map_err(|e| Error::invalid(format!("trace sample {i}: {e}")))?;
            Ok(Point3::new(p.x, p.y, RX_HEIGHT))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_positions: usize,
    /// RMSE after removing `fitted_offset_db` (equal to the raw RMSE when not fitting).
    pub rmse_db: f64,
    /// RMSE of the raw residuals.
    pub rmse_unfitted_db: f64,
    /// Mean of `measured − simulated`; zero when not fitting.
    pub fitted_offset_db: f64,
    /// `measured − simulated − fitted_offset_db` per position.
    pub residuals: Vec<f64>,
    /// Positions whose simulated power was replaced by the floor.
    pub clamped: usize,
    pub floor_dbm: f64,
}

/// RMSE between simulated and measured powers with the default floor.
pub fn rmse(simulated: &[f64], measured: &[f64], fit_offset: bool) -> Result<ComparisonReport> {
    rmse_with_floor(simulated, measured, fit_offset, DEFAULT_FLOOR_DBM)
}

pub fn rmse_with_floor(
    simulated: &[f64],
    measured: &[f64],
    fit_offset: bool,
    floor_dbm: f64,
) -> Result<ComparisonReport> {
    if simulated.len() != measured.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} simulated vs {} measured",
            simulated.len(),
            measured.len()
        )));
    }
    if simulated.is_empty() {
        return Err(Error::invalid("nothing to compare"));
    }
    if !floor_dbm.is_finite() {
        return Err(Error::invalid("floor must be finite"));
    }
    if let Some(i) = measured.iter().position(|m| !m.is_finite()) {
        return Err(Error::invalid(format!("measured value {i} is not finite")));
    }
    if let Some(i) = simulated.iter().position(|s| s.is_nan() || *s == f64::INFINITY) {
        return Err(Error::invalid(format!("simulated value {i} is not a power")));
    }
    let mut clamped = 0;
    let raw: Vec<f64> = simulated
        .iter()
        .zip(measured)
        .map(|(&s, &m)| {
            let s = if s.is_finite() {
                s
            } else {
                clamped += 1;
                floor_dbm
            };
            m - s
        })
        .collect();
    let n = raw.len() as f64;
    let rms = |v: &[f64]| (v.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let offset = if fit_offset { raw.iter().sum::<f64>() / n } else { 0.0 };
    let residuals: Vec<f64> = raw.iter().map(|r| r - offset).collect();
    Ok(ComparisonReport {
        n_positions: raw.len(),
        rmse_db: rms(&residuals),
        rmse_unfitted_db: rms(&raw),
        fitted_offset_db: offset,
        residuals,
        clamped,
        floor_dbm,
    })
}

/// Regular horizontal receiver grid. Cell `(row, col)` is centred at
/// `min + (col + ½, row + ½)·spacing`; rows advance northwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub spacing: f64,
    #[serde(default = "default_height")]
    pub height: f64,
}

fn default_height() -> f64 {
    RX_HEIGHT
}

/// Tolerance for grid cells lying outside the scene bounds, metres.
pub const GRID_MARGIN: f64 = 1.0;

impl GridSpec {
    pub fn shape(&self) -> Result<(usize, usize)> {
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        let count = |lo: f64, hi: f64| -> Result<usize> {
            let n = ((hi - lo) / self.spacing + 1e-9).floor();
            if !(n.is_finite() && n >= 1.0) {
                return Err(Error::invalid("grid extent is smaller than one cell"));
            }
            Ok(n as usize)
        };
        Ok((count(self.min[1], self.max[1])?, count(self.min[0], self.max[0])?))
    }

    /// Cell centres in row-major order.
    pub fn cells(&self) -> Result<Vec<Point3>> {
        let (rows, cols) = self.shape()?;
        Ok((0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| {
                    Point3::new(
                        self.min[0] + (c as f64 + 0.5) * self.spacing,
                        self.min[1] + (r as f64 + 0.5) * self.spacing,
                        self.height,
                    )
                })
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Point3>,
    pub results: Vec<ChannelResult>,
}

impl GridResult {
    pub fn power(&self, row: usize, col: usize) -> f64 {
        self.results[row * self.cols + col].power_dbm
    }
}

/// Serving-transmitter power at every grid cell centre.
#[allow(clippy::too_many_arguments)]
pub fn grid_sweep(
    scene: &Scene,
    bvh: &Bvh,
    transmitters: &[Transmitter],
    rx_antenna: &AntennaSpec,
    grid: &GridSpec,
    cfg: &LaunchConfig,
    filter: &PathFilterSpec,
) -> Result<GridResult> {
    let (rows, cols) = grid.shape()?;
    let cells = grid.cells()?;
    let b = scene.bounds();
    let outside = cells.par_iter().any(|p| {
        p.x < b.min.x - GRID_MARGIN
            || p.x > b.max.x + GRID_MARGIN
            || p.y < b.min.y - GRID_MARGIN
            || p.y > b.max.y + GRID_MARGIN
    });
    if outside {
        return Err(Error::invalid("grid extends outside the scene bounds"));
    }
    let results = simulate(scene, bvh, transmitters, rx_antenna, &cells, cfg, filter)?;
    Ok(GridResult { rows, cols, cells, results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors() {
        let x = [-50.0, -61.5, -70.25];
        let r = rmse(&x, &x, true).unwrap();
        assert_eq!((r.rmse_db, r.fitted_offset_db), (0.0, 0.0));
        assert_eq!(rmse(&x, &x, false).unwrap().rmse_db, 0.0);
    }

    #[test]
    fn pure_offset_is_absorbed() {
        let sim = [-41.0, -55.0, -63.0, -70.0];
        let meas: Vec<f64> = sim.iter().map(|s| s + 41.0).collect();
        let r = rmse(&sim, &meas, true).unwrap();
        assert!(r.rmse_db < 1e-12);
        assert!((r.fitted_offset_db - 41.0).abs() < 1e-12);
        assert!((r.rmse_unfitted_db - 41.0).abs() < 1e-12);
    }

    #[test]
    fn hand_arithmetic() {
        let r = rmse(&[-50.0, -60.0, -70.0], &[-52.0, -58.0, -71.0], false).unwrap();
        assert!((r.rmse_db - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.residuals, vec![-2.0, 2.0, -1.0]);
    }

    #[test]
    fn symmetric_without_fit() {
        let a = [-50.0, -60.0, -75.0];
        let b = [-49.0, -66.0, -71.0];
        assert_eq!(rmse(&a, &b, false).unwrap().rmse_db, rmse(&b, &a, false).unwrap().rmse_db);
    }

    #[test]
    fn fitted_offset_is_optimal() {
        let sim = [-50.0, -62.0, -71.0, -80.0, -66.0];
        let meas = [-91.0, -99.5, -115.0, -119.0, -108.0];
        let r = rmse(&sim, &meas, true).unwrap();
        let at = |o: f64| {
            (sim.iter().zip(&meas).map(|(s, m)| (m - s - o).powi(2)).sum::<f64>() / 5.0).sqrt()
        };
        let scan = (0..200_001)
            .map(|i| -50.0 + i as f64 * 1e-4)
            .map(at)
            .fold(f64::INFINITY, f64::min);
        assert!(r.rmse_db <= scan + 1e-9);
        assert!((at(r.fitted_offset_db) - r.rmse_db).abs() < 1e-12);
    }

    #[test]
    fn no_coverage_is_clamped() {
        let r = rmse(&[f64::NEG_INFINITY, -60.0], &[-140.0, -60.0], false).unwrap();
        assert_eq!(r.clamped, 1);
        assert!((r.rmse_db - (100.0f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rmse(&[-1.0], &[-1.0, -2.0], true).is_err());
        assert!(rmse(&[], &[], true).is_err());
        assert!(rmse(&[-1.0], &[f64::NAN], true).is_err());
    }

    fn origin() -> GeoOrigin {
        GeoOrigin::new(49.4237, 7.7541, 250.0).unwrap()
    }

    #[test]
    fn origin_sample_sits_at_rx_height() {
        let t = MeasurementTrace {
            label: "t".into(),
            samples: vec![TraceSample { lat: 49.4237, lon: 7.7541, power_dbm: -80.0, timestamp: None }],
        };
        let p = align_positions(&t, &origin()).unwrap();
        assert!(p[0].x.abs() < 1e-9 && p[0].y.abs() < 1e-9);
        assert_eq!(p[0].z, 0.20);
    }

    #[test]
    fn aligned_points_round_trip() {
        let o = origin();
        let samples: Vec<TraceSample> = (0..20)
            .map(|i| TraceSample {
                lat: 49.42 + i as f64 * 3.1e-4,
                lon: 7.75 - i as f64 * 2.7e-4,
                power_dbm: -90.0,
                timestamp: None,
            })
            .collect();
        let t = MeasurementTrace { label: "r".into(), samples };
        let pts = align_positions(&t, &o).unwrap();
        for (p, s) in pts.iter().zip(&t.samples) {
            let (lat, lon, _) = crate::geom::enu_to_wgs84(Point3::new(p.x, p.y, 0.0), &o);
            assert!((lat - s.lat).abs() < 1e-9 && (lon - s.lon).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_traces_rejected() {
        let empty = MeasurementTrace { label: "e".into(), samples: vec![] };
        assert!(align_positions(&empty, &origin()).is_err());
        let bad = MeasurementTrace {
            label: "b".into(),
            samples: vec![
                TraceSample { lat: 49.0, lon: 7.0, power_dbm: -80.0, timestamp: None },
                TraceSample { lat: 95.0, lon: 7.0, power_dbm: -80.0, timestamp: None },
            ],
        };
        let err = align_positions(&bad, &origin()).unwrap_err().to_string();
        assert!(err.contains("sample 1"), "{err}");
    }

    #[test]
    fn grid_layout() {
        let g = GridSpec { min: [0.0, 10.0], max: [30.0, 30.0], spacing: 10.0, height: 1.5 };
        assert_eq!(g.shape().unwrap(), (2, 3));
        let c = g.cells().unwrap();
        assert_eq!(c[0], Point3::new(5.0, 15.0, 1.5));
        assert_eq!(c[2], Point3::new(25.0, 15.0, 1.5));
        assert_eq!(c[3], Point3::new(5.0, 25.0, 1.5));
        let bad = GridSpec { spacing: 0.0, ..g.clone() };
        assert!(bad.shape().is_err());
        let tiny = GridSpec { max: [5.0, 30.0], ..g };
        assert!(tiny.shape().is_err());
    }
}
