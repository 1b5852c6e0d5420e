//! End-to-end evaluation: trace every transmitter, turn paths into channel
//! results, apply exclusion filters and keep the serving transmitter.

use serde::{Deserialize, Serialize};

use crate::accel::Bvh;
use crate::antenna::AntennaSpec;
use crate::channel::{apply_filter, combine_transmitters, watts_to_dbm, ChannelResult, PathFilterSpec};
use crate::error::{Error, Result};
use crate::geom::{Point3, Scene};
use crate::tracer::{trace_paths, LaunchConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transmitter {
    pub label: String,
    pub antenna: AntennaSpec,
    pub power_w: f64,
}

impl Transmitter {
    pub fn power_dbm(&self) -> f64 {
        watts_to_dbm(self.power_w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power_w.is_finite() && self.power_w > 0.0) {
            return Err(Error::invalid(format!("transmitter `{}` power must be positive", self.label)));
        }
        self.antenna.validate()
    }
}

/// Per-transmitter channel results for every receiver, filter applied.
/// Indexed `[tx][rx]`.
pub fn simulate_per_transmitter(
    scene: &Scene,
    bvh: &Bvh,
    transmitters: &[Transmitter],
    rx_antenna: &AntennaSpec,
    rx_positions: &[Point3],
    cfg: &LaunchConfig,
    filter: &PathFilterSpec,
) -> Result<Vec<Vec<ChannelResult>>> {
    if transmitters.is_empty() {
        return Err(Error::invalid("at least one transmitter is required"));
    }
    rx_antenna.validate()?;
    filter.validate(scene)?;
    transmitters
        .iter()
        .enumerate()
        .map(|(ti, tx)| {
            tx.validate()?;
            let paths = trace_paths(scene, bvh, &tx.antenna, rx_positions, cfg)?;
            paths
                .into_iter()
                .enumerate()
                .map(|(ri, p)| {
                    let r = ChannelResult::from_paths(
                        ri,
                        ti,
                        tx.power_dbm(),
                        p,
                        &tx.antenna,
                        rx_antenna,
                        cfg.frequency_hz,
                    )?;
                    if filter.is_empty() {
                        Ok(r)
                    } else {
                        apply_filter(&r, filter, scene)
                    }
                })
                .collect()
        })
        .collect()
}

/// Serving-transmitter channel result for every receiver.
pub fn simulate(
    scene: &Scene,
    bvh: &Bvh,
    transmitters: &[Transmitter],
    rx_antenna: &AntennaSpec,
    rx_positions: &[Point3],
    cfg: &LaunchConfig,
    filter: &PathFilterSpec,
) -> Result<Vec<ChannelResult>> {
    let per_tx = simulate_per_transmitter(scene, bvh, transmitters, rx_antenna, rx_positions, cfg, filter)?;
    (0..rx_positions.len())
        .map(|ri| {
            let candidates: Vec<ChannelResult> = per_tx.iter().map(|r| r[ri].clone()).collect();
            combine_transmitters(&candidates)
        })
        .collect()
}
