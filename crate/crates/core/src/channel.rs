//! Coherent narrowband channel: per-path amplitudes, received power, manual
//! path exclusion and transmitter combination.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::antenna::{pattern_amplitude, world_to_antenna_frame, AntennaSpec};
use crate::em::free_space_amplitude;
use crate::error::{Error, Result};
use crate::geom::{Point3, Scene};
use crate::tracer::{InteractionKind, PathKind, PathRecord};

/// Convert transmit power in watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

/// Complex amplitude of one path as a voltage transfer ratio, antenna gains,
/// polarization projection and diffraction loss included.
pub fn amplitude_for_path(
    path: &PathRecord,
    tx: &AntennaSpec,
    rx: &AntennaSpec,
    freq_hz: f64,
) -> Result<Complex64> {
    let free = free_space_amplitude(path.total_length, freq_hz)?;
    let c_t = pattern_amplitude(world_to_antenna_frame(path.departure_dir, tx), tx);
    let c_r = pattern_amplitude(world_to_antenna_frame(-path.arrival_dir, rx), rx);
    let e = path.polarimetric.apply(tx.polarization.jones());
    let j = rx.polarization.jones();
    let pol = j[0] * e[0] + j[1] * e[1];
    let loss = 10f64.powf(-path.diffraction_loss_db / 20.0);
    Ok(free * c_t * c_r * pol * loss)
}

/// Coherent received power `P_tx + 20·log10|Σ A_n|`, `-∞` with no paths.
pub fn received_power(amplitudes: &[Complex64], tx_power_dbm: f64) -> f64 {
    let h: Complex64 = amplitudes.iter().sum();
    power_from_h(h, tx_power_dbm)
}

fn power_from_h(h: Complex64, tx_power_dbm: f64) -> f64 {
    let mag = h.norm();
    if mag == 0.0 {
        f64::NEG_INFINITY
    } else {
        tx_power_dbm + 20.0 * mag.log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathContribution {
    pub path: PathRecord,
    pub amplitude: Complex64,
}

/// Channel between one transmitter and one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelResult {
    pub rx_index: usize,
    pub tx_index: usize,
    pub tx_power_dbm: f64,
    pub paths: Vec<PathContribution>,
    pub h: Complex64,
    pub power_dbm: f64,
}

impl ChannelResult {
    pub fn from_contributions(
        rx_index: usize,
        tx_index: usize,
        tx_power_dbm: f64,
        paths: Vec<PathContribution>,
    ) -> Self {
        let h = paths.iter().map(|p| p.amplitude).sum();
        ChannelResult {
            rx_index,
            tx_index,
            tx_power_dbm,
            paths,
            h,
            power_dbm: power_from_h(h, tx_power_dbm),
        }
    }

    pub fn from_paths(
        rx_index: usize,
        tx_index: usize,
        tx_power_dbm: f64,
        paths: Vec<PathRecord>,
        tx: &AntennaSpec,
        rx: &AntennaSpec,
        freq_hz: f64,
    ) -> Result<Self> {
        let contributions = paths
            .into_iter()
            .map(|path| {
                let amplitude = amplitude_for_path(&path, tx, rx, freq_hz)?;
                Ok(PathContribution { path, amplitude })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_contributions(rx_index, tx_index, tx_power_dbm, contributions))
    }

    pub fn has_coverage(&self) -> bool {
        self.power_dbm.is_finite()
    }

    /// Path with the largest amplitude; ties go to the earlier path.
    pub fn strongest(&self) -> Option<&PathContribution> {
        self.paths.iter().reduce(|best, p| {
            if p.amplitude.norm() > best.amplitude.norm() {
                p
            } else {
                best
            }
        })
    }

    pub fn strongest_kind(&self) -> Option<PathKind> {
        self.strongest().map(|p| p.path.kind())
    }
}

/// Axis-aligned box, metres in the scene frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub min: Point3,
    pub max: Point3,
}

impl Region {
    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// One exclusion predicate. All present conditions must hold together.
/// Conditions on interactions must be met by a single interaction of the path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterRule {
    #[serde(default)]
    pub kind: Option<InteractionKind>,
    /// Tag of the mesh the interaction occurs on.
    #[serde(default)]
    pub mesh: Option<String>,
    #[serde(default)]
    pub mesh_id: Option<usize>,
    #[serde(default)]
    pub edge_id: Option<usize>,
    /// Interaction point must fall inside this box.
    #[serde(default)]
    pub region: Option<Region>,
    #[serde(default)]
    pub path_id: Option<u64>,
}

impl FilterRule {
    fn has_interaction_terms(&self) -> bool {
        self.kind.is_some()
            || self.mesh.is_some()
            || self.mesh_id.is_some()
            || self.edge_id.is_some()
            || self.region.is_some()
    }

    fn validate(&self, scene: &Scene) -> Result<()> {
        if !self.has_interaction_terms() && self.path_id.is_none() {
            return Err(Error::invalid("filter rule has no conditions"));
        }
        if let Some(id) = self.mesh_id {
            if id >= scene.meshes().len() {
                return Err(Error::invalid(format!("filter references unknown mesh id {id}")));
            }
        }
        if let Some(id) = self.edge_id {
            if id >= scene.edges().len() {
                return Err(Error::invalid(format!("filter references unknown edge id {id}")));
            }
        }
        if let Some(tag) = &self.mesh {
            if scene.mesh_by_tag(tag).is_none() {
                return Err(Error::invalid(format!("filter references unknown mesh `{tag}`")));
            }
        }
        if let Some(r) = &self.region {
            if !(r.min.is_finite() && r.max.is_finite()) || (0..3).any(|i| r.min[i] > r.max[i]) {
                return Err(Error::invalid("filter region must have finite min ≤ max"));
            }
        }
        Ok(())
    }

    pub fn matches(&self, path: &PathRecord, scene: &Scene) -> bool {
        if self.path_id.is_some_and(|id| id != path.path_id) {
            return false;
        }
        if !self.has_interaction_terms() {
            return true;
        }
        path.interactions.iter().any(|it| {
            self.kind.is_none_or(|k| k == it.kind)
                && self.mesh_id.is_none_or(|m| m == it.mesh_id)
                && self
                    .mesh
                    .as_ref()
                    .is_none_or(|t| scene.mesh(it.mesh_id).tag == *t)
                && self.edge_id.is_none_or(|e| {
                    it.kind == InteractionKind::Diffraction && it.primitive_id == e
                })
                && self.region.is_none_or(|r| r.contains(it.point))
        })
    }
}

/// Set of exclusion rules; a path is removed if any rule matches it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFilterSpec {
    #[serde(default)]
    pub rules: Vec<FilterRule>,
}

impl PathFilterSpec {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn validate(&self, scene: &Scene) -> Result<()> {
        for (i, r) in self.rules.iter().enumerate() {
            r.validate(scene)
                .map_err(|e| Error::invalid(format!("filter rule {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn matches(&self, path: &PathRecord, scene: &Scene) -> bool {
        self.rules.iter().any(|r| r.matches(path, scene))
    }
}

/// Copy of `result` without the paths matched by `spec`, with `h` and power
/// recomputed.
pub fn apply_filter(result: &ChannelResult, spec: &PathFilterSpec, scene: &Scene) -> Result<ChannelResult> {
    spec.validate(scene)?;
    let kept = result
        .paths
        .iter()
        .filter(|p| !spec.matches(&p.path, scene))
        .cloned()
        .collect();
    Ok(ChannelResult::from_contributions(
        result.rx_index,
        result.tx_index,
        result.tx_power_dbm,
        kept,
    ))
}

/// Serving-sector combination: the strongest transmitter wins, ties going to
/// the lowest transmitter index.
pub fn combine_transmitters(results: &[ChannelResult]) -> Result<ChannelResult> {
    let first = results
        .first()
        .ok_or_else(|| Error::invalid("no transmitter results to combine"))?;
    if results.iter().any(|r| r.rx_index != first.rx_index) {
        return Err(Error::invalid("cannot combine results for different receivers"));
    }
    let best = results
        .iter()
        .reduce(|a, b| {
            match b.power_dbm.total_cmp(&a.power_dbm).then(a.tx_index.cmp(&b.tx_index)) {
                std::cmp::Ordering::Greater => b,
                _ => a,
            }
        })
        .expect("non-empty");
    Ok(best.clone())
}

/// Reference a trace to its maximum: every sample minus the largest finite one.
pub fn normalize_trace(powers: &[f64]) -> Result<Vec<f64>> {
    if powers.iter().any(|p| p.is_nan() || *p == f64::INFINITY) {
        return Err(Error::invalid("trace contains NaN or +∞"));
    }
    let max = powers
        .iter()
        .copied()
        .filter(|p| p.is_finite())
        .reduce(f64::max)
        .ok_or_else(|| Error::invalid("trace has no finite samples"))?;
    Ok(powers.iter().map(|p| p - max).collect())
}
