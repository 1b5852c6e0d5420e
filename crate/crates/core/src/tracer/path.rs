use serde::{Deserialize, Serialize};

use crate::antenna::DirectionAngles;
use crate::em::{PolarimetricMatrix, C0};
use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Reflection,
    Diffraction,
}

impl InteractionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Reflection => "reflection",
            InteractionKind::Diffraction => "diffraction",
        }
    }
}

/// One bounce along a path. `primitive_id` is a triangle index within the mesh
/// for reflections and an index into the scene edge list for diffractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub kind: InteractionKind,
    pub point: Point3,
    pub mesh_id: usize,
    pub primitive_id: usize,
}

/// Coarse classification of a whole path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    LineOfSight,
    Reflection,
    Diffraction,
}

impl PathKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::LineOfSight => "los",
            PathKind::Reflection => "reflection",
            PathKind::Diffraction => "diffraction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub interactions: Vec<Interaction>,
    pub total_length: f64,
    /// Propagation delay, seconds.
    pub tau: f64,
    /// Unit direction leaving the transmitter.
    pub departure_dir: Vec3,
    /// Unit direction of travel on the final segment into the receiver.
    pub arrival_dir: Vec3,
    /// Departure angles in the transmitter antenna frame.
    pub aod: DirectionAngles,
    /// Angles of the direction pointing back from the receiver along the
    /// arriving ray (azimuth from north towards east, elevation above horizon).
    pub aoa: DirectionAngles,
    /// Cascade of interaction matrices in ray-fixed (v, h) bases.
    pub polarimetric: PolarimetricMatrix,
    /// Total knife-edge loss over all diffractions, dB.
    pub diffraction_loss_db: f64,
    pub path_id: u64,
}

impl PathRecord {
    pub fn kind(&self) -> PathKind {
        if self.interactions.is_empty() {
            PathKind::LineOfSight
        } else if self
            .interactions
            .iter()
            .any(|i| i.kind == InteractionKind::Diffraction)
        {
            PathKind::Diffraction
        } else {
            PathKind::Reflection
        }
    }

    pub fn reflection_count(&self) -> usize {
        self.interactions
            .iter()
            .filter(|i| i.kind == InteractionKind::Reflection)
            .count()
    }

    pub fn diffraction_count(&self) -> usize {
        self.interactions.len() - self.reflection_count()
    }

    /// Vertices of the polyline from `tx` to `rx`.
    pub fn vertices(&self, tx: Point3, rx: Point3) -> Vec<Point3> {
        let mut v = Vec::with_capacity(self.interactions.len() + 2);
        v.push(tx);
        v.extend(self.interactions.iter().map(|i| i.point));
        v.push(rx);
        v
    }
}

/// Stable identifier of a primitive sequence (FNV-1a, 64 bit).
pub fn path_id(interactions: &[Interaction]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    for i in interactions {
        feed(&[i.kind as u8]);
        feed(&(i.mesh_id as u64).to_le_bytes());
        feed(&(i.primitive_id as u64).to_le_bytes());
    }
    h
}

/// How the capture sphere around each receiver is sized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum RxSphere {
    /// Radius grows with unfolded path length: `scale * L * spacing / 2`.
    Adaptive { scale: f64 },
    /// Constant radius in metres.
    Fixed { radius: f64 },
}

impl Default for RxSphere {
    fn default() -> Self {
        RxSphere::Adaptive { scale: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaunchConfig {
    /// Launch budget, shared by the nested lattices of [`launch_levels`](super::launch_levels).
    pub ray_count: usize,
    pub max_reflections: usize,
    pub enable_diffraction: bool,
    pub rx_sphere: RxSphere,
    /// Paths longer than this are discarded, metres.
    pub max_path_length: f64,
    pub frequency_hz: f64,
}

impl Default for LaunchConfig {
    fn default() -> Self {
        LaunchConfig {
            ray_count: 200_000,
            max_reflections: 2,
            enable_diffraction: true,
            rx_sphere: RxSphere::default(),
            max_path_length: 3000.0,
            frequency_hz: 3.75e9,
        }
    }
}

pub const MAX_REFLECTIONS: usize = 2;
pub const MIN_RAY_COUNT: usize = 100;

impl LaunchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ray_count < MIN_RAY_COUNT {
            return Err(Error::invalid(format!(
                "ray_count {} is below the minimum of {MIN_RAY_COUNT}",
                self.ray_count
            )));
        }
        if self.max_reflections > MAX_REFLECTIONS {
            return Err(Error::invalid(format!(
                "max_reflections {} exceeds the supported {MAX_REFLECTIONS}",
                self.max_reflections
            )));
        }
        if !(self.max_path_length.is_finite() && self.max_path_length > 0.0) {
            return Err(Error::invalid("max_path_length must be positive"));
        }
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(Error::invalid("frequency_hz must be positive"));
        }
        match self.rx_sphere {
            RxSphere::Adaptive { scale } if !(scale.is_finite() && scale > 0.0) => {
                Err(Error::invalid("rx sphere scale must be positive"))
            }
            RxSphere::Fixed { radius } if !(radius.is_finite() && radius > 0.0) => {
                Err(Error::invalid("rx sphere radius must be positive"))
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn delay(length: f64) -> f64 {
    length / C0
}
