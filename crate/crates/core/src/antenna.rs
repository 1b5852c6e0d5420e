//! Directional antenna patterns with mechanical orientation and downtilt.
//!
//! Orientation is an azimuth measured from north toward east; tilt is a
//! downward rotation of the boresight about the antenna's horizontal axis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    #[default]
    Vertical,
    Horizontal,
}

impl Polarization {
    /// Unit Jones vector in the `(vertical, horizontal)` ray-fixed basis.
    pub fn jones(self) -> [Complex64; 2] {
        let (one, zero) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        match self {
            Polarization::Vertical => [one, zero],
            Polarization::Horizontal => [zero, one],
        }
    }
}

fn default_floor() -> f64 {
    30.0
}

fn default_omni_hpbw_el() -> f64 {
    78.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pattern {
    /// Parabolic cellular sector model.
    Sector {
        hpbw_az: f64,
        hpbw_el: f64,
        #[serde(default = "default_floor")]
        front_back_db: f64,
        #[serde(default = "default_floor")]
        sidelobe_floor_db: f64,
    },
    /// Omnidirectional in azimuth with a parabolic elevation taper.
    Omni {
        #[serde(default = "default_omni_hpbw_el")]
        hpbw_el: f64,
        #[serde(default = "default_floor")]
        floor_db: f64,
    },
    Isotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaSpec {
    pub gain_dbi: f64,
    pub pattern: Pattern,
    /// Boresight azimuth, degrees from north toward east.
    pub orientation_deg: f64,
    /// Downward mechanical tilt, degrees.
    pub tilt_deg: f64,
    pub position: Point3,
    pub polarization: Polarization,
}

/// Direction in an antenna's local frame, radians. Azimuth is positive toward
/// the antenna's right (clockwise seen from above).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionAngles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl AntennaSpec {
    pub fn isotropic(position: Point3) -> Self {
        AntennaSpec {
            gain_dbi: 0.0,
            pattern: Pattern::Isotropic,
            orientation_deg: 0.0,
            tilt_deg: 0.0,
            position,
            polarization: Polarization::Vertical,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gain_dbi.is_finite() {
            return Err(Error::invalid("antenna gain must be finite"));
        }
        if !(self.orientation_deg.is_finite() && self.tilt_deg.is_finite() && self.position.is_finite()) {
            return Err(Error::invalid("antenna orientation/tilt/position must be finite"));
        }
        let hpbw_ok = |x: f64| x > 0.0 && x < 180.0;
        match self.pattern {
            Pattern::Sector {
                hpbw_az,
                hpbw_el,
                front_back_db,
                sidelobe_floor_db,
            } => {
                if !hpbw_ok(hpbw_az) || !hpbw_ok(hpbw_el) {
                    return Err(Error::invalid(format!(
                        "sector HPBW ({hpbw_az}, {hpbw_el}) must lie in (0, 180) degrees"
                    )));
                }
                if !(front_back_db >= 0.0 && sidelobe_floor_db >= 0.0) {
                    return Err(Error::invalid("pattern floors must be non-negative"));
                }
            }
            Pattern::Omni { hpbw_el, floor_db } => {
                if !hpbw_ok(hpbw_el) {
                    return Err(Error::invalid(format!("omni elevation HPBW {hpbw_el} must lie in (0, 180)")));
                }
                if floor_db.is_nan() || floor_db < 0.0 {
                    return Err(Error::invalid("pattern floor must be non-negative"));
                }
            }
            Pattern::Isotropic => {}
        }
        Ok(())
    }

    /// Orthonormal `(forward, right, up)` axes of the antenna in world ENU.
    pub fn frame(&self) -> (Vec3, Vec3, Vec3) {
        let (sa, ca) = self.orientation_deg.to_radians().sin_cos();
        let (st, ct) = self.tilt_deg.to_radians().sin_cos();
        let forward = Vec3::new(sa * ct, ca * ct, -st);
        let right = Vec3::new(ca, -sa, 0.0);
        let up = right.cross(forward);
        (forward, right, up)
    }

    pub fn boresight(&self) -> Vec3 {
        self.frame().0
    }

    /// Peak-normalized pattern in dB (≤ 0) for a direction in the antenna frame.
    pub fn relative_gain_db(&self, angles: DirectionAngles) -> f64 {
        let az = angles.azimuth.to_degrees();
        let el = angles.elevation.to_degrees();
        match self.pattern {
            Pattern::Sector {
                hpbw_az,
                hpbw_el,
                front_back_db,
                sidelobe_floor_db,
            } => {
                let a_az = -(12.0 * (az / hpbw_az).powi(2)).min(front_back_db);
                let a_el = -(12.0 * (el / hpbw_el).powi(2)).min(sidelobe_floor_db);
                -(-(a_az + a_el)).min(front_back_db)
            }
            Pattern::Omni { hpbw_el, floor_db } => -(12.0 * (el / hpbw_el).powi(2)).min(floor_db),
            Pattern::Isotropic => 0.0,
        }
    }

    /// Absolute power gain in dBi toward `angles`.
    pub fn gain_db(&self, angles: DirectionAngles) -> f64 {
        self.gain_dbi + self.relative_gain_db(angles)
    }
}

/// Express a world direction in the antenna's azimuth/elevation frame.
pub fn world_to_antenna_frame(dir: Vec3, spec: &AntennaSpec) -> DirectionAngles {
    let (f, r, u) = spec.frame();
    let (x, y, z) = (dir.dot(f), dir.dot(r), dir.dot(u));
    DirectionAngles {
        azimuth: y.atan2(x),
        elevation: z.clamp(-1.0, 1.0).asin(),
    }
}

/// Inverse of [`world_to_antenna_frame`].
pub fn antenna_to_world(angles: DirectionAngles, spec: &AntennaSpec) -> Vec3 {
    let (f, r, u) = spec.frame();
    let (se, ce) = angles.elevation.sin_cos();
    let (sa, ca) = angles.azimuth.sin_cos();
    f * (ce * ca) + r * (ce * sa) + u * se
}

/// Linear field amplitude `sqrt(G(Ω))` with zero phase.
pub fn pattern_amplitude(angles: DirectionAngles, spec: &AntennaSpec) -> Complex64 {
    Complex64::new(10f64.powf(spec.gain_db(angles) / 20.0), 0.0)
}
