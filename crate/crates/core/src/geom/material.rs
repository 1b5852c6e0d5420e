use serde::{Deserialize, Serialize};

use crate::em::EPS0;
use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Dielectric,
    PerfectConductor,
    /// Absorbs every ray on contact (dense vegetation).
    Blocker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Real relative permittivity.
    pub eps_r: f64,
    /// Conductivity, S/m.
    pub sigma: f64,
    pub kind: MaterialKind,
}

impl Material {
    pub fn new(name: impl Into<String>, eps_r: f64, sigma: f64, kind: MaterialKind) -> Result<Self> {
        let m = Material {
            name: name.into(),
            eps_r,
            sigma,
            kind,
        };
        m.validate()?;
        Ok(m)
    }

    /// Concrete at 3.75 GHz (ITU-R P.2040 parameterisation).
    pub fn concrete() -> Self {
        Material {
            name: "concrete".into(),
            eps_r: 5.24,
            sigma: 0.123,
            kind: MaterialKind::Dielectric,
        }
    }

    /// Medium dry ground.
    pub fn ground() -> Self {
        Material {
            name: "ground".into(),
            eps_r: 3.0,
            sigma: 0.05,
            kind: MaterialKind::Dielectric,
        }
    }

    pub fn perfect_conductor() -> Self {
        Material {
            name: "pec".into(),
            eps_r: 1.0,
            sigma: 0.0,
            kind: MaterialKind::PerfectConductor,
        }
    }

    pub fn blocker() -> Self {
        Material {
            name: "blocker".into(),
            eps_r: 1.0,
            sigma: 0.0,
            kind: MaterialKind::Blocker,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_r.is_finite() && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("material `{}` has non-finite parameters", self.name)));
        }
        if self.kind == MaterialKind::Dielectric && self.eps_r < 1.0 {
            return Err(Error::invalid(format!(
                "material `{}`: eps_r {} < 1",
                self.name, self.eps_r
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid(format!(
                "material `{}`: negative conductivity {}",
                self.name, self.sigma
            )));
        }
        Ok(())
    }

    pub fn is_blocker(&self) -> bool {
        self.kind == MaterialKind::Blocker
    }

    /// eps_r − j·sigma/(2π f ε0)
    pub fn complex_permittivity(&self, freq_hz: f64) -> Complex64 {
        Complex64::new(
            self.eps_r,
            -self.sigma / (2.0 * std::f64::consts::PI * freq_hz * EPS0),
        )
    }
}
