//! Electromagnetic interaction coefficients: free-space term, Fresnel
//! reflection, polarimetric composition and knife-edge diffraction.

mod fresnel;
mod knife_edge;
mod polarimetric;

pub use fresnel::{fresnel_coefficients, reflection_matrix};
pub use knife_edge::{fresnel_integrals, knife_edge_loss, knife_edge_v, UNIT_GAIN_V};
pub use polarimetric::{ray_basis, PolarimetricMatrix};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;

pub fn wavelength(freq_hz: f64) -> f64 {
    C0 / freq_hz
}

/// `(c0 / 4π f) / L · exp(−j 2π f τ)` with `τ = L / c0`.
pub fn free_space_amplitude(path_length: f64, freq_hz: f64) -> Result<Complex64> {
    if !(path_length.is_finite() && path_length > 0.0) {
        return Err(Error::invalid(format!("path length {path_length} must be positive")));
    }
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(Error::invalid(format!("frequency {freq_hz} must be positive")));
    }
    let mag = C0 / (4.0 * std::f64::consts::PI * freq_hz) / path_length;
    Ok(Complex64::from_polar(mag, -phase_delay(path_length, freq_hz)))
}

/// `2π f L / c0`, reduced modulo 2π to keep the phase well conditioned.
pub fn phase_delay(path_length: f64, freq_hz: f64) -> f64 {
    let cycles = path_length * freq_hz / C0;
    std::f64::consts::TAU * (cycles - cycles.floor())
}
