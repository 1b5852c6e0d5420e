use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::polarimetric::{ray_basis, PolarimetricMatrix};
use crate::error::{Error, Result};
use crate::geom::{Material, MaterialKind, Vec3};

/// Fresnel amplitude reflection coefficients `(r_TE, r_TM)` of a smooth half-space.
///
/// `eps` is the complex relative permittivity with conductivity folded in.
/// With this sign convention both coefficients tend to −1 at grazing incidence
/// and `r_TM = −r_TE` at normal incidence.
pub fn fresnel_coefficients(theta_i: f64, eps: Complex64) -> Result<(Complex64, Complex64)> {
    if !(theta_i.is_finite() && (0.0..FRAC_PI_2).contains(&theta_i)) {
        return Err(Error::invalid(format!("incidence angle {theta_i} outside [0, π/2)")));
    }
    let (sin, cos) = theta_i.sin_cos();
    let root = (eps - sin * sin).sqrt();
    let r_te = (cos - root) / (cos + root);
    let r_tm = (eps * cos - root) / (eps * cos + root);
    Ok((r_te, r_tm))
}

/// Specular reflection as a transfer matrix between the ray-fixed bases of the
/// incident and reflected rays.
///
/// `normal` must face the incoming ray. Perfect conductors reflect with
/// `(r_TE, r_TM) = (−1, +1)`; blockers have no reflection and are rejected.
pub fn reflection_matrix(
    incident_dir: Vec3,
    normal: Vec3,
    material: &Material,
    freq_hz: f64,
) -> Result<PolarimetricMatrix> {
    let cos_i = -incident_dir.dot(normal);
    if cos_i <= 0.0 {
        return Err(Error::invalid("surface normal must face the incident ray"));
    }
    let (r_te, r_tm) = match material.kind {
        MaterialKind::Blocker => {
            return Err(Error::invalid(format!(
                "material `{}` is a blocker and does not reflect",
                material.name
            )))
        }
        MaterialKind::PerfectConductor => (Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)),
        MaterialKind::Dielectric => {
            let theta = cos_i.min(1.0).acos().min(FRAC_PI_2 - 1e-12);
            fresnel_coefficients(theta, material.complex_permittivity(freq_hz))?
        }
    };

    let reflected = incident_dir.reflect(normal);
    let (v_in, h_in) = ray_basis(incident_dir);
    let (v_out, h_out) = ray_basis(reflected);
    let sxn = incident_dir.cross(normal);
    // At normal incidence the plane of incidence is undefined; any transverse axis works.
    let s = if sxn.norm() > 1e-12 { sxn.normalized() } else { h_in };
    let p_in = s.cross(incident_dir);
    let p_out = s.cross(reflected);

    let to_local = PolarimetricMatrix::from_real([
        [s.dot(v_in), s.dot(h_in)],
        [p_in.dot(v_in), p_in.dot(h_in)],
    ]);
    let to_ray = PolarimetricMatrix::from_real([
        [v_out.dot(s), v_out.dot(p_out)],
        [h_out.dot(s), h_out.dot(p_out)],
    ]);
    Ok(to_ray * PolarimetricMatrix::diagonal(r_te, r_tm) * to_local)
}
