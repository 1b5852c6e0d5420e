//! WGS84 geodetic coordinates and the local east-north-up frame.

use serde::{Deserialize, Serialize};

use super::vec::{Point3, Vec3};
use crate::error::{Error, Result};

const WGS84_A: f64 = 6_378_137.0;
const WGS84_F: f64 = 1.0 / 298.257_223_563;
const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Geodetic anchor of the local ENU frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoOrigin {
    /// Degrees, WGS84.
    pub lat: f64,
    /// Degrees, WGS84.
    pub lon: f64,
    /// Meters above the ellipsoid.
    #[serde(default)]
    pub alt: f64,
}

impl GeoOrigin {
    pub fn new(lat: f64, lon: f64, alt: f64) -> Result<Self> {
        check_lat_lon(lat, lon)?;
        if !alt.is_finite() {
            return Err(Error::invalid(format!("altitude {alt} is not finite")));
        }
        Ok(GeoOrigin { lat, lon, alt })
    }

    pub fn validate(&self) -> Result<()> {
        GeoOrigin::new(self.lat, self.lon, self.alt).map(|_| ())
    }
}

pub(crate) fn check_lat_lon(lat: f64, lon: f64) -> Result<()> {
    if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
        return Err(Error::invalid(format!("latitude {lat} outside [-90, 90]")));
    }
    if !(lon.is_finite() && (-180.0..=180.0).contains(&lon)) {
        return Err(Error::invalid(format!("longitude {lon} outside [-180, 180]")));
    }
    Ok(())
}

/// Parse a degrees-minutes-seconds literal such as `49°25'25.5"N`.
pub fn parse_dms(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot parse DMS coordinate `{s}`"));
    let hemi = s.chars().last().ok_or_else(bad)?;
    let sign = match hemi.to_ascii_uppercase() {
        'N' | 'E' => 1.0,
        'S' | 'W' => -1.0,
        _ => return Err(bad()),
    };
    let body = &s[..s.len() - hemi.len_utf8()];
    let parts: Vec<&str> = body
        .split(['°', '\'', '"', '′', '″'])
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    if parts.is_empty() || parts.len() > 3 {
        return Err(bad());
    }
    let mut value = 0.0;
    for (i, p) in parts.iter().enumerate() {
        let v: f64 = p.parse().map_err(|_| bad())?;
        value += v / 60f64.powi(i as i32);
    }
    Ok(sign * value)
}

fn geodetic_to_ecef(lat: f64, lon: f64, alt: f64) -> Vec3 {
    let (sp, cp) = lat.to_radians().sin_cos();
    let (sl, cl) = lon.to_radians().sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sp * sp).sqrt();
    Vec3::new(
        (n + alt) * cp * cl,
        (n + alt) * cp * sl,
        (n * (1.0 - WGS84_E2) + alt) * sp,
    )
}

fn ecef_to_geodetic(p: Vec3) -> (f64, f64, f64) {
    let lon = p.y.atan2(p.x);
    let rho = p.x.hypot(p.y);
    let mut lat = p.z.atan2(rho * (1.0 - WGS84_E2));
    let mut alt = 0.0;
    for _ in 0..20 {
        let (sp, cp) = lat.sin_cos();
        let n = WGS84_A / (1.0 - WGS84_E2 * sp * sp).sqrt();
        alt = if cp.abs() > sp.abs() {
            rho / cp - n
        } else {
            p.z / sp - n * (1.0 - WGS84_E2)
        };
        let next = p.z.atan2(rho * (1.0 - WGS84_E2 * n / (n + alt)));
        let done = (next - lat).abs() < 1e-15;
        lat = next;
        if done {
            break;
        }
    }
    (lat.to_degrees(), lon.to_degrees(), alt)
}

/// Rows are the east, north and up unit vectors expressed in ECEF.
fn enu_axes(origin: &GeoOrigin) -> [Vec3; 3] {
    let (sp, cp) = origin.lat.to_radians().sin_cos();
    let (sl, cl) = origin.lon.to_radians().sin_cos();
    [
        Vec3::new(-sl, cl, 0.0),
        Vec3::new(-sp * cl, -sp * sl, cp),
        Vec3::new(cp * cl, cp * sl, sp),
    ]
}

/// Geodetic (degrees, meters) to local ENU meters relative to `origin`.
pub fn wgs84_to_enu(lat: f64, lon: f64, alt: f64, origin: &GeoOrigin) -> Result<Point3> {
    check_lat_lon(lat, lon)?;
    origin.validate()?;
    let d = geodetic_to_ecef(lat, lon, alt) - geodetic_to_ecef(origin.lat, origin.lon, origin.alt);
    let [e, n, u] = enu_axes(origin);
    Ok(Vec3::new(e.dot(d), n.dot(d), u.dot(d)))
}

/// Inverse of [`wgs84_to_enu`]; returns `(lat, lon, alt)`.
pub fn enu_to_wgs84(p: Point3, origin: &GeoOrigin) -> (f64, f64, f64) {
    let [e, n, u] = enu_axes(origin);
    let ecef = geodetic_to_ecef(origin.lat, origin.lon, origin.alt) + e * p.x + n * p.y + u * p.z;
    ecef_to_geodetic(ecef)
}
