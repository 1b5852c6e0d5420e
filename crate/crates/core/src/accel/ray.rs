use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};

/// Parametric ray `origin + t·dir`, valid for `t ∈ [t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3,
    pub dir: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: Point3, dir: Vec3, t_min: f64, t_max: f64) -> Result<Self> {
        if !origin.is_finite() || !dir.is_finite() {
            return Err(Error::invalid("ray origin/direction not finite"));
        }
        if (dir.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("ray direction not unit length: |d| = {}", dir.norm())));
        }
        if !(t_min >= 0.0 && t_min < t_max) {
            return Err(Error::invalid(format!("bad ray interval [{t_min}, {t_max}]")));
        }
        Ok(Ray {
            origin,
            dir,
            t_min,
            t_max,
        })
    }

    /// Ray covering the open segment from `a` to `b`, shortened by `eps` at both ends.
    pub fn segment(a: Point3, b: Point3, eps: f64) -> Option<Ray> {
        let d = b - a;
        let len = d.norm();
        if len <= 2.0 * eps {
            return None;
        }
        Some(Ray {
            origin: a,
            dir: d / len,
            t_min: eps,
            t_max: len - eps,
        })
    }

    #[inline]
    pub fn at(&self, t: f64) -> Point3 {
        self.origin + self.dir * t
    }
}

/// Nearest intersection of a ray with the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Point3,
    /// Unit normal oriented against the incoming ray.
    pub normal: Vec3,
    /// True when the ray struck the side the triangle winding faces.
    pub front_face: bool,
    pub mesh_id: usize,
    pub triangle_id: usize,
}

/// Smallest `t` at which the ray enters a sphere, if within `[t_min, t_max]`.
/// Rays starting inside the sphere never enter it and return `None`.
pub fn intersect_sphere(ray: &Ray, center: Point3, radius: f64) -> Option<f64> {
    debug_assert!(radius > 0.0);
    let oc = ray.origin - center;
    let b = oc.dot(ray.dir);
    let c = oc.norm_sq() - radius * radius;
    if c < 0.0 {
        return None;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    (t >= ray.t_min && t <= ray.t_max).then_some(t)
}

/// Watertight ray/triangle test (Woop, Benthin & Wald). Returns `t` on hit.
#[inline]
pub fn intersect_triangle(ray: &Ray, v: &[Point3; 3]) -> Option<f64> {
    let d = ray.dir;
    let ad = [d.x.abs(), d.y.abs(), d.z.abs()];
    let kz = if ad[0] > ad[1] {
        if ad[0] > ad[2] {
            0
        } else {
            2
        }
    } else if ad[1] > ad[2] {
        1
    } else {
        2
    };
    let mut kx = (kz + 1) % 3;
    let mut ky = (kx + 1) % 3;
    if d[kz] < 0.0 {
        std::mem::swap(&mut kx, &mut ky);
    }
    let sx = d[kx] / d[kz];
    let sy = d[ky] / d[kz];
    let sz = 1.0 / d[kz];

    let a = v[0] - ray.origin;
    let b = v[1] - ray.origin;
    let c = v[2] - ray.origin;
    let ax = a[kx] - sx * a[kz];
    let ay = a[ky] - sy * a[kz];
    let bx = b[kx] - sx * b[kz];
    let by = b[ky] - sy * b[kz];
    let cx = c[kx] - sx * c[kz];
    let cy = c[ky] - sy * c[kz];

    let u = cx * by - cy * bx;
    let vv = ax * cy - ay * cx;
    let w = bx * ay - by * ax;
    if (u < 0.0 || vv < 0.0 || w < 0.0) && (u > 0.0 || vv > 0.0 || w > 0.0) {
        return None;
    }
    let det = u + vv + w;
    if det == 0.0 {
        return None;
    }
    let t_scaled = u * sz * a[kz] + vv * sz * b[kz] + w * sz * c[kz];
    let t = t_scaled / det;
    (t >= ray.t_min && t <= ray.t_max).then_some(t)
}
