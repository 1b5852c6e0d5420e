use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

/// Ray-fixed polarization basis `(vertical, horizontal)` for propagation direction `d`.
///
/// `h = ẑ × d` normalized (east for rays going straight up or down) and `v = d × h`,
/// which points upward for horizontal rays.
pub fn ray_basis(d: Vec3) -> (Vec3, Vec3) {
    let zxd = Vec3::Z.cross(d);
    let h = if zxd.norm() > 1e-12 {
        zxd.normalized()
    } else {
        Vec3::X
    };
    (d.cross(h).normalized(), h)
}

/// 2×2 complex transfer matrix acting on `(E_v, E_h)` in the ray-fixed basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarimetricMatrix(pub [[Complex64; 2]; 2]);

impl PolarimetricMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        PolarimetricMatrix([[one, zero], [zero, one]])
    }

    pub fn diagonal(a: Complex64, b: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        PolarimetricMatrix([[a, zero], [zero, b]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        PolarimetricMatrix(m.map(|row| row.map(|x| Complex64::new(x, 0.0))))
    }

    pub fn apply(&self, e: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[0][0] * e[0] + m[0][1] * e[1],
            m[1][0] * e[0] + m[1][1] * e[1],
        ]
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Singular values, largest first.
    ///
    /// The matrix is first reduced to a real upper-triangular one by a unitary
    /// QR step and phase scaling, so nearly equal singular values come out to
    /// full precision instead of through a cancelling discriminant.
    pub fn singular_values(&self) -> (f64, f64) {
        let m = &self.0;
        let (a, c) = (m[0][0], m[1][0]);
        let f = a.norm().hypot(c.norm());
        let (g, h) = if f == 0.0 {
            (m[0][1].norm(), m[1][1].norm())
        } else {
            // First row of Qᴴ is (a, c)ᴴ/f; the second is orthogonal to it.
            let (qa, qc) = (a.conj() / f, c.conj() / f);
            let g = qa * m[0][1] + qc * m[1][1];
            let h = -c / f * m[0][1] + a / f * m[1][1];
            (g.norm(), h.norm())
        };
        triangular_singular_values(f, g, h)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Singular values of the real matrix `[[f, g], [0, h]]`, largest first.
fn triangular_singular_values(f: f64, g: f64, h: f64) -> (f64, f64) {
    let (fa, ga, ha) = (f.abs(), g.abs(), h.abs());
    let (mn, mx) = (fa.min(ha), fa.max(ha));
    if mn == 0.0 {
        let big = if mx == 0.0 { ga } else { mx.max(ga) * (1.0 + (mx.min(ga) / mx.max(ga)).powi(2)).sqrt() };
        return (big, 0.0);
    }
    if ga < mx {
        let s = 1.0 + mn / mx;
        let t = (mx - mn) / mx;
        let u = (ga / mx).powi(2);
        let c = 2.0 / ((s * s + u).sqrt() + (t * t + u).sqrt());
        (mx / c, mn * c)
    } else {
        let u = mx / ga;
        if u == 0.0 {
            return (ga, mn * mx / ga);
        }
        let s = 1.0 + mn / mx;
        let t = (mx - mn) / mx;
        let c = 1.0 / ((1.0 + (s * u).powi(2)).sqrt() + (1.0 + (t * u).powi(2)).sqrt());
        (ga / (c + c), 2.0 * mn * c * u)
    }
}

impl Mul for PolarimetricMatrix {
    type Output = PolarimetricMatrix;
    fn mul(self, o: PolarimetricMatrix) -> PolarimetricMatrix {
        let (a, b) = (&self.0, &o.0);
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        PolarimetricMatrix(out)
    }
}
