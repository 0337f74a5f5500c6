//! Extended complex plane and stereographic projection.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point of the Riemann sphere, either finite or ∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExtPoint {
    Finite(Complex64),
    Infinity,
}

impl ExtPoint {
    pub fn finite(re: f64, im: f64) -> Self {
        ExtPoint::Finite(Complex64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtPoint::Infinity)
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match *self {
            ExtPoint::Finite(z) => Some(z),
            ExtPoint::Infinity => None,
        }
    }

    /// Image under w = 1/z.
    pub fn inverted(&self) -> ExtPoint {
        match *self {
            ExtPoint::Infinity => ExtPoint::Finite(Complex64::new(0.0, 0.0)),
            ExtPoint::Finite(z) if z.norm_sqr() == 0.0 => ExtPoint::Infinity,
            ExtPoint::Finite(z) => ExtPoint::Finite(z.inv()),
        }
    }

    /// |z|, with ∞ mapped to f64::INFINITY.
    pub fn modulus(&self) -> f64 {
        match *self {
            ExtPoint::Finite(z) => z.norm(),
            ExtPoint::Infinity => f64::INFINITY,
        }
    }

    pub fn to_sphere(&self) -> [f64; 3] {
        match *self {
            ExtPoint::Infinity => [0.0, 0.0, 1.0],
            ExtPoint::Finite(z) => {
                let r2 = z.norm_sqr();
                let d = 1.0 + r2;
                [2.0 * z.re / d, 2.0 * z.im / d, (r2 - 1.0) / d]
            }
        }
    }

    pub fn from_sphere(p: [f64; 3]) -> ExtPoint {
        let den = 1.0 - p[2];
        if den <= 1e-300 {
            ExtPoint::Infinity
        } else {
            ExtPoint::Finite(Complex64::new(p[0] / den, p[1] / den))
        }
    }
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let n = norm3(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Twice the signed area of the planar triangle (a, b, c).
pub fn orient2(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    ((b - a).conj() * (c - a)).im
}

/// Angle at `a` in the planar triangle (a, b, c).
pub fn corner_angle(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let u = b - a;
    let v = c - a;
    (u.conj() * v).im.abs().atan2((u.conj() * v).re)
}

/// Cotangent of the angle at `a` in the planar triangle (a, b, c).
pub fn corner_cot(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let p = (b - a).conj() * (c - a);
    p.re / p.im.abs()
}

/// Cotangent of the angle at `a` in the flat 3D triangle (a, b, c).
pub fn corner_cot3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = sub3(b, a);
    let v = sub3(c, a);
    dot3(u, v) / norm3(cross3(u, v))
}

pub fn corner_angle3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = sub3(b, a);
    let v = sub3(c, a);
    norm3(cross3(u, v)).atan2(dot3(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stereographic_round_trip() {
        for &(re, im) in &[(0.0, 0.0), (0.3, -2.0), (5.0, 7.0), (-1e-3, 1e-4)] {
            let p = ExtPoint::finite(re, im);
            let s = p.to_sphere();
            assert!((norm3(s) - 1.0).abs() < 1e-14);
            let q = ExtPoint::from_sphere(s).as_finite().unwrap();
            assert!((q - Complex64::new(re, im)).norm() < 1e-12 * (1.0 + re.abs() + im.abs()));
        }
        assert_eq!(ExtPoint::from_sphere([0.0, 0.0, 1.0]), ExtPoint::Infinity);
        assert_eq!(ExtPoint::Infinity.to_sphere(), [0.0, 0.0, 1.0]);
        assert_eq!(ExtPoint::finite(0.0, 0.0).to_sphere(), [0.0, 0.0, -1.0]);
    }

    #[test]
    fn cotangents() {
        let a = Complex64::new(0.0, 0.0);
        let b = Complex64::new(1.0, 0.0);
        let c = Complex64::new(0.0, 1.0);
        assert!(corner_cot(a, b, c).abs() < 1e-15);
        assert!((corner_cot(b, c, a) - 1.0).abs() < 1e-15);
        assert!((corner_angle(b, a, c) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!(orient2(a, b, c) > 0.0);
    }
}
