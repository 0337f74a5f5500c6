use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const GOLDEN: f64 = 1.618_033_988_749_895;

/// Fibonacci spiral: point k has height 1 − 2(k + ½)/n and azimuth 2πk/φ.
pub fn fibonacci_points(n: usize) -> Result<Vec<[f64; 3]>> {
    if n < 4 {
        return Err(Error::Argument(format!("need at least 4 points, got {n}")));
    }
    Ok((0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let theta = 2.0 * std::f64::consts::PI * k as f64 / GOLDEN;
            [r * theta.cos(), r * theta.sin(), z]
        })
        .collect())
}

/// Uniform i.i.d. points on S² from a seeded ChaCha8 stream.
pub fn random_points(n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    if n < 4 {
        return Err(Error::Argument(format!("need at least 4 points, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let theta: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let r = (1.0 - z * z).max(0.0).sqrt();
            [r * theta.cos(), r * theta.sin(), z]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{norm3, sub3};

    fn min_dist(p: &[[f64; 3]]) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                m = m.min(norm3(sub3(p[i], p[j])));
            }
        }
        m
    }

    #[test]
    fn fibonacci_basic() {
        let p = fibonacci_points(4).unwrap();
        assert!(min_dist(&p) > 0.0);
        assert_eq!(fibonacci_points(1000).unwrap(), fibonacci_points(1000).unwrap());
        assert!(fibonacci_points(3).is_err());
        for q in fibonacci_points(50).unwrap() {
            assert!((norm3(q) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn fibonacci_spacing_scales() {
        let c = 2.0 * min_dist(&fibonacci_points(4000).unwrap());
        let d = min_dist(&fibonacci_points(1000).unwrap());
        assert!(d >= 0.5 * c && d <= 2.0 * c, "{d} vs {c}");
    }

    #[test]
    fn random_reproducible() {
        assert_eq!(random_points(100, 7).unwrap(), random_points(100, 7).unwrap());
        assert_ne!(random_points(100, 7).unwrap(), random_points(100, 8).unwrap());
        assert!(random_points(2, 0).is_err());
    }

    #[test]
    fn random_mean_small() {
        let p = random_points(10_000, 1).unwrap();
        let mut m = [0.0; 3];
        for q in &p {
            for i in 0..3 {
                m[i] += q[i] / p.len() as f64;
            }
        }
        assert!(norm3(m) < 0.05);
    }
}
