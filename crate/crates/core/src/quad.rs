//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One 15-point Kronrod panel with the embedded 7-point Gauss error estimate.
pub fn gk15<const N: usize>(f: &mut impl FnMut(f64) -> Result<[f64; N]>, a: f64, b: f64) -> Result<([f64; N], [f64; N])> {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(c)?;
    for j in 0..N {
        k[j] = WGK[7] * fc[j];
        g[j] = WG[3] * fc[j];
    }
    for i in 0..7 {
        let x = r * XGK[i];
        let f1 = f(c - x)?;
        let f2 = f(c + x)?;
        for j in 0..N {
            k[j] += WGK[i] * (f1[j] + f2[j]);
            if i % 2 == 1 {
                g[j] += WG[i / 2] * (f1[j] + f2[j]);
            }
        }
    }
    let mut err = [0.0; N];
    for j in 0..N {
        k[j] *= r;
        err[j] = (k[j] - g[j] * r).abs();
    }
    Ok((k, err))
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    val: [f64; N],
    err: [f64; N],
    key: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, o: &Self) -> bool {
        self.key == o.key
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.key.partial_cmp(&o.key).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Integrates until every component meets `max(rel_tol·|I|, abs_tol)`.
pub fn integrate<const N: usize>(
    mut f: impl FnMut(f64) -> Result<[f64; N]>,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<[f64; N]> {
    const MAX_PANELS: usize = 2000;
    let (v, e) = gk15(&mut f, a, b)?;
    let score = |e: &[f64; N], total: &[f64; N]| -> f64 {
        (0..N).map(|j| e[j] / (rel_tol * total[j].abs()).max(abs_tol).max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
    };
    let mut total = v;
    let mut total_err = e;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, val: v, err: e, key: e.iter().cloned().fold(0.0, f64::max) });
    let mut panels = 1;
    while score(&total_err, &total) > 1.0 {
        if panels >= MAX_PANELS {
            let achieved = (0..N).map(|j| total_err[j] / total[j].abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
            return Err(Error::Numeric(format!("quadrature did not converge; achieved relative error {achieved:e}")));
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&mut f, p.a, m)?;
        let (v2, e2) = gk15(&mut f, m, p.b)?;
        for j in 0..N {
            total[j] += v1[j] + v2[j] - p.val[j];
            total_err[j] += e1[j] + e2[j] - p.err[j];
        }
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1, key: e1.iter().cloned().fold(0.0, f64::max) });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2, key: e2.iter().cloned().fold(0.0, f64::max) });
        panels += 1;
    }
    // Recompute the sum from the panels to shed accumulated rounding.
    let mut sum = [0.0; N];
    for p in heap.iter() {
        for j in 0..N {
            sum[j] += p.val[j];
        }
    }
    Ok(sum)
}
