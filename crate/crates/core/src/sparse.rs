//! Symmetric sparse matrices, Jacobi-preconditioned CG and an envelope
//! Cholesky factorization under reverse Cuthill–McKee ordering.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n, row_ptr, col, val }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col[k], self.val[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map(|(_, v)| v).unwrap_or(0.0)
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Removes row and column `k`.
    pub fn without(&self, k: usize) -> Csr {
        let map = |j: usize| if j < k { j } else { j - 1 };
        let mut t = Vec::with_capacity(self.val.len());
        for i in (0..self.n).filter(|&i| i != k) {
            for (j, v) in self.row(i).filter(|&(j, _)| j != k) {
                t.push((map(i), map(j), v));
            }
        }
        Csr::from_triplets(self.n - 1, t)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients; stops at ‖r‖ ≤ tol·‖b‖.
pub fn pcg(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.n;
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgOutcome { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let inv: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 1..=max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Numeric(format!("CG breakdown at iteration {it}: pᵀAp = {pap:e}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= tol {
            return Ok(CgOutcome { x, iterations: it, relative_residual: res });
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Numeric(format!("CG did not converge in {max_iter} iterations (relative residual {res:e})")))
}

/// Reverse Cuthill–McKee permutation: `perm[new] = old`.
pub fn rcm_order(a: &Csr) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let bfs_levels = |s: usize| {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        let mut last = s;
        while let Some(v) = q.pop_front() {
            last = v;
            for (w, _) in a.row(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        (last, dist[last])
    };
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for seed in 0..n {
        if placed[seed] {
            continue;
        }
        // Pseudo-peripheral start.
        let mut start = seed;
        let mut ecc = bfs_levels(start).1;
        for _ in 0..5 {
            let (far, _) = bfs_levels(start);
            let (_, e) = bfs_levels(far);
            if e <= ecc {
                break;
            }
            start = far;
            ecc = e;
        }
        placed[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = a.row(v).map(|(w, _)| w).filter(|&w| !placed[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                placed[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &Csr) -> Result<Self> {
        let n = a.n;
        let perm = rcm_order(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (j, _) in a.row(old) {
                let j = inv[j];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for old in 0..n {
            let i = inv[old];
            for (j, v) in a.row(old) {
                let j = inv[j];
                if j <= i {
                    data[start[i] + j - first[i]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[start[i] + j - fi];
                let ri = &data[start[i] + k0 - fi..start[i] + j - fi];
                let rj = &data[start[j] + k0 - fj..start[j] + j - fj];
                s -= dot(ri, rj);
                if j < i {
                    let d = data[start[j + 1] - 1];
                    data[start[i] + j - fi] = s / d;
                } else {
                    if s <= 0.0 {
                        return Err(Error::Numeric(format!("matrix is not positive definite (pivot {s:e} at row {i})")));
                    }
                    data[start[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { perm, first, start, data })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s = dot(&row[..i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }
}
