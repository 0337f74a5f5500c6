//! Discrete holomorphic integrals, period matrices and their comparison
//! with reference values.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::covering::JsonComplex;
use crate::error::{Error, Result};
use crate::harmonic::{
    conjugate_function, face_energy, solve_multivalued_harmonic, vertex_energy, FaceFunction, HarmonicSolver,
    MultiValuedVertexFunction,
};
use crate::homology::CutSystem;
use crate::mesh::{mesh_stats, CoverMesh, MeshStats};
use crate::weights::WeightSet;

type CMat = DMatrix<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Energy,
    Both,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Method::Direct),
            "energy" => Ok(Method::Energy),
            "both" => Ok(Method::Both),
            _ => Err(Error::Argument(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PeriodResult {
    pub pi: CMat,
    pub pi_dual: CMat,
    pub energy_matrix: DMatrix<f64>,
    pub stats: MeshStats,
    pub method: Method,
    /// ‖Π − Πᵀ‖_F.
    pub symmetry_defect: f64,
    /// ‖Π_direct − Π_energy‖_F / ‖Π_direct‖_F.
    pub cross_defect: f64,
    /// Largest |E(Re φ) − E(Im φ)| / E(Re φ) over the computed integrals.
    pub conjugate_energy_defect: f64,
}

/// A discrete holomorphic integral with its A- and B-periods.
#[derive(Clone, Debug)]
pub struct HolomorphicIntegral {
    pub u: MultiValuedVertexFunction,
    pub v: FaceFunction,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

/// Harmonic solves at the 2g unit period vectors and the conjugate periods
/// of each; all integrals are linear combinations of these.
pub struct PeriodSolver<'a> {
    pub mesh: &'a CoverMesh,
    pub weights: &'a WeightSet,
    pub cuts: &'a CutSystem,
    pub config: Config,
    probes: Vec<MultiValuedVertexFunction>,
    /// `k[(j, i)]`: period of the conjugate of probe i along cycle j.
    pub k: DMatrix<f64>,
}

impl<'a> PeriodSolver<'a> {
    pub fn new(mesh: &'a CoverMesh, weights: &'a WeightSet, cuts: &'a CutSystem, config: &Config) -> Result<Self> {
        let g = cuts.genus;
        if g == 0 {
            return Err(Error::Argument("genus 0 surface has no period matrix".into()));
        }
        let solver = HarmonicSolver::new(mesh, weights, config, 0)?;
        let n = 2 * g;
        let probes: Vec<(MultiValuedVertexFunction, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let p: Vec<f64> = (0..n).map(|j| (i == j) as u8 as f64).collect();
                let u = solve_multivalued_harmonic(&solver, mesh, weights, cuts, &p)?;
                let v = conjugate_function(mesh, weights, cuts, &u, 0, None, config)?;
                Ok((u, v.periods))
            })
            .collect::<Result<_>>()?;
        let k = DMatrix::from_fn(n, n, |j, i| probes[i].1[j]);
        let probes = probes.into_iter().map(|p| p.0).collect();
        Ok(PeriodSolver { mesh, weights, cuts, config: config.clone(), probes, k })
    }

    pub fn genus(&self) -> usize {
        self.cuts.genus
    }

    /// The harmonic function with real periods `p`, by superposition.
    pub fn harmonic(&self, p: &[f64]) -> MultiValuedVertexFunction {
        let mut base = vec![0.0; self.mesh.n_vertices()];
        for (c, u) in p.iter().zip(&self.probes) {
            if *c != 0.0 {
                base.iter_mut().zip(&u.base).for_each(|(b, x)| *b += c * x);
            }
        }
        MultiValuedVertexFunction { base, periods: p.to_vec() }
    }

    fn block(&self, rows: usize, cols: usize) -> DMatrix<f64> {
        let g = self.genus();
        self.k.view((rows * g, cols * g), (g, g)).into_owned()
    }

    fn integral_with(&self, p: Vec<f64>) -> Result<HolomorphicIntegral> {
        let g = self.genus();
        let u = self.harmonic(&p);
        let v = conjugate_function(self.mesh, self.weights, self.cuts, &u, 0, None, &self.config)?;
        let a = (0..g).map(|k| Complex64::new(p[k], v.periods[k])).collect();
        let b = (0..g).map(|k| Complex64::new(p[g + k], v.periods[g + k])).collect();
        Ok(HolomorphicIntegral { u, v, a, b })
    }

    fn alpha_b_inverse(&self) -> Result<DMatrix<f64>> {
        self.block(0, 1)
            .try_inverse()
            .ok_or_else(|| Error::Degeneracy("conjugate α-period system is singular".into()))
    }

    /// φ^l with A-periods δ_kl (l is zero-based).
    pub fn holomorphic_integral(&self, l: usize) -> Result<HolomorphicIntegral> {
        let g = self.genus();
        if l >= g {
            return Err(Error::Argument(format!("index {l} out of range for genus {g}")));
        }
        let e = DMatrix::from_fn(g, 1, |k, _| (k == l) as u8 as f64);
        let b = -self.alpha_b_inverse()? * self.block(0, 0) * e;
        let mut p = vec![0.0; 2 * g];
        p[l] = 1.0;
        p[g..].copy_from_slice(b.as_slice());
        self.integral_with(p)
    }

    /// The integral with A-periods iδ_kl.
    pub fn dual_integral(&self, l: usize) -> Result<HolomorphicIntegral> {
        let g = self.genus();
        if l >= g {
            return Err(Error::Argument(format!("index {l} out of range for genus {g}")));
        }
        let e = DMatrix::from_fn(g, 1, |k, _| (k == l) as u8 as f64);
        let b = self.alpha_b_inverse()? * e;
        let mut p = vec![0.0; 2 * g];
        p[g..].copy_from_slice(b.as_slice());
        self.integral_with(p)
    }

    /// E_T by polarization of the quadratic form P ↦ E(u_P).
    pub fn energy_matrix(&self) -> DMatrix<f64> {
        let n = 2 * self.genus();
        let q = |p: &[f64]| vertex_energy(self.mesh, self.weights, self.cuts, &self.harmonic(p));
        let unit = |i: usize| (0..n).map(|j| (i == j) as u8 as f64).collect::<Vec<_>>();
        let diag: Vec<f64> = (0..n).map(|i| q(&unit(i))).collect();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else {
                let s: Vec<f64> = (0..n).map(|k| ((k == i) || (k == j)) as u8 as f64).collect();
                0.5 * (q(&s) - diag[i] - diag[j])
            }
        })
    }

    /// Π_T and Π_T* from B-periods, plus the worst conjugate-energy defect.
    pub fn direct(&self) -> Result<(CMat, CMat, f64)> {
        let g = self.genus();
        let mut pi = CMat::zeros(g, g);
        let mut dual = CMat::zeros(g, g);
        let mut defect = 0.0f64;
        for l in 0..g {
            for (target, phi, scale) in [
                (&mut pi, self.holomorphic_integral(l)?, Complex64::new(1.0, 0.0)),
                (&mut dual, self.dual_integral(l)?, Complex64::new(0.0, -1.0)),
            ] {
                let eu = vertex_energy(self.mesh, self.weights, self.cuts, &phi.u);
                let ev = face_energy(self.mesh, self.weights, self.cuts, &phi.v, self.config.zero_weight_tol)?;
                defect = defect.max((eu - ev).abs() / eu);
                for k in 0..g {
                    target[(k, l)] = phi.b[k] * scale;
                }
            }
        }
        Ok((pi, dual, defect))
    }
}

/// Inverts the block form of the energy (see [`energy_from_periods`]).
pub fn period_matrices_from_energy(e: &DMatrix<f64>) -> Result<(CMat, CMat)> {
    let n = e.nrows();
    if n % 2 != 0 || e.ncols() != n || n == 0 {
        return Err(Error::Argument(format!("energy matrix must be 2g×2g, got {}×{}", e.nrows(), e.ncols())));
    }
    let g = n / 2;
    let e11 = e.view((0, 0), (g, g));
    let e12 = e.view((0, g), (g, g));
    let e21 = e.view((g, 0), (g, g));
    let e22 = e.view((g, g), (g, g)).into_owned();
    if e22.clone().cholesky().is_none() {
        return Err(Error::Degeneracy("lower-right energy block is not positive definite".into()));
    }
    let inv = e22.try_inverse().ok_or_else(|| Error::Degeneracy("lower-right energy block is singular".into()))?;
    let im_dual = inv.clone();
    let re_dual = -(e12 * &inv);
    let re_pi = -(&inv * e21);
    let im_pi = e11 - e12 * &inv * e21;
    let pi = CMat::from_fn(g, g, |i, j| Complex64::new(re_pi[(i, j)], im_pi[(i, j)]));
    let dual = CMat::from_fn(g, g, |i, j| Complex64::new(re_dual[(i, j)], im_dual[(i, j)]));
    Ok((pi, dual))
}

/// The block form E = [[Im Π + Re Π*(Im Π*)⁻¹Re Π, −Re Π*(Im Π*)⁻¹], [−(Im Π*)⁻¹Re Π, (Im Π*)⁻¹]]
/// for P = (Re A, Re B), with B-periods of the l-th integral in column l.
pub fn energy_from_periods(pi: &CMat, pi_dual: &CMat) -> Result<DMatrix<f64>> {
    let g = pi.nrows();
    let re = pi.map(|c| c.re);
    let im = pi.map(|c| c.im);
    let re_d = pi_dual.map(|c| c.re);
    let inv = pi_dual
        .map(|c| c.im)
        .try_inverse()
        .ok_or_else(|| Error::Degeneracy("Im Π* is singular".into()))?;
    let e11 = &im + &re_d * &inv * &re;
    let e12 = -(&re_d * &inv);
    let e21 = -(&inv * &re);
    let mut e = DMatrix::zeros(2 * g, 2 * g);
    e.view_mut((0, 0), (g, g)).copy_from(&e11);
    e.view_mut((0, g), (g, g)).copy_from(&e12);
    e.view_mut((g, 0), (g, g)).copy_from(&e21);
    e.view_mut((g, g), (g, g)).copy_from(&inv);
    Ok(e)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    let sym = (m + m.transpose()) * 0.5;
    sym.cholesky().is_some()
}

pub fn period_matrix(mesh: &CoverMesh, weights: &WeightSet, cuts: &CutSystem, method: Method, config: &Config) -> Result<PeriodResult> {
    let solver = PeriodSolver::new(mesh, weights, cuts, config)?;
    let energy_matrix = solver.energy_matrix();
    if !is_positive_definite(&energy_matrix) {
        return Err(Error::Consistency("energy matrix is not positive definite".into()));
    }
    let (pe, pde) = period_matrices_from_energy(&energy_matrix)?;
    let (pi, pi_dual, cross_defect, conj) = match method {
        Method::Energy => (pe, pde, f64::NAN, f64::NAN),
        Method::Direct | Method::Both => {
            let (pi, pd, conj) = solver.direct()?;
            let cross = frobenius(&(&pi - &pe)) / frobenius(&pi);
            if method == Method::Both && cross > config.cross_tol {
                return Err(Error::Consistency(format!("direct and energy period matrices differ by {cross:e} (relative)")));
            }
            (pi, pd, cross, conj)
        }
    };
    if !is_positive_definite(&pi.map(|c| c.im)) {
        return Err(Error::Consistency(format!("Im Π is not positive definite: {pi}")));
    }
    let symmetry_defect = frobenius(&(&pi - pi.transpose()));
    Ok(PeriodResult {
        pi,
        pi_dual,
        energy_matrix,
        stats: mesh_stats(mesh),
        method,
        symmetry_defect,
        cross_defect,
        conjugate_energy_defect: conj,
    })
}

/// SL(2,ℤ) reduction to |Re τ| ≤ ½, |τ| ≥ 1, with boundary ties sent to
/// Re τ ≤ 0. Returns the reduced value and the matrix [[a, b], [c, d]]
/// with τ' = (aτ + b)/(cτ + d).
pub fn modular_reduce(tau: Complex64) -> Result<(Complex64, [[i64; 2]; 2])> {
    if !(tau.im > 0.0) || !tau.re.is_finite() {
        return Err(Error::Domain(format!("τ = {tau} is not in the upper half-plane")));
    }
    const EPS: f64 = 1e-12;
    let mut t = tau;
    let mut m = [[1i64, 0], [0, 1]];
    for _ in 0..10_000 {
        let n = (t.re + 0.5 + EPS).floor();
        if n != 0.0 {
            t -= n;
            let k = n as i64;
            m = [[m[0][0] - k * m[1][0], m[0][1] - k * m[1][1]], m[1]];
        }
        if t.norm_sqr() < 1.0 - EPS {
            t = -1.0 / t;
            m = [[-m[1][0], -m[1][1]], m[0]];
        } else {
            break;
        }
    }
    if (t.norm_sqr() - 1.0).abs() <= EPS && t.re > 0.0 {
        t = -1.0 / t;
        m = [[-m[1][0], -m[1][1]], m[0]];
    }
    Ok((t, m))
}

pub fn modular_reduce_genus1(tau: Complex64) -> Result<Complex64> {
    Ok(modular_reduce(tau)?.0)
}

/// Distance between the reduced values, taken modulo the edge
/// identifications of the fundamental domain: the reduced `a` is compared
/// with its images under short words in S and T^±1.
pub fn modular_distance(a: Complex64, b: Complex64) -> Result<f64> {
    let ra = modular_reduce_genus1(a)?;
    let rb = modular_reduce_genus1(b)?;
    let moves: [fn(Complex64) -> Complex64; 3] = [|t| -1.0 / t, |t| t + 1.0, |t| t - 1.0];
    let mut frontier = vec![ra];
    let mut best = (ra - rb).norm();
    for _ in 0..3 {
        let mut next = Vec::new();
        for t in &frontier {
            for m in &moves {
                let u = m(*t);
                best = best.min((u - rb).norm());
                next.push(u);
            }
        }
        frontier = next;
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    Direct,
    ModularG1,
    /// Minimum over simultaneous signed permutations of the (α_k, β_k) pairs.
    SignedPerm,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Π in the basis α'_k = ε_k α_σ(k), β'_k = ε_k β_σ(k).
pub fn signed_permute(pi: &CMat, perm: &[usize], signs: &[f64]) -> CMat {
    CMat::from_fn(pi.nrows(), pi.ncols(), |k, l| pi[(perm[k], perm[l])] * (signs[k] * signs[l]))
}

pub fn compare(pi: &CMat, reference: &CMat, mode: CompareMode) -> Result<f64> {
    if pi.shape() != reference.shape() {
        return Err(Error::Argument(format!("shape {:?} vs reference {:?}", pi.shape(), reference.shape())));
    }
    let g = pi.nrows();
    match mode {
        CompareMode::Direct => Ok(frobenius(&(pi - reference))),
        CompareMode::ModularG1 => {
            if g != 1 {
                return Err(Error::Argument("modular comparison needs genus 1".into()));
            }
            Ok(modular_distance(pi[(0, 0)], reference[(0, 0)])?)
        }
        CompareMode::SignedPerm => {
            let mut best = f64::INFINITY;
            for perm in permutations(g) {
                for mask in 0..(1u32 << g) {
                    let signs: Vec<f64> = (0..g).map(|k| if mask >> k & 1 == 1 { -1.0 } else { 1.0 }).collect();
                    best = best.min(frobenius(&(signed_permute(pi, &perm, &signs) - reference)));
                }
            }
            Ok(best)
        }
    }
}

/// |PᵀE_T P − PᵀE_R P| with E_R from the reference matrix (Π* = Π in the limit).
pub fn energy_gap(e_t: &DMatrix<f64>, reference: &CMat, p: &[f64]) -> Result<f64> {
    let e_r = energy_from_periods(reference, reference)?;
    let v = nalgebra::DVector::from_column_slice(p);
    Ok(((v.transpose() * e_t * &v)[(0, 0)] - (v.transpose() * e_r * &v)[(0, 0)]).abs())
}

/// On-disk form of a period computation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodJson {
    pub curve: String,
    pub method: Method,
    pub h: f64,
    pub n_vertices: usize,
    pub pi: Vec<Vec<JsonComplex>>,
    pub pi_dual: Vec<Vec<JsonComplex>>,
    pub symmetry_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_vs_reference: Option<f64>,
}

fn to_json_matrix(m: &CMat) -> Vec<Vec<JsonComplex>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| JsonComplex { re: m[(i, j)].re, im: m[(i, j)].im }).collect()).collect()
}

impl PeriodResult {
    pub fn to_json(&self, curve: &str, error_vs_reference: Option<f64>) -> PeriodJson {
        PeriodJson {
            curve: curve.to_string(),
            method: self.method,
            h: self.stats.h,
            n_vertices: self.stats.n_vertices,
            pi: to_json_matrix(&self.pi),
            pi_dual: to_json_matrix(&self.pi_dual),
            symmetry_defect: self.symmetry_defect,
            error_vs_reference,
        }
    }
}
