//! Multi-valued discrete harmonic functions, energies and conjugates.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::homology::CutSystem;
use crate::mesh::CoverMesh;
use crate::sparse::{pcg, Csr, EnvelopeCholesky};
use crate::weights::WeightSet;

/// u₀ on vertices plus real periods P = (Re A, Re B).
#[derive(Clone, Debug, PartialEq)]
pub struct MultiValuedVertexFunction {
    pub base: Vec<f64>,
    pub periods: Vec<f64>,
}

impl MultiValuedVertexFunction {
    pub fn single_valued(base: Vec<f64>, genus: usize) -> Self {
        MultiValuedVertexFunction { base, periods: vec![0.0; 2 * genus] }
    }

    /// u(dest h) − u(origin h) on the cover.
    pub fn delta(&self, mesh: &CoverMesh, cuts: &CutSystem, h: usize) -> f64 {
        let t = &mesh.topo;
        let jump: f64 = self.periods.iter().zip(&cuts.period).map(|(p, chi)| p * chi[h]).sum();
        self.base[t.dest(h)] - self.base[t.origin(h)] + jump
    }

    pub fn deltas(&self, mesh: &CoverMesh, cuts: &CutSystem) -> Vec<f64> {
        (0..mesh.topo.n_half_edges()).map(|h| self.delta(mesh, cuts, h)).collect()
    }
}

/// v on faces plus its periods along the cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceFunction {
    pub values: Vec<f64>,
    pub periods: Vec<f64>,
}

impl FaceFunction {
    /// v(left of h) − v(right of h).
    pub fn delta(&self, mesh: &CoverMesh, cuts: &CutSystem, h: usize) -> f64 {
        let t = &mesh.topo;
        let jump: f64 = self.periods.iter().zip(&cuts.dual).map(|(q, eta)| q * eta[h]).sum();
        self.values[t.face(h)] - self.values[t.face(t.twin[h])] + jump
    }
}

/// (Lu)(x) = Σ c(x,y)(u(x) − u(y)).
pub fn assemble_laplacian(mesh: &CoverMesh, weights: &WeightSet) -> Result<Csr> {
    let t = &mesh.topo;
    if weights.weight.len() != t.n_edges() {
        return Err(Error::Argument(format!("{} weights for {} edges", weights.weight.len(), t.n_edges())));
    }
    let mut trip = Vec::with_capacity(4 * t.n_edges() + mesh.n_vertices());
    for (e, &h) in t.edges.iter().enumerate() {
        let c = weights.weight[e];
        if !c.is_finite() {
            return Err(Error::Argument(format!("edge {e} has non-finite weight")));
        }
        let (a, b) = (t.origin(h), t.dest(h));
        trip.push((a, a, c));
        trip.push((b, b, c));
        trip.push((a, b, -c));
        trip.push((b, a, -c));
    }
    Ok(Csr::from_triplets(mesh.n_vertices(), trip))
}

/// The gauge-reduced Laplacian with its solver strategy.
pub struct HarmonicSolver {
    pub laplacian: Csr,
    reduced: Csr,
    pub gauge: usize,
    factor: Option<EnvelopeCholesky>,
    tol: f64,
    max_iter: usize,
}

impl HarmonicSolver {
    pub fn new(mesh: &CoverMesh, weights: &WeightSet, config: &Config, gauge: usize) -> Result<Self> {
        let laplacian = assemble_laplacian(mesh, weights)?;
        if gauge >= laplacian.n {
            return Err(Error::Argument(format!("gauge vertex {gauge} out of range")));
        }
        let reduced = laplacian.without(gauge);
        let factor = if reduced.n < config.direct_threshold { Some(EnvelopeCholesky::factor(&reduced)?) } else { None };
        let max_iter = (config.cg_iter_factor * (reduced.n as f64).sqrt()).ceil() as usize;
        Ok(HarmonicSolver { laplacian, reduced, gauge, factor, tol: config.solver_tol, max_iter })
    }

    /// Solves L u = b with u(gauge) = 0; `b` must sum to zero.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let g = self.gauge;
        let rb: Vec<f64> = b.iter().enumerate().filter(|&(i, _)| i != g).map(|(_, &x)| x).collect();
        let x = match &self.factor {
            Some(f) => f.solve(&rb),
            None => match pcg(&self.reduced, &rb, self.tol, self.max_iter) {
                Ok(out) => out.x,
                Err(Error::Numeric(msg)) => {
                    eprintln!("warning: {msg}; falling back to direct factorization");
                    EnvelopeCholesky::factor(&self.reduced)?.solve(&rb)
                }
                Err(e) => return Err(e),
            },
        };
        let mut u = Vec::with_capacity(b.len());
        u.extend_from_slice(&x[..g]);
        u.push(0.0);
        u.extend_from_slice(&x[g..]);
        Ok(u)
    }
}

/// Right-hand side b(x) = Σ_{h out of x} c(h)·Σ_k P_k χ_k(h).
pub fn period_rhs(mesh: &CoverMesh, weights: &WeightSet, cuts: &CutSystem, p: &[f64]) -> Vec<f64> {
    let t = &mesh.topo;
    let mut b = vec![0.0; mesh.n_vertices()];
    for h in 0..t.n_half_edges() {
        let jump: f64 = p.iter().zip(&cuts.period).map(|(pk, chi)| pk * chi[h]).sum();
        if jump != 0.0 {
            b[t.origin(h)] += weights.of_half_edge(mesh, h) * jump;
        }
    }
    b
}

/// Per-vertex Σ c·Δu over outgoing edges.
pub fn harmonic_residual(mesh: &CoverMesh, weights: &WeightSet, cuts: &CutSystem, u: &MultiValuedVertexFunction) -> Vec<f64> {
    let t = &mesh.topo;
    let mut r = vec![0.0; mesh.n_vertices()];
    for h in 0..t.n_half_edges() {
        r[t.origin(h)] += weights.of_half_edge(mesh, h) * u.delta(mesh, cuts, h);
    }
    r
}

pub fn solve_multivalued_harmonic(
    solver: &HarmonicSolver,
    mesh: &CoverMesh,
    weights: &WeightSet,
    cuts: &CutSystem,
    p: &[f64],
) -> Result<MultiValuedVertexFunction> {
    if cuts.genus == 0 {
        return Err(Error::Argument("genus 0 has no periods".into()));
    }
    if p.len() != 2 * cuts.genus {
        return Err(Error::Argument(format!("expected {} periods, got {}", 2 * cuts.genus, p.len())));
    }
    let b = period_rhs(mesh, weights, cuts, p);
    let base = solver.solve(&b)?;
    Ok(MultiValuedVertexFunction { base, periods: p.to_vec() })
}

pub fn vertex_energy(mesh: &CoverMesh, weights: &WeightSet, cuts: &CutSystem, u: &MultiValuedVertexFunction) -> f64 {
    mesh.topo
        .edges
        .iter()
        .enumerate()
        .map(|(e, &h)| {
            let d = u.delta(mesh, cuts, h);
            weights.weight[e] * d * d
        })
        .sum()
}

pub fn face_energy(mesh: &CoverMesh, weights: &WeightSet, cuts: &CutSystem, v: &FaceFunction, zero_tol: f64) -> Result<f64> {
    let zero: Vec<usize> = (0..mesh.topo.n_edges()).filter(|&e| weights.weight[e].abs() <= zero_tol).collect();
    if !zero.is_empty() {
        return Err(Error::ZeroWeight(zero));
    }
    Ok(mesh
        .topo
        .edges
        .iter()
        .enumerate()
        .map(|(e, &h)| {
            let d = v.delta(mesh, cuts, h);
            d * d / weights.weight[e]
        })
        .sum())
}

/// Conjugate face function of a harmonic u, integrated along a dual
/// spanning tree rooted at `gauge_face`. A seed randomizes the tree.
pub fn conjugate_function(
    mesh: &CoverMesh,
    weights: &WeightSet,
    cuts: &CutSystem,
    u: &MultiValuedVertexFunction,
    gauge_face: usize,
    tree_seed: Option<u64>,
    config: &Config,
) -> Result<FaceFunction> {
    let t = &mesh.topo;
    let nh = t.n_half_edges();
    let nf = t.n_faces();
    if gauge_face >= nf {
        return Err(Error::Argument(format!("gauge face {gauge_face} out of range")));
    }
    let flux: Vec<f64> = (0..nh).map(|h| weights.of_half_edge(mesh, h) * u.delta(mesh, cuts, h)).collect();

    let res = harmonic_residual(mesh, weights, cuts, u);
    let b = period_rhs(mesh, weights, cuts, &u.periods);
    let scale = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(flux.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    let (worst, &wr) = res.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
    if wr.abs() > 1e3 * config.solver_tol * scale {
        return Err(Error::Consistency(format!("function is not harmonic: residual {wr:e} at vertex {worst}")));
    }

    let periods: Vec<f64> = cuts
        .crossing
        .iter()
        .map(|xi| 0.5 * (0..nh).map(|h| xi[h] as f64 * flux[h]).sum::<f64>())
        .collect();
    let jump = |h: usize| -> f64 { periods.iter().zip(&cuts.dual).map(|(q, eta)| q * eta[h]).sum() };

    let mut rng = tree_seed.map(ChaCha8Rng::seed_from_u64);
    let key = |rng: &mut Option<ChaCha8Rng>, h: usize| -> u64 {
        match rng {
            Some(r) => r.gen(),
            None => h as u64,
        }
    };
    let mut values = vec![f64::NAN; nf];
    values[gauge_face] = 0.0;
    let mut heap = BinaryHeap::new();
    for i in 0..3 {
        let h = 3 * gauge_face + i;
        heap.push(Reverse((key(&mut rng, h), h)));
    }
    while let Some(Reverse((_, h))) = heap.pop() {
        let g = t.face(t.twin[h]);
        if !values[g].is_nan() {
            continue;
        }
        values[g] = values[t.face(h)] - flux[h] + jump(h);
        for i in 0..3 {
            let h2 = 3 * g + i;
            if values[t.face(t.twin[h2])].is_nan() {
                heap.push(Reverse((key(&mut rng, h2), h2)));
            }
        }
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Topology("dual graph is disconnected".into()));
    }
    Ok(FaceFunction { values, periods })
}
