//! Canonical homology bases on a cover mesh and the crossing cochains that
//! encode multi-valued functions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{CoverMesh, Topology};

/// An integral 1-chain made of closed half-edge walks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cycle {
    pub walks: Vec<Vec<usize>>,
}

impl Cycle {
    pub fn from_walk(w: Vec<usize>) -> Self {
        Cycle { walks: vec![w] }
    }

    pub fn reversed(&self, topo: &Topology) -> Self {
        Cycle { walks: self.walks.iter().map(|w| w.iter().rev().map(|&h| topo.twin[h]).collect()).collect() }
    }

    /// `self + k·other`.
    pub fn add_multiple(&mut self, k: i64, other: &Cycle, topo: &Topology) {
        let part = if k < 0 { other.reversed(topo) } else { other.clone() };
        for _ in 0..k.unsigned_abs() {
            self.walks.extend(part.walks.iter().cloned());
        }
    }

    pub fn half_edges(&self) -> impl Iterator<Item = &usize> {
        self.walks.iter().flatten()
    }

    /// Checks that every walk is a closed chain of consecutive half-edges.
    pub fn check_closed(&self, topo: &Topology) -> Result<()> {
        for w in &self.walks {
            if w.is_empty() {
                return Err(Error::Argument("empty walk".into()));
            }
            for i in 0..w.len() {
                let (a, b) = (w[i], w[(i + 1) % w.len()]);
                if a >= topo.n_half_edges() || topo.dest(a) != topo.origin(b) {
                    return Err(Error::Argument(format!("walk is not closed at position {i}")));
                }
            }
        }
        Ok(())
    }

    /// Vertex ids visited by each walk, for diagnostics.
    pub fn vertex_sequences(&self, topo: &Topology) -> Vec<Vec<usize>> {
        self.walks.iter().map(|w| w.iter().map(|&h| topo.origin(h)).collect()).collect()
    }
}

/// Signed crossings of each half-edge with the cycle pushed to its right.
///
/// For a closed cycle the result is antisymmetric and closed around every face.
pub fn crossing_cochain(topo: &Topology, cycle: &Cycle) -> Vec<i32> {
    let mut xi = vec![0i32; topo.n_half_edges()];
    for w in &cycle.walks {
        for i in 0..w.len() {
            let h_in = w[i];
            let h_out = w[(i + 1) % w.len()];
            let back = topo.twin[h_in];
            let mut g = topo.rotate_cw(h_out);
            while g != back {
                xi[g] += 1;
                xi[topo.twin[g]] -= 1;
                g = topo.rotate_cw(g);
            }
        }
    }
    xi
}

/// Pairing of a half-edge cochain with a chain.
pub fn pair<T: Copy + Into<f64>>(cochain: &[T], cycle: &Cycle) -> f64 {
    cycle.half_edges().map(|&h| cochain[h].into()).sum()
}

/// Algebraic intersection number; I(x-axis, y-axis) = +1.
pub fn intersection_number(topo: &Topology, c1: &Cycle, c2: &Cycle) -> Result<i64> {
    c1.check_closed(topo)?;
    c2.check_closed(topo)?;
    let xi = crossing_cochain(topo, c2);
    Ok(c1.half_edges().map(|&h| xi[h] as i64).sum())
}

/// 2g cycles with their cochains. Cycles `0..g` are α, `g..2g` are β.
#[derive(Clone, Debug)]
pub struct CutSystem {
    pub genus: usize,
    pub cycles: Vec<Cycle>,
    /// `crossing[k][h]`: crossing cochain of cycle k.
    pub crossing: Vec<Vec<i32>>,
    /// `intersection[(j, k)] = I(γ_j, γ_k)`.
    pub intersection: DMatrix<i64>,
    /// Cochains χ_i with ⟨χ_i, γ_j⟩ = δ_ij; multi-valued vertex functions use these.
    pub period: Vec<Vec<f64>>,
    /// Dual cochains η_k with Σ_h ξ_j(h)·η_k(h) over crossings = δ_jk, for face functions.
    pub dual: Vec<Vec<f64>>,
}

pub fn symplectic_j(g: usize) -> DMatrix<i64> {
    let mut j = DMatrix::zeros(2 * g, 2 * g);
    for k in 0..g {
        j[(k, g + k)] = 1;
        j[(g + k, k)] = -1;
    }
    j
}

impl CutSystem {
    pub fn from_cycles(topo: &Topology, cycles: Vec<Cycle>) -> Result<Self> {
        let n = cycles.len();
        if n % 2 != 0 {
            return Err(Error::Argument("a cut system needs an even number of cycles".into()));
        }
        for c in &cycles {
            c.check_closed(topo)?;
        }
        let crossing: Vec<Vec<i32>> = cycles.iter().map(|c| crossing_cochain(topo, c)).collect();
        let intersection = DMatrix::from_fn(n, n, |j, k| cycles[j].half_edges().map(|&h| crossing[k][h] as i64).sum());
        let gf = intersection.map(|x| x as f64);
        let ginv = gf.clone().try_inverse().ok_or_else(|| Error::Topology("cycles are homologically dependent".into()))?;
        let m = ginv.transpose();
        let nh = topo.n_half_edges();
        let period = (0..n)
            .map(|i| (0..nh).map(|h| (0..n).map(|k| m[(i, k)] * crossing[k][h] as f64).sum()).collect())
            .collect();
        let zeta: Vec<Vec<f64>> = cycles
            .iter()
            .map(|c| {
                let mut z = vec![0.0; nh];
                for &h in c.half_edges() {
                    z[h] += 1.0;
                    z[topo.twin[h]] -= 1.0;
                }
                z
            })
            .collect();
        let dual = (0..n)
            .map(|k| (0..nh).map(|h| (0..n).map(|m| ginv[(k, m)] * zeta[m][h]).sum()).collect())
            .collect();
        Ok(CutSystem { genus: n / 2, cycles, crossing, intersection, period, dual })
    }

    pub fn is_canonical(&self) -> bool {
        self.intersection == symplectic_j(self.genus)
    }
}

/// Reduces a homology basis to one with intersection matrix J: sign flips
/// first, then integer symplectic Gram–Schmidt.
pub fn symplectic_normalize(topo: &Topology, cycles: Vec<Cycle>) -> Result<Vec<Cycle>> {
    let n = cycles.len();
    let g = n / 2;
    let mut cycles = cycles;
    let sys = CutSystem::from_cycles(topo, cycles.clone())?;
    let mut gm = sys.intersection.clone();
    for k in 0..g {
        if gm[(k, g + k)] == -1 {
            cycles[g + k] = cycles[g + k].reversed(topo);
            for j in 0..n {
                gm[(j, g + k)] = -gm[(j, g + k)];
                gm[(g + k, j)] = -gm[(g + k, j)];
            }
        }
    }
    if gm == symplectic_j(g) {
        return Ok(cycles);
    }
    // Work with coefficient vectors over the current cycles.
    let omega = |a: &Vec<i64>, b: &Vec<i64>| -> i64 {
        let mut s = 0;
        for i in 0..n {
            for j in 0..n {
                s += a[i] * gm[(i, j)] * b[j];
            }
        }
        s
    };
    let mut remaining: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    while !remaining.is_empty() {
        let e = remaining.remove(0);
        let pos = remaining.iter().position(|f| omega(&e, f).abs() == 1);
        let Some(pos) = pos else {
            return Err(Error::Topology("symplectic reduction failed: no unimodular partner".into()));
        };
        let mut f = remaining.remove(pos);
        if omega(&e, &f) == -1 {
            f.iter_mut().for_each(|x| *x = -*x);
        }
        for c in remaining.iter_mut() {
            let (cf, ce) = (omega(c, &f), omega(c, &e));
            for i in 0..n {
                c[i] = c[i] - cf * e[i] + ce * f[i];
            }
        }
        alphas.push(e);
        betas.push(f);
    }
    let build = |coef: &Vec<i64>| {
        let mut c = Cycle::default();
        for i in 0..n {
            c.add_multiple(coef[i], &cycles[i], topo);
        }
        c
    };
    Ok(alphas.iter().chain(betas.iter()).map(build).collect())
}

fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut p: Vec<Complex64> = points.to_vec();
    p.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Complex64, a: Complex64, b: Complex64| ((a - o).conj() * (b - o)).im;
    let mut lower: Vec<Complex64> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<Complex64> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Distance from `p` to the convex polygon `hull` (0 inside).
fn hull_distance(p: Complex64, hull: &[Complex64]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => (p - hull[0]).norm(),
        2 => segment_distance(p, hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|i| ((hull[(i + 1) % n] - hull[i]).conj() * (p - hull[i])).im >= 0.0);
            if inside {
                0.0
            } else {
                (0..n).map(|i| segment_distance(p, hull[i], hull[(i + 1) % n])).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Winding number of a closed walk around `p`, or None if it passes ∞.
fn winding(mesh: &CoverMesh, walk: &[usize], p: Complex64) -> Option<i64> {
    let mut total = 0.0;
    for &h in walk {
        let a = mesh.vertices[mesh.topo.origin(h)].pos.as_finite()?;
        let b = mesh.vertices[mesh.topo.dest(h)].pos.as_finite()?;
        total += ((b - p) / (a - p)).arg();
    }
    Some((total / (2.0 * std::f64::consts::PI)).round() as i64)
}

/// Boundary components of the face set `in_region`, each traced with the region on its left.
fn region_boundaries(topo: &Topology, in_region: &[bool]) -> Vec<Vec<usize>> {
    let nh = topo.n_half_edges();
    let is_boundary = |h: usize| in_region[h / 3] && !in_region[topo.twin[h] / 3];
    let mut used = vec![false; nh];
    let mut loops = Vec::new();
    for start in 0..nh {
        if used[start] || !is_boundary(start) {
            continue;
        }
        let mut walk = Vec::new();
        let mut h = start;
        loop {
            used[h] = true;
            walk.push(h);
            let mut g = topo.next(h);
            while in_region[topo.twin[g] / 3] {
                g = topo.next(topo.twin[g]);
            }
            h = g;
            if h == start {
                break;
            }
        }
        loops.push(walk);
    }
    loops
}

/// A loop on the cover encircling exactly the finite branch points `inside`.
fn encircling_loop(mesh: &CoverMesh, points: &[Complex64], inside: &[usize]) -> Result<Vec<usize>> {
    let topo = &mesh.topo;
    let s: Vec<Complex64> = inside.iter().map(|&k| points[k]).collect();
    let others: Vec<usize> = (0..points.len()).filter(|k| !inside.contains(k)).collect();
    let hull = convex_hull(&s);
    let reach = others.iter().map(|&k| hull_distance(points[k], &hull)).fold(f64::INFINITY, f64::min);
    let n = mesh.n_vertices();
    let mut in_a = vec![false; n];
    for v in 0..n {
        if let Some(z) = mesh.vertices[v].pos.as_finite() {
            let d = hull_distance(z, &hull);
            in_a[v] = d < reach && others.iter().all(|&k| d < (z - points[k]).norm());
        }
    }
    let site_of = |k: usize| mesh.sites.iter().filter(move |st| st.index == k).map(|st| st.vertex);
    for &k in inside {
        for v in site_of(k) {
            in_a[v] = true;
            for w in topo.neighbors(v) {
                if mesh.vertices[w].branch.map(|j| others.contains(&j)).unwrap_or(false) {
                    return Err(Error::Resolution(format!(
                        "branch points {k} and {} are adjacent; use a smaller h",
                        mesh.vertices[w].branch.unwrap()
                    )));
                }
                in_a[w] = true;
            }
        }
    }
    let in_region: Vec<bool> = topo.faces.iter().map(|t| t.iter().all(|&v| in_a[v])).collect();
    let loops = region_boundaries(topo, &in_region);
    let mut best: Option<Vec<usize>> = None;
    for walk in loops {
        let ok = inside.iter().all(|&k| winding(mesh, &walk, points[k]) == Some(1))
            && others.iter().all(|&k| winding(mesh, &walk, points[k]) == Some(0));
        if ok {
            let key = *walk.iter().min().unwrap();
            if best.as_ref().map(|b| key < *b.iter().min().unwrap()).unwrap_or(true) {
                best = Some(walk);
            }
        }
    }
    best.ok_or_else(|| Error::Resolution(format!("no mesh loop separates branch points {inside:?} from the rest; use a smaller h")))
}

/// Canonical basis of a hyperelliptic cover with branch points e_1..e_{2g+2}:
/// α_k encircles {e_{2k−1}, e_{2k}} and β_k encircles {e_{2k}, …, e_{2g+1}}.
pub fn hyperelliptic_basis(mesh: &CoverMesh) -> Result<CutSystem> {
    let mut by_index: Vec<(usize, crate::geom::ExtPoint, f64)> = Vec::new();
    for s in &mesh.sites {
        if !by_index.iter().any(|b| b.0 == s.index) {
            by_index.push((s.index, s.position, s.gamma));
        }
    }
    by_index.sort_by_key(|b| b.0);
    let hyper = mesh.degree == 2 && by_index.iter().all(|b| (b.2 - 0.5).abs() < 1e-12);
    if !hyper || by_index.len() < 4 || by_index.len() % 2 != 0 {
        return Err(Error::Argument("hyperelliptic basis needs a two-sheeted cover with an even number ≥ 4 of simple branch points".into()));
    }
    let n = by_index.len();
    let g = n / 2 - 1;
    let inf_pos = by_index.iter().position(|b| b.1.is_infinite());
    let finite: Vec<Complex64> = by_index.iter().filter_map(|b| b.1.as_finite()).collect();
    // Indices into `finite` for each requested set; a set containing ∞ is
    // replaced by its finite complement traversed backwards.
    let make = |set: Vec<usize>| -> Result<Cycle> {
        let topo = &mesh.topo;
        match inf_pos {
            Some(ip) if set.contains(&ip) => {
                let comp: Vec<usize> = (0..n).filter(|k| !set.contains(k)).collect();
                let walk = encircling_loop(mesh, &finite, &comp)?;
                Ok(Cycle::from_walk(walk).reversed(topo))
            }
            _ => {
                let shift = |k: usize| match inf_pos {
                    Some(ip) if k > ip => k - 1,
                    _ => k,
                };
                let set: Vec<usize> = set.into_iter().map(shift).collect();
                Ok(Cycle::from_walk(encircling_loop(mesh, &finite, &set)?))
            }
        }
    };
    let mut cycles = Vec::with_capacity(2 * g);
    for k in 0..g {
        cycles.push(make(vec![2 * k, 2 * k + 1])?);
    }
    for k in 0..g {
        cycles.push(make((2 * k + 1..=2 * g).collect())?);
    }
    let cycles = symplectic_normalize(&mesh.topo, cycles)?;
    finish(&mesh.topo, cycles)
}

fn finish(topo: &Topology, cycles: Vec<Cycle>) -> Result<CutSystem> {
    let sys = CutSystem::from_cycles(topo, cycles)?;
    if !sys.is_canonical() {
        return Err(Error::Consistency(format!("normalized intersection matrix is not canonical: {}", sys.intersection)));
    }
    Ok(sys)
}

/// Generic basis from a spanning tree and a dual spanning tree of the
/// complementary edges, reduced to canonical form.
pub fn tree_cotree_basis(topo: &Topology) -> Result<CutSystem> {
    use std::collections::VecDeque;
    let nv = topo.n_vertices;
    let mut parent = vec![usize::MAX; nv];
    let mut in_tree = vec![false; topo.n_edges()];
    let mut seen = vec![false; nv];
    seen[0] = true;
    let mut q = VecDeque::from([0usize]);
    while let Some(v) = q.pop_front() {
        for h in topo.outgoing(v) {
            let w = topo.dest(h);
            if !seen[w] {
                seen[w] = true;
                parent[w] = topo.twin[h];
                in_tree[topo.edge_of[h]] = true;
                q.push_back(w);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Topology("mesh is disconnected".into()));
    }
    let nf = topo.n_faces();
    let mut fseen = vec![false; nf];
    let mut in_cotree = vec![false; topo.n_edges()];
    fseen[0] = true;
    let mut q = VecDeque::from([0usize]);
    while let Some(f) = q.pop_front() {
        for i in 0..3 {
            let h = 3 * f + i;
            let e = topo.edge_of[h];
            let g = topo.twin[h] / 3;
            if !in_tree[e] && !fseen[g] {
                fseen[g] = true;
                in_cotree[e] = true;
                q.push_back(g);
            }
        }
    }
    // Path from v up to the root as half-edges.
    let up = |mut v: usize| {
        let mut p = Vec::new();
        while parent[v] != usize::MAX {
            p.push(parent[v]);
            v = topo.dest(parent[v]);
        }
        p
    };
    let mut cycles = Vec::new();
    for (e, &h) in topo.edges.iter().enumerate() {
        if in_tree[e] || in_cotree[e] {
            continue;
        }
        let a = topo.origin(h);
        let b = topo.dest(h);
        let mut walk: Vec<usize> = up(a).iter().rev().map(|&x| topo.twin[x]).collect();
        walk.push(h);
        walk.extend(up(b));
        cycles.push(Cycle::from_walk(walk));
    }
    if cycles.is_empty() {
        return Err(Error::Argument("genus 0 surface has no homology basis".into()));
    }
    let cycles = symplectic_normalize(topo, cycles)?;
    finish(topo, cycles)
}

/// Hyperelliptic basis when applicable, otherwise tree–cotree.
pub fn build_cut_system(mesh: &CoverMesh) -> Result<CutSystem> {
    match hyperelliptic_basis(mesh) {
        Ok(s) => Ok(s),
        Err(Error::Argument(_)) => tree_cotree_basis(&mesh.topo),
        Err(e) => Err(e),
    }
}
