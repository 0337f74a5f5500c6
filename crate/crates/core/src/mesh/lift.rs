use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::delaunay::BaseMesh;
use super::topology::Topology;
use super::{CoverMesh, Vertex};
use crate::covering::{BranchedCover, Permutation};
use crate::error::{Error, Result};
use crate::geom::{norm3, sub3};

#[derive(PartialEq, PartialOrd)]
struct Cost(f64);
impl Eq for Cost {}
impl Ord for Cost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Distance on the sphere from `p` to the meridian arc joining `o` to the north pole.
fn meridian_deviation(p: [f64; 3], o: [f64; 3]) -> f64 {
    if p[2] < o[2] {
        return norm3(sub3(p, o));
    }
    let ro = (o[0] * o[0] + o[1] * o[1]).sqrt();
    let (c, s) = if ro > 1e-12 { (o[0] / ro, o[1] / ro) } else { (1.0, 0.0) };
    let along = p[0] * c + p[1] * s;
    let across = -p[0] * s + p[1] * c;
    if along >= 0.0 {
        across.abs()
    } else {
        (p[0] * p[0] + p[1] * p[1]).sqrt()
    }
}

/// Cut path from vertex `from` to `to` hugging the meridian through `from`.
fn cut_path(base: &BaseMesh, from: usize, to: usize, blocked: &[bool]) -> Option<Vec<usize>> {
    let topo = &base.topo;
    let sphere: Vec<[f64; 3]> = base.points.iter().map(|p| p.to_sphere()).collect();
    let o = sphere[from];
    let n = topo.n_vertices;
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Reverse((Cost(0.0), from)));
    while let Some(Reverse((Cost(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        if v == to {
            break;
        }
        for w in topo.neighbors(v) {
            if blocked[w] && w != to {
                continue;
            }
            let len = norm3(sub3(sphere[v], sphere[w]));
            let nd = d + len * (1.0 + 10.0 * meridian_deviation(sphere[w], o));
            if nd < dist[w] {
                dist[w] = nd;
                pred[w] = v;
                heap.push(Reverse((Cost(nd), w)));
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    let mut v = to;
    while v != from {
        v = pred[v];
        path.push(v);
    }
    path.reverse();
    Some(path)
}

fn half_edge(topo: &Topology, a: usize, b: usize) -> usize {
    topo.outgoing(a).into_iter().find(|&h| topo.dest(h) == b).expect("path edge exists")
}

/// Glues d copies of the base triangulation along cut paths from each finite
/// branch point to ∞, crossing which applies the monodromy.
pub fn lift_to_cover(base: &BaseMesh, cover: &BranchedCover) -> Result<CoverMesh> {
    let d = cover.degree;
    let topo = &base.topo;
    let nb = topo.n_vertices;
    let nh = topo.n_half_edges();
    let nf = topo.n_faces();
    let inf = base
        .infinity_vertex()
        .ok_or_else(|| Error::Argument("base mesh must contain ∞ as a vertex".into()))?;
    let mut site = vec![usize::MAX; cover.branch_points.len()];
    for (v, b) in base.branch.iter().enumerate() {
        if let Some(k) = *b {
            site[k] = v;
        }
    }
    if let Some(k) = site.iter().position(|&v| v == usize::MAX) {
        return Err(Error::Argument(format!("branch point {k} is not a vertex of the base mesh")));
    }
    for (k, bp) in cover.branch_points.iter().enumerate() {
        if bp.monodromy.degree() != d || !bp.monodromy.is_valid() {
            return Err(Error::Validation(format!("monodromy {k} is not a permutation of {d} sheets")));
        }
    }

    let mut trans: Vec<Permutation> = vec![Permutation::identity(d); nh];
    let mut blocked = vec![false; nb];
    for &v in &site {
        blocked[v] = true;
    }
    for (k, bp) in cover.branch_points.iter().enumerate() {
        if bp.position.is_infinite() {
            continue;
        }
        let from = site[k];
        let path = cut_path(base, from, inf, &blocked)
            .ok_or_else(|| Error::Resolution(format!("no cut path from branch point {k} to ∞; refine the mesh")))?;
        let sigma = &bp.monodromy;
        let sigma_inv = sigma.inverse();
        for w in path.windows(2) {
            let h = half_edge(topo, w[0], w[1]);
            let t = topo.twin[h];
            trans[h] = sigma_inv.after(&trans[h]);
            trans[t] = sigma.after(&trans[t]);
        }
        if d > 2 {
            for &v in &path[1..path.len() - 1] {
                blocked[v] = true;
            }
        }
    }

    let n_cover_h = d * nh;
    let twin_of = |hc: usize| -> usize {
        let (s, h) = (hc / nh, hc % nh);
        trans[h].apply(s) * nh + topo.twin[h]
    };
    let prev_of = |hc: usize| -> usize {
        let (s, h) = (hc / nh, hc % nh);
        s * nh + topo.prev(h)
    };
    let mut vid = vec![usize::MAX; n_cover_h];
    let mut vertices = Vec::new();
    let mut cycle_lengths: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for s in 0..d {
        for v in 0..nb {
            let start = s * nh + topo.out[v];
            if vid[start] != usize::MAX {
                continue;
            }
            let id = vertices.len();
            let mut hc = start;
            let mut len = 0;
            let mut sheet = s;
            loop {
                vid[hc] = id;
                sheet = sheet.min(hc / nh);
                len += 1;
                hc = twin_of(prev_of(hc));
                if hc == start {
                    break;
                }
                if vid[hc] != usize::MAX {
                    return Err(Error::Topology(format!("vertex fan at base vertex {v} does not close")));
                }
            }
            let deg = topo.outgoing(v).len();
            if len % deg != 0 {
                return Err(Error::Topology(format!("vertex fan at base vertex {v} has length {len}, not a multiple of {deg}")));
            }
            cycle_lengths[v].push(len / deg);
            vertices.push(Vertex { sheet, pos: base.points[v], branch: base.branch[v] });
        }
    }
    for v in 0..nb {
        let mut got = cycle_lengths[v].clone();
        got.sort_unstable();
        let expected = match base.branch[v] {
            Some(k) => cover.branch_points[k].monodromy.cycle_type(),
            None => vec![1; d],
        };
        if got != expected {
            let what = if v == inf { "∞".to_string() } else { format!("base vertex {v}") };
            return Err(Error::Topology(format!(
                "monodromy inconsistent with the face fan at {what}: cycles {got:?}, expected {expected:?}"
            )));
        }
    }
    let faces: Vec<[usize; 3]> = (0..d * nf)
        .map(|fc| {
            let (s, f) = (fc / nf, fc % nf);
            [0, 1, 2].map(|i| vid[s * nh + 3 * f + i])
        })
        .collect();
    let twin: Vec<usize> = (0..n_cover_h).map(twin_of).collect();
    let ctopo = Topology::from_faces_and_twins(vertices.len(), faces, twin)?;
    let ram: usize = cover
        .branch_points
        .iter()
        .map(|b| b.monodromy.cycles().iter().map(|c| c.len() - 1).sum::<usize>())
        .sum();
    let chi = 2 * d as i64 - ram as i64;
    if ctopo.euler_characteristic() != chi {
        return Err(Error::Topology(format!("Euler characteristic {} differs from {chi}", ctopo.euler_characteristic())));
    }
    let radii: Vec<f64> = cover.branch_points.iter().map(|b| b.r_o).collect();
    let mesh = CoverMesh::new(vertices, ctopo, cover.rho, d, &|k| radii[k])?;
    Ok(mesh)
}
