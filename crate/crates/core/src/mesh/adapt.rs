use std::f64::consts::PI;

use num_complex::Complex64;

use super::delaunay::{triangulate_extended, BaseMesh};
use crate::covering::BranchedCover;
use crate::error::{Error, Result};
use crate::geom::ExtPoint;

const GOLDEN: f64 = 1.618_033_988_749_895;

/// Chart-space step between rings and between neighbours on a ring, as a
/// fraction of the target size; leaves room for the ring diagonals.
pub const RING_STEP: f64 = 0.65;

/// Typical nearest-neighbour distance of n well-spread points on S².
pub fn sample_spacing(n: usize) -> f64 {
    (8.0 * PI / (3f64.sqrt() * n as f64)).sqrt()
}

/// Upper bound (exclusive) for the adaptation size.
pub fn h_target_bound(cover: &BranchedCover) -> f64 {
    let rmin = cover.branch_points.iter().map(|b| b.r_o).fold(f64::INFINITY, f64::min);
    let rmin = if rmin.is_finite() { rmin } else { 0.0 };
    (cover.rho / 4.0).max(rmin / 4.0).max(1.0)
}

/// Local plane spacing of the samples at the branch point farthest from 0.
pub fn default_h_target(cover: &BranchedCover, n: usize) -> f64 {
    let s = sample_spacing(n);
    let m = cover
        .branch_points
        .iter()
        .map(|b| match b.position {
            ExtPoint::Finite(z) => 0.5 * (1.0 + z.norm_sqr()),
            ExtPoint::Infinity => 0.5,
        })
        .fold(0.0, f64::max);
    s * m
}

/// Replaces the samples near each branch point by rings that are uniform in
/// the chart (z − O)^γ, then retriangulates.
pub fn adapt_near_branch(base: &BaseMesh, cover: &BranchedCover, h: f64, spacing: f64) -> Result<BaseMesh> {
    if !(h > 0.0) {
        return Err(Error::Argument(format!("h_target must be positive, got {h}")));
    }
    let bound = h_target_bound(cover);
    if h >= bound {
        return Err(Error::Argument(format!("h_target {h} must be smaller than {bound}")));
    }
    if cover.branch_points.is_empty() {
        return Ok(base.clone());
    }
    let mut points = base.points.clone();
    let mut branch = base.branch.clone();
    let mut keep = vec![true; points.len()];
    let mut added: Vec<ExtPoint> = Vec::new();
    for (k, bp) in cover.branch_points.iter().enumerate() {
        if !branch.iter().any(|&b| b == Some(k)) {
            return Err(Error::Argument(format!("branch point {k} is not a vertex of the base mesh")));
        }
        let gamma = bp.gamma();
        let (local, delta): (Box<dyn Fn(&ExtPoint) -> Option<Complex64>>, f64) = match bp.position {
            ExtPoint::Finite(o) => (Box::new(move |p: &ExtPoint| p.as_finite().map(|z| z - o)), 0.5 * spacing * (1.0 + o.norm_sqr())),
            ExtPoint::Infinity => (Box::new(|p: &ExtPoint| p.inverted().as_finite()), 0.5 * spacing),
        };
        let mut radii = Vec::new();
        let mut j = 1usize;
        loop {
            let big_r = h * (1.0 + RING_STEP * (j - 1) as f64);
            let r = big_r.powf(1.0 / gamma);
            radii.push((j, big_r, r));
            if r >= bp.r_o {
                break;
            }
            j += 1;
        }
        let r_last = radii.last().unwrap().2;
        for i in 0..points.len() {
            let special = branch[i].is_some() || points[i].is_infinite();
            if special {
                continue;
            }
            if let Some(w) = local(&points[i]) {
                if w.norm() < r_last + 0.5 * delta {
                    keep[i] = false;
                }
            }
        }
        for (j, big_r, r) in radii {
            let m = (2.0 * PI * big_r * gamma / (RING_STEP * h)).ceil().max(3.0) as usize;
            let offset = (j as f64 * GOLDEN).fract() * 2.0 * PI / m as f64;
            for i in 0..m {
                let w = Complex64::from_polar(r, offset + 2.0 * PI * i as f64 / m as f64);
                added.push(match bp.position {
                    ExtPoint::Finite(o) => ExtPoint::Finite(o + w),
                    ExtPoint::Infinity => ExtPoint::Finite(w.inv()),
                });
            }
        }
    }
    let mut new_points = Vec::with_capacity(points.len() + added.len());
    let mut new_branch = Vec::with_capacity(points.len() + added.len());
    for (i, p) in points.drain(..).enumerate() {
        if keep[i] {
            new_points.push(p);
            new_branch.push(branch[i]);
        }
    }
    branch.clear();
    for p in added {
        new_points.push(p);
        new_branch.push(None);
    }
    let topo = triangulate_extended(&new_points)?;
    Ok(BaseMesh { points: new_points, branch: new_branch, topo })
}
