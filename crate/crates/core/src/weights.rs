//! Edge weights: cotan weights in the z and w = 1/z charts, quadrature
//! weights for triangles straddling |z| = ρ, and chord-triangle weights.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{corner_cot, corner_cot3, cross3, norm3, orient2, sub3};
use crate::mesh::{CoverMesh, Region};
use crate::quad::{gk15, integrate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    InteriorCotan,
    InvertedCotan,
    BoundaryQuadrature,
    SphericalChord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightMode {
    Chart,
    Spherical,
}

#[derive(Clone, Debug)]
pub struct WeightSet {
    /// Indexed by undirected edge id of the mesh topology.
    pub weight: Vec<f64>,
    pub kind: Vec<WeightKind>,
    pub quadrature_tol: f64,
}

impl WeightSet {
    pub fn of_half_edge(&self, mesh: &CoverMesh, h: usize) -> f64 {
        self.weight[mesh.topo.edge_of[h]]
    }
}

/// ½(cot α + cot β) for planar corners; `opp` are the corners opposite the edge.
pub fn cotan_pair(a: Complex64, b: Complex64, opp1: Complex64, opp2: Complex64) -> f64 {
    0.5 * (corner_cot(opp1, a, b) + corner_cot(opp2, a, b))
}

/// Constants (C_xy, C_yz, C_zx) of a triangle with straight sides xy, xz and
/// third side given by the curve `arc` from y (τ = 0) to z (τ = 1).
///
/// `arc(τ)` returns (s(τ), s′(τ)). The Dirichlet energy of the ruled
/// interpolation u(x + σ(s(τ) − x)) = u_x + σ(u_y − u_x + τ(u_z − u_y)) is
/// C_xy(u_x − u_y)² + C_yz(u_y − u_z)² + C_zx(u_z − u_x)².
pub fn ruled_constants(
    x: Complex64,
    arc: impl Fn(f64) -> (Complex64, Complex64),
    tol: f64,
) -> Result<[f64; 3]> {
    let integrand = |t: f64| -> Result<[f64; 3]> {
        let (s, ds) = arc(t);
        let q = (s - x) * ds.conj();
        let d = q.im.abs();
        if !(d > 0.0) {
            return Err(Error::Geometry(format!("degenerate ruled triangle at τ = {t}")));
        }
        let r = q.re;
        let s2 = ds.norm_sqr();
        let x2 = (s - x).norm_sqr();
        Ok([
            0.5 * ((1.0 - t) * s2 + r) / d,
            0.5 * (x2 + t * (t - 1.0) * s2 + (1.0 - 2.0 * t) * r) / d,
            0.5 * (t * s2 - r) / d,
        ])
    };
    // Absolute floor relative to the magnitude of the constants.
    let (rough, _) = gk15(&mut { integrand }, 0.0, 1.0)?;
    let scale = rough.iter().map(|v| v.abs()).fold(0.0, f64::max);
    integrate(integrand, 0.0, 1.0, tol, tol * scale)
}

/// The circular arc s(τ) = yz/(z + τ(y − z)), the image of a straight segment under 1/z.
pub fn circular_arc(y: Complex64, z: Complex64) -> impl Fn(f64) -> (Complex64, Complex64) {
    move |t: f64| {
        let den = z + (y - z) * t;
        (y * z / den, -y * z * (y - z) / (den * den))
    }
}

pub fn straight_arc(y: Complex64, z: Complex64) -> impl Fn(f64) -> (Complex64, Complex64) {
    move |t: f64| (y + (z - y) * t, z - y)
}

/// Weights of a boundary triangle with x inside B_ρ and y, z outside.
pub fn boundary_weights(x: Complex64, y: Complex64, z: Complex64, rho: f64, tol: f64) -> Result<[f64; 3]> {
    if !(x.norm() < rho) || !(y.norm() >= rho) || !(z.norm() >= rho) {
        return Err(Error::Argument(format!(
            "boundary triangle needs |x| < ρ ≤ |y|, |z| (|x| = {}, |y| = {}, |z| = {}, ρ = {rho})",
            x.norm(),
            y.norm(),
            z.norm()
        )));
    }
    let lim = (rho / 2.0).max(1.0);
    for (a, b) in [(x, y), (y, z), (z, x)] {
        if !((a - b).norm() < lim) {
            return Err(Error::Argument(format!("boundary edge of length {} is not below {lim}", (a - b).norm())));
        }
    }
    ruled_constants(x, circular_arc(y, z), tol)
}

/// Per-face contributions to the three edges `3f`, `3f+1`, `3f+2`.
fn face_contributions(mesh: &CoverMesh, f: usize, mode: WeightMode, tol: f64) -> Result<[f64; 3]> {
    let tri = mesh.topo.faces[f];
    if mode == WeightMode::Spherical {
        let p = tri.map(|v| mesh.sphere_pos(v));
        if norm3(cross3(sub3(p[1], p[0]), sub3(p[2], p[0]))) <= 1e-300 {
            return Err(Error::Geometry(format!("chord triangle {f} is degenerate")));
        }
        return Ok([0, 1, 2].map(|i| 0.5 * corner_cot3(p[(i + 2) % 3], p[i], p[(i + 1) % 3])));
    }
    let c = mesh.face_chart(f);
    if !(orient2(c[0], c[1], c[2]).abs() > 0.0) || c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Geometry(format!("face {f} is degenerate in its chart")));
    }
    match mesh.regions[f] {
        Region::Inner | Region::Outer => Ok([0, 1, 2].map(|i| 0.5 * corner_cot(c[(i + 2) % 3], c[i], c[(i + 1) % 3]))),
        Region::Boundary => {
            let i = (0..3).find(|&i| mesh.is_inside(tri[i])).unwrap();
            let (x, y, z) = (c[i], c[(i + 1) % 3], c[(i + 2) % 3]);
            let [cxy, cyz, czx] = boundary_weights(x, y, z, mesh.rho, tol)
                .map_err(|e| match e {
                    Error::Argument(m) => Error::Geometry(format!("face {f}: {m}")),
                    other => other,
                })?;
            let mut out = [0.0; 3];
            out[i] = cxy;
            out[(i + 1) % 3] = cyz;
            out[(i + 2) % 3] = czx;
            Ok(out)
        }
    }
}

/// Weight of every edge, dispatched on the regions of its two faces.
pub fn build_weight_set(mesh: &CoverMesh, mode: WeightMode, tol: f64) -> Result<WeightSet> {
    let topo = &mesh.topo;
    let contrib: Vec<[f64; 3]> = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| face_contributions(mesh, f, mode, tol))
        .collect::<Result<_>>()?;
    let mut weight = vec![0.0; topo.n_edges()];
    let mut kind = vec![WeightKind::InteriorCotan; topo.n_edges()];
    for (e, &h) in topo.edges.iter().enumerate() {
        let t = topo.twin[h];
        let mut w = contrib[h / 3][h % 3];
        let mut regions = vec![mesh.regions[h / 3]];
        if t != crate::mesh::NONE {
            w += contrib[t / 3][t % 3];
            regions.push(mesh.regions[t / 3]);
        }
        if !w.is_finite() {
            return Err(Error::Geometry(format!("edge {e} has non-finite weight")));
        }
        weight[e] = w;
        kind[e] = match mode {
            WeightMode::Spherical => WeightKind::SphericalChord,
            WeightMode::Chart => {
                if regions.contains(&Region::Boundary) {
                    WeightKind::BoundaryQuadrature
                } else if regions.contains(&Region::Inner) && regions.contains(&Region::Outer) {
                    return Err(Error::Geometry(format!("edge {e} joins an inner and an outer face")));
                } else if regions[0] == Region::Outer {
                    WeightKind::InvertedCotan
                } else {
                    WeightKind::InteriorCotan
                }
            }
        };
    }
    Ok(WeightSet { weight, kind, quadrature_tol: tol })
}

/// Σ_e c(e)(u(h_e) − u(t_e))² for a single-valued vertex function.
pub fn cotan_energy(mesh: &CoverMesh, weights: &WeightSet, u: &[f64]) -> f64 {
    mesh.topo
        .edges
        .iter()
        .enumerate()
        .map(|(e, &h)| {
            let d = u[mesh.topo.dest(h)] - u[mesh.topo.origin(h)];
            weights.weight[e] * d * d
        })
        .sum()
}

/// |∇I|²·area of the linear interpolant on a planar triangle.
pub fn linear_face_energy(p: [Complex64; 3], u: [f64; 3]) -> f64 {
    // Solve ∇u · (p_k − p_0) = u_k − u_0 for k = 1, 2.
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let det = e1.re * e2.im - e1.im * e2.re;
    let (d1, d2) = (u[1] - u[0], u[2] - u[0]);
    let gx = (d1 * e2.im - d2 * e1.im) / det;
    let gy = (e1.re * d2 - e2.re * d1) / det;
    (gx * gx + gy * gy) * 0.5 * det.abs()
}

/// Dirichlet energy of the ruled interpolation on a boundary triangle by
/// direct two-dimensional quadrature over (τ, σ).
pub fn ruled_face_energy(x: Complex64, y: Complex64, z: Complex64, u: [f64; 3], tol: f64) -> Result<f64> {
    let arc = circular_arc(y, z);
    let [ux, uy, uz] = u;
    let inner = |t: f64| -> Result<[f64; 1]> {
        let (s, ds) = arc(t);
        let mut col = |sg: f64| -> Result<[f64; 1]> {
            let pt = ds * sg;
            let ps = s - x;
            let ut = sg * (uz - uy);
            let us = (uy - ux) + t * (uz - uy);
            let det = (pt.conj() * ps).im;
            if det == 0.0 {
                return Ok([0.0]);
            }
            let dot = (pt.conj() * ps).re;
            Ok([(ut * ut * ps.norm_sqr() - 2.0 * ut * us * dot + us * us * pt.norm_sqr()) / det.abs()])
        };
        Ok(gk15(&mut col, 0.0, 1.0)?.0)
    };
    let (rough, _) = gk15(&mut { inner }, 0.0, 1.0)?;
    Ok(integrate(inner, 0.0, 1.0, tol, tol * rough[0].abs())?[0])
}

/// Dirichlet energy of the piecewise interpolation of `u` over the mesh:
/// linear in z on inner faces, linear in w = 1/z on outer faces, ruled on
/// boundary faces.
pub fn interpolation_energy(mesh: &CoverMesh, u: &[f64], tol: f64) -> Result<f64> {
    let per_face: Vec<f64> = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| {
            let tri = mesh.topo.faces[f];
            let c = mesh.face_chart(f);
            let uf = tri.map(|v| u[v]);
            match mesh.regions[f] {
                Region::Inner | Region::Outer => Ok(linear_face_energy(c, uf)),
                Region::Boundary => {
                    let i = (0..3).find(|&i| mesh.is_inside(tri[i])).unwrap();
                    ruled_face_energy(
                        c[i],
                        c[(i + 1) % 3],
                        c[(i + 2) % 3],
                        [uf[i], uf[(i + 1) % 3], uf[(i + 2) % 3]],
                        tol,
                    )
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(per_face.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn equilateral_pair() {
        let a = c(0.0, 0.0);
        let b = c(1.0, 0.0);
        let h = 3f64.sqrt() / 2.0;
        let w = cotan_pair(a, b, c(0.5, h), c(0.5, -h));
        assert_abs_diff_eq!(w, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn square_diagonal_is_zero() {
        let w = cotan_pair(c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0));
        assert_abs_diff_eq!(w, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn straight_arc_gives_cotan() {
        let (x, y, z) = (c(0.1, 0.05), c(0.9, -0.2), c(0.4, 0.8));
        let got = ruled_constants(x, straight_arc(y, z), 1e-12).unwrap();
        let want = [0.5 * corner_cot(z, x, y), 0.5 * corner_cot(x, y, z), 0.5 * corner_cot(y, z, x)];
        for k in 0..3 {
            assert_abs_diff_eq!(got[k], want[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn right_corner_zero() {
        let got = ruled_constants(c(0.0, 0.0), straight_arc(c(1.0, 0.0), c(0.0, 1.0)), 1e-12).unwrap();
        assert_abs_diff_eq!(got[0], 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(got[1], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(got[2], 0.5, epsilon = 1e-13);
    }

    #[test]
    fn boundary_preconditions() {
        assert!(boundary_weights(c(1.9, 0.0), c(2.1, 0.0), c(2.0, 0.3), 2.0, 1e-10).is_ok());
        assert!(matches!(boundary_weights(c(2.1, 0.0), c(2.2, 0.0), c(2.0, 0.3), 2.0, 1e-10), Err(Error::Argument(_))));
        assert!(matches!(boundary_weights(c(0.0, 0.0), c(2.1, 0.0), c(2.0, 0.3), 2.0, 1e-10), Err(Error::Argument(_))));
    }

    #[test]
    fn ruled_energy_matches_constants() {
        let (x, y, z) = (c(1.85, 0.1), c(2.1, 0.0), c(2.0, 0.35));
        let k = boundary_weights(x, y, z, 2.0, 1e-12).unwrap();
        let u: [f64; 3] = [0.3, -1.2, 0.7];
        let e = k[0] * (u[0] - u[1]).powi(2) + k[1] * (u[1] - u[2]).powi(2) + k[2] * (u[2] - u[0]).powi(2);
        let direct = ruled_face_energy(x, y, z, u, 1e-12).unwrap();
        assert!((e - direct).abs() < 1e-10 * direct, "{e} vs {direct}");
    }

    #[test]
    fn linear_energy_of_plane() {
        let p = [c(0.0, 0.0), c(2.0, 0.0), c(0.0, 1.0)];
        let u = p.map(|z| 3.0 * z.re - z.im);
        assert_abs_diff_eq!(linear_face_energy(p, u), 10.0 * 1.0, epsilon = 1e-14);
    }
}
