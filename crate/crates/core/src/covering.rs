//! Branched coverings of the Riemann sphere.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::ExtPoint;

/// A permutation of {0..d-1} in one-line notation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(d: usize) -> Self {
        Permutation((0..d).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        for &i in &self.0 {
            if i >= seen.len() || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Permutation(inv)
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &Permutation) -> Self {
        Permutation(first.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.0.len()];
        let mut out = Vec::new();
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut i = self.0[start];
            while i != start {
                seen[i] = true;
                cyc.push(i);
                i = self.0[i];
            }
            out.push(cyc);
        }
        out
    }

    /// Sorted multiset of cycle lengths.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.cycles().iter().map(|c| c.len()).collect();
        t.sort_unstable();
        t
    }

    /// Conjugate by `p`: p ∘ self ∘ p⁻¹.
    pub fn conjugate(&self, p: &Permutation) -> Self {
        p.after(self).after(&p.inverse())
    }
}

#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub position: ExtPoint,
    pub monodromy: Permutation,
    /// Adaptation radius. For ∞ this is the radius in the w = 1/z chart.
    pub r_o: f64,
}

impl BranchPoint {
    /// Aperture factor of every nontrivial cycle, 1/(cycle length).
    pub fn gammas(&self) -> Vec<f64> {
        self.monodromy
            .cycles()
            .iter()
            .filter(|c| c.len() > 1)
            .map(|c| 1.0 / c.len() as f64)
            .collect()
    }

    /// Smallest aperture factor, used to size the adaptation rings.
    pub fn gamma(&self) -> f64 {
        self.gammas().into_iter().fold(1.0, f64::min)
    }
}

#[derive(Clone, Debug)]
pub struct BranchedCover {
    pub name: String,
    pub degree: usize,
    pub rho: f64,
    pub branch_points: Vec<BranchPoint>,
    pub reference_pi: Option<DMatrix<Complex64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JsonComplex {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonPoint {
    Finite(JsonComplex),
    Named(String),
}

/// On-disk curve description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveFile {
    pub name: String,
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub branch_points: Vec<JsonPoint>,
    pub monodromy: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_pi: Option<Vec<Vec<JsonComplex>>>,
}

/// Default ρ: smallest one-decimal value > 1 with 2·max|p| ≤ ρ.
pub fn default_rho(points: &[ExtPoint]) -> f64 {
    let m = points.iter().filter_map(|p| p.as_finite()).map(|z| z.norm()).fold(0.0, f64::max);
    let r = (20.0 * m - 1e-9).ceil() / 10.0;
    if r > 1.0 {
        r
    } else {
        1.1
    }
}

/// Default adaptation radii.
pub fn default_radii(points: &[ExtPoint], rho: f64) -> Vec<f64> {
    let finite: Vec<Complex64> = points.iter().filter_map(|p| p.as_finite()).collect();
    let mut dmin = f64::INFINITY;
    for i in 0..finite.len() {
        for j in i + 1..finite.len() {
            dmin = dmin.min((finite[i] - finite[j]).norm());
        }
    }
    let r = (dmin / 3.0).min(rho / 4.0);
    points
        .iter()
        .map(|p| if p.is_infinite() { 1.0 / (2.0 * rho) } else { r })
        .collect()
}

impl BranchedCover {
    /// Builds a cover with default ρ and r_O where not given.
    pub fn new(
        name: &str,
        degree: usize,
        rho: Option<f64>,
        points: Vec<ExtPoint>,
        monodromy: Vec<Permutation>,
    ) -> Result<Self> {
        if points.len() != monodromy.len() {
            return Err(Error::Validation(format!(
                "{} branch points but {} monodromy permutations",
                points.len(),
                monodromy.len()
            )));
        }
        let rho = rho.unwrap_or_else(|| default_rho(&points));
        let radii = default_radii(&points, rho);
        let branch_points = points
            .into_iter()
            .zip(monodromy)
            .zip(radii)
            .map(|((position, monodromy), r_o)| BranchPoint { position, monodromy, r_o })
            .collect();
        Ok(BranchedCover { name: name.to_string(), degree, rho, branch_points, reference_pi: None })
    }

    pub fn from_file_struct(f: &CurveFile) -> Result<Self> {
        let mut points = Vec::with_capacity(f.branch_points.len());
        for p in &f.branch_points {
            points.push(match p {
                JsonPoint::Finite(c) => ExtPoint::finite(c.re, c.im),
                JsonPoint::Named(s) if s == "inf" => ExtPoint::Infinity,
                JsonPoint::Named(s) => {
                    return Err(Error::Parse(format!("unknown branch point {s:?}")));
                }
            });
        }
        let perms = f.monodromy.iter().cloned().map(Permutation).collect();
        let mut cover = BranchedCover::new(&f.name, f.degree, f.rho, points, perms)?;
        if let Some(rows) = &f.reference_pi {
            let g = rows.len();
            if rows.iter().any(|r| r.len() != g) {
                return Err(Error::Parse("reference_pi must be square".into()));
            }
            cover.reference_pi =
                Some(DMatrix::from_fn(g, g, |i, j| Complex64::new(rows[i][j].re, rows[i][j].im)));
        }
        Ok(cover)
    }

    pub fn to_file_struct(&self) -> CurveFile {
        CurveFile {
            name: self.name.clone(),
            degree: self.degree,
            rho: Some(self.rho),
            branch_points: self
                .branch_points
                .iter()
                .map(|b| match b.position {
                    ExtPoint::Finite(z) => JsonPoint::Finite(JsonComplex { re: z.re, im: z.im }),
                    ExtPoint::Infinity => JsonPoint::Named("inf".into()),
                })
                .collect(),
            monodromy: self.branch_points.iter().map(|b| b.monodromy.0.clone()).collect(),
            reference_pi: self.reference_pi.as_ref().map(|m| {
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| JsonComplex { re: m[(i, j)].re, im: m[(i, j)].im }).collect())
                    .collect()
            }),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CurveFile = serde_json::from_str(text)?;
        Self::from_file_struct(&f)
    }

    /// Reads and validates a curve file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cover = Self::from_json(&text)?;
        let report = validate(&cover);
        if !report.is_empty() {
            return Err(Error::Validation(report.join("; ")));
        }
        Ok(cover)
    }

    /// Product of the monodromies in listed order, the first applied first.
    pub fn monodromy_product(&self) -> Permutation {
        let mut p = Permutation::identity(self.degree);
        for b in &self.branch_points {
            p = b.monodromy.after(&p);
        }
        p
    }

    pub fn genus(&self) -> Result<usize> {
        genus(self)
    }

    /// Index of the branch point at `p`, if any.
    pub fn branch_index(&self, p: &ExtPoint) -> Option<usize> {
        self.branch_points.iter().position(|b| match (b.position, p) {
            (ExtPoint::Infinity, ExtPoint::Infinity) => true,
            (ExtPoint::Finite(a), ExtPoint::Finite(z)) => (a - z).norm() <= 1e-12,
            _ => false,
        })
    }

    /// True when every monodromy is the transposition (0 1) on two sheets.
    pub fn is_hyperelliptic(&self) -> bool {
        self.degree == 2 && self.branch_points.iter().all(|b| b.monodromy.0 == [1, 0])
    }
}

fn transitive(degree: usize, perms: &[&Permutation]) -> bool {
    if degree == 0 {
        return false;
    }
    let mut seen = vec![false; degree];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for p in perms {
            let j = p.apply(i);
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn ccw_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Lists every violated invariant; empty iff the cover is valid.
pub fn validate(cover: &BranchedCover) -> Vec<String> {
    let mut out = Vec::new();
    let d = cover.degree;
    if d == 0 {
        out.push("degree must be positive".to_string());
    }
    if !(cover.rho > 1.0) {
        out.push(format!("ρ must exceed 1 (got {})", cover.rho));
    }
    let mut perms_ok = true;
    for (k, b) in cover.branch_points.iter().enumerate() {
        let p = &b.monodromy;
        if p.degree() != d || !p.is_valid() {
            out.push(format!("monodromy {k} is not a permutation of {d} sheets"));
            perms_ok = false;
        } else if p.is_identity() {
            out.push(format!("monodromy {k} is the identity; not a branch point"));
        }
        if let ExtPoint::Finite(z) = b.position {
            if !z.re.is_finite() || !z.im.is_finite() {
                out.push(format!("branch point {k} is not finite"));
            } else if z.norm() > cover.rho / 2.0 + 1e-12 {
                out.push(format!("branch point {k} outside B_{{ρ/2}} (|p| = {} > {})", z.norm(), cover.rho / 2.0));
            }
        }
        if !(b.r_o > 0.0) {
            out.push(format!("branch point {k} has non-positive r_O"));
        }
    }
    let n_inf = cover.branch_points.iter().filter(|b| b.position.is_infinite()).count();
    if n_inf > 1 {
        out.push("∞ listed more than once".to_string());
    }
    if n_inf == 1 && !cover.branch_points.last().map(|b| b.position.is_infinite()).unwrap_or(false) {
        out.push("∞ must be listed last".to_string());
    }
    let args: Vec<f64> = cover
        .branch_points
        .iter()
        .filter_map(|b| b.position.as_finite())
        .filter(|z| z.norm() > 1e-14)
        .map(ccw_arg)
        .collect();
    if args.windows(2).any(|w| w[1] < w[0]) {
        out.push("finite branch points must be listed counterclockwise by argument".to_string());
    }
    for i in 0..cover.branch_points.len() {
        for j in i + 1..cover.branch_points.len() {
            let (a, b) = (&cover.branch_points[i], &cover.branch_points[j]);
            if let (Some(p), Some(q)) = (a.position.as_finite(), b.position.as_finite()) {
                if (p - q).norm() <= 1e-12 {
                    out.push(format!("branch points {i} and {j} coincide"));
                } else if (p - q).norm() <= a.r_o + b.r_o {
                    out.push(format!("adaptation disks of branch points {i} and {j} overlap"));
                }
            }
        }
        let b = &cover.branch_points[i];
        if let Some(p) = b.position.as_finite() {
            if p.norm() + b.r_o >= cover.rho {
                out.push(format!("adaptation disk of branch point {i} leaves B_ρ"));
            }
        }
    }
    if perms_ok && d > 0 {
        if !cover.monodromy_product().is_identity() {
            out.push("product of monodromies is not the identity".to_string());
        }
        let refs: Vec<&Permutation> = cover.branch_points.iter().map(|b| &b.monodromy).collect();
        if !transitive(d, &refs) {
            out.push("monodromy group is not transitive; the cover is disconnected".to_string());
        }
    }
    out
}

/// Genus by Riemann–Hurwitz.
pub fn genus(cover: &BranchedCover) -> Result<usize> {
    let d = cover.degree;
    for (k, b) in cover.branch_points.iter().enumerate() {
        if b.monodromy.degree() != d || !b.monodromy.is_valid() {
            return Err(Error::Validation(format!("monodromy {k} is not a permutation of {d} sheets")));
        }
    }
    if !cover.monodromy_product().is_identity() {
        return Err(Error::Validation("product of monodromies is not the identity".into()));
    }
    let ram: usize = cover
        .branch_points
        .iter()
        .map(|b| b.monodromy.cycles().iter().map(|c| c.len() - 1).sum::<usize>())
        .sum();
    let two_g = ram as i64 - 2 * d as i64 + 2;
    if two_g < 0 || two_g % 2 != 0 {
        return Err(Error::Validation(format!("Riemann–Hurwitz gives non-integral genus ({two_g}/2)")));
    }
    Ok((two_g / 2) as usize)
}

/// g_O in polar form: r^γ e^{iγφ}, with φ the continuous angle in [0, 2π/γ).
pub fn chart_polar(r: f64, phi: f64, gamma: f64) -> Complex64 {
    Complex64::from_polar(r.powf(gamma), gamma * phi)
}

/// Chart coordinate of `z` near the branch point `o`.
///
/// `turn` is the number of full turns of the continuous angle (0 ≤ turn < 1/γ)
/// and `ref_angle` the argument of the reference ray, both fixed per lift.
pub fn chart_image(z: ExtPoint, o: &BranchPoint, gamma: f64, turn: usize, ref_angle: f64) -> Result<Complex64> {
    let (w, in_disk) = match (o.position, z) {
        (ExtPoint::Finite(c), ExtPoint::Finite(z)) => (z - c, (z - c).norm() < o.r_o),
        (ExtPoint::Infinity, ExtPoint::Infinity) => (Complex64::new(0.0, 0.0), true),
        (ExtPoint::Infinity, ExtPoint::Finite(z)) => {
            let w = if z.norm_sqr() > 0.0 { z.inv() } else { Complex64::new(f64::INFINITY, 0.0) };
            (w, w.norm() < o.r_o)
        }
        (ExtPoint::Finite(_), ExtPoint::Infinity) => (Complex64::new(f64::INFINITY, 0.0), false),
    };
    if !in_disk {
        return Err(Error::Domain(format!("{z:?} outside the chart disk of {:?}", o.position)));
    }
    let n = (1.0 / gamma).round() as usize;
    if turn >= n {
        return Err(Error::Domain(format!("turn {turn} exceeds aperture {n}")));
    }
    let r = w.norm();
    if r == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let phi = (w.arg() - ref_angle).rem_euclid(2.0 * PI) + 2.0 * PI * turn as f64;
    Ok(chart_polar(r, phi, gamma))
}
