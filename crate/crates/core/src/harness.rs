//! Convergence sweeps over the four triangulation schemes, slope fitting,
//! and CSV/SVG output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::covering::BranchedCover;
use crate::error::{Error, Result};
use crate::homology::build_cut_system;
use crate::mesh::{generate, MeshOptions, Sampler};
use crate::periods::{compare, period_matrix, CompareMode, Method};
use crate::weights::{build_weight_set, WeightMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ClusteringRandom,
    ClusteringFibonacci,
    HomogeneousRandom,
    HomogeneousFibonacci,
}

impl Scheme {
    pub const ALL: [Scheme; 4] =
        [Scheme::ClusteringRandom, Scheme::ClusteringFibonacci, Scheme::HomogeneousRandom, Scheme::HomogeneousFibonacci];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ClusteringRandom => "clustering-random",
            Scheme::ClusteringFibonacci => "clustering-fibonacci",
            Scheme::HomogeneousRandom => "homogeneous-random",
            Scheme::HomogeneousFibonacci => "homogeneous-fibonacci",
        }
    }

    pub fn sampler(self) -> Sampler {
        match self {
            Scheme::ClusteringRandom | Scheme::HomogeneousRandom => Sampler::Random,
            _ => Sampler::Fibonacci,
        }
    }

    pub fn adapted(self) -> bool {
        matches!(self, Scheme::ClusteringRandom | Scheme::ClusteringFibonacci)
    }

    pub fn is_random(self) -> bool {
        self.sampler() == Sampler::Random
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown scheme {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub curve: PathBuf,
    pub schemes: Vec<Scheme>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub weights: WeightMode,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    /// Record wall times; off keeps output byte-identical across runs.
    pub timing: bool,
}

pub const DEFAULT_SIZES: [usize; 6] = [250, 500, 1000, 2000, 4000, 8000];

impl ExperimentPlan {
    pub fn new(curve: impl Into<PathBuf>) -> Self {
        ExperimentPlan {
            curve: curve.into(),
            schemes: Scheme::ALL.to_vec(),
            sizes: DEFAULT_SIZES.to_vec(),
            seeds: vec![1, 2, 3],
            weights: WeightMode::Chart,
            csv: None,
            svg: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 3 {
            return Err(Error::Argument("at least 3 sizes are needed for slope fitting".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("sizes must be strictly increasing".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Argument("no schemes selected".into()));
        }
        if self.seeds.is_empty() && self.schemes.iter().any(|s| s.is_random()) {
            return Err(Error::Argument("random schemes need at least one seed".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub scheme: Scheme,
    pub seed: u64,
    pub n_base: usize,
    pub h: f64,
    pub min_angle: f64,
    pub err_fro: f64,
    pub err_modular: Option<f64>,
    pub symmetry_defect: f64,
    pub wall_time_s: f64,
    /// Set when a stage failed; the numeric fields are then meaningless.
    pub error: Option<String>,
}

impl ConvergenceRow {
    /// The error used for slopes: modular for genus 1, Frobenius otherwise.
    pub fn err(&self) -> f64 {
        self.err_modular.unwrap_or(self.err_fro)
    }
}

#[derive(Clone, Debug)]
pub struct SchemeSlope {
    pub scheme: Scheme,
    /// (h, err) medians per size used in the fit.
    pub points: Vec<(f64, f64)>,
    pub slope: std::result::Result<f64, String>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub slopes: Vec<SchemeSlope>,
}

impl ConvergenceReport {
    pub fn slope(&self, scheme: Scheme) -> Option<&SchemeSlope> {
        self.slopes.iter().find(|s| s.scheme == scheme)
    }
}

fn error_tag(e: &Error) -> String {
    let s = format!("{e:?}");
    s.split('(').next().unwrap_or("Error").to_lowercase()
}

/// One grid cell: mesh, weights, cuts, periods, comparison.
pub fn run_cell(
    cover: &BranchedCover,
    reference: &DMatrix<Complex64>,
    scheme: Scheme,
    n: usize,
    seed: u64,
    weights: WeightMode,
    timing: bool,
    config: &Config,
) -> ConvergenceRow {
    let t0 = Instant::now();
    let result = (|| -> Result<_> {
        let mesh = generate(cover, &MeshOptions::new(scheme.sampler(), n, seed, scheme.adapted()))?;
        let w = build_weight_set(&mesh, weights, config.quadrature_tol)?;
        let cuts = build_cut_system(&mesh)?;
        let res = period_matrix(&mesh, &w, &cuts, Method::Direct, config)?;
        let g = reference.nrows();
        let err_fro = compare(&res.pi, reference, if g == 1 { CompareMode::Direct } else { CompareMode::SignedPerm })?;
        let err_modular = if g == 1 { Some(compare(&res.pi, reference, CompareMode::ModularG1)?) } else { None };
        Ok((res, err_fro, err_modular))
    })();
    let wall_time_s = if timing { t0.elapsed().as_secs_f64() } else { 0.0 };
    match result {
        Ok((res, err_fro, err_modular)) => ConvergenceRow {
            scheme,
            seed,
            n_base: n,
            h: res.stats.h,
            min_angle: res.stats.min_angle,
            err_fro,
            err_modular,
            symmetry_defect: res.symmetry_defect,
            wall_time_s,
            error: None,
        },
        Err(e) => ConvergenceRow {
            scheme,
            seed,
            n_base: n,
            h: f64::NAN,
            min_angle: f64::NAN,
            err_fro: f64::NAN,
            err_modular: None,
            symmetry_defect: f64::NAN,
            wall_time_s,
            error: Some(error_tag(&e)),
        },
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-size medians of h and error over the successful rows of a scheme.
pub fn median_points(rows: &[ConvergenceRow], scheme: Scheme) -> Vec<(f64, f64)> {
    let mut sizes: Vec<usize> = rows.iter().filter(|r| r.scheme == scheme).map(|r| r.n_base).collect();
    sizes.sort();
    sizes.dedup();
    sizes
        .into_iter()
        .filter_map(|n| {
            let ok: Vec<&ConvergenceRow> =
                rows.iter().filter(|r| r.scheme == scheme && r.n_base == n && r.error.is_none()).collect();
            if ok.is_empty() {
                return None;
            }
            Some((median(ok.iter().map(|r| r.h).collect()), median(ok.iter().map(|r| r.err()).collect())))
        })
        .collect()
}

/// Least-squares slope of log(err) against log(h).
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Argument(format!("slope fit needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0) || !(e > 0.0)) {
        return Err(Error::Argument("slope fit needs positive h and err".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("all h values coincide".into()));
    }
    Ok(sxy / sxx)
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("RAMIPERIOD_WORKERS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Argument(format!("RAMIPERIOD_WORKERS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Argument("RAMIPERIOD_WORKERS must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Argument(e.to_string()))
}

pub fn run_convergence(plan: &ExperimentPlan, config: &Config) -> Result<ConvergenceReport> {
    plan.validate()?;
    let cover = BranchedCover::load(&plan.curve)?;
    let reference = cover
        .reference_pi
        .clone()
        .ok_or_else(|| Error::Validation(format!("{} has no reference_pi", plan.curve.display())))?;
    let mut cells = Vec::new();
    for &scheme in &plan.schemes {
        for &n in &plan.sizes {
            if scheme.is_random() {
                for &seed in &plan.seeds {
                    cells.push((scheme, n, seed));
                }
            } else {
                cells.push((scheme, n, 0));
            }
        }
    }
    let pool = worker_pool()?;
    let rows: Vec<ConvergenceRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(s, n, seed)| run_cell(&cover, &reference, s, n, seed, plan.weights, plan.timing, config))
            .collect()
    });
    let slopes = plan
        .schemes
        .iter()
        .map(|&scheme| {
            let points = median_points(&rows, scheme);
            let slope = fit_slope(&points).map_err(|e| e.to_string());
            SchemeSlope { scheme, points, slope }
        })
        .collect();
    let report = ConvergenceReport { rows, slopes };
    if let Some(p) = &plan.csv {
        emit_csv(&report.rows, p)?;
    }
    if let Some(p) = &plan.svg {
        emit_svg(&report, p)?;
    }
    Ok(report)
}

pub const CSV_HEADER: &str = "scheme,seed,n_base,h,min_angle,err_fro,err_modular,symmetry_defect,wall_time_s";

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

pub fn csv_string(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let err_fro = match &r.error {
            Some(tag) => format!("error:{tag}"),
            None => num(r.err_fro),
        };
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.scheme.name(),
            r.seed,
            r.n_base,
            num(r.h),
            num(r.min_angle),
            err_fro,
            r.err_modular.map(num).unwrap_or_default(),
            num(r.symmetry_defect),
            num(r.wall_time_s)
        )
        .unwrap();
    }
    s
}

pub fn emit_csv(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Argument("no rows to write".into()));
    }
    std::fs::write(path, csv_string(rows))?;
    Ok(())
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 280.0;
const MARGIN: f64 = 48.0;

fn colour(s: Scheme) -> &'static str {
    match s {
        Scheme::ClusteringRandom => "#000000",
        Scheme::ClusteringFibonacci => "#d62728",
        Scheme::HomogeneousRandom => "#2ca02c",
        Scheme::HomogeneousFibonacci => "#1f77b4",
    }
}

fn marker(s: Scheme, x: f64, y: f64) -> String {
    let c = colour(s);
    match s {
        Scheme::ClusteringRandom => format!(r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="none" stroke="{c}"/>"#),
        Scheme::ClusteringFibonacci => {
            format!(r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="none" stroke="{c}"/>"#, x - 3.0, y - 3.0)
        }
        Scheme::HomogeneousRandom => format!(
            r#"<polygon points="{x:.2},{:.2} {:.2},{y:.2} {x:.2},{:.2} {:.2},{y:.2}" fill="none" stroke="{c}"/>"#,
            y - 4.0,
            x + 4.0,
            y + 4.0,
            x - 4.0
        ),
        Scheme::HomogeneousFibonacci => format!(
            r#"<polygon points="{x:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="{c}"/>"#,
            y - 4.0,
            x + 3.5,
            y + 3.0,
            x - 3.5,
            y + 3.0
        ),
    }
}

/// Log-log scatter, one panel per scheme, with fitted line and slope.
pub fn svg_string(report: &ConvergenceReport) -> String {
    let ok: Vec<&ConvergenceRow> = report.rows.iter().filter(|r| r.error.is_none() && r.h > 0.0 && r.err() > 0.0).collect();
    let lx: Vec<f64> = ok.iter().map(|r| r.h.log10()).collect();
    let ly: Vec<f64> = ok.iter().map(|r| r.err().log10()).collect();
    let range = |v: &[f64]| -> (f64, f64) {
        if v.is_empty() {
            return (-1.0, 0.0);
        }
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min).floor();
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil();
        if hi > lo {
            (lo, hi)
        } else {
            (lo, lo + 1.0)
        }
    };
    let (x0, x1) = range(&lx);
    let (y0, y1) = range(&ly);
    let schemes: Vec<Scheme> = report.slopes.iter().map(|s| s.scheme).collect();
    let cols = if schemes.len() > 1 { 2 } else { 1 };
    let rows_n = schemes.len().div_ceil(cols);
    let width = cols as f64 * PANEL_W;
    let height = rows_n as f64 * PANEL_H;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();
    for (i, sl) in report.slopes.iter().enumerate() {
        let ox = (i % cols) as f64 * PANEL_W;
        let oy = (i / cols) as f64 * PANEL_H;
        let pw = PANEL_W - 1.5 * MARGIN;
        let ph = PANEL_H - 1.5 * MARGIN;
        let px = |lx: f64| ox + MARGIN + (lx - x0) / (x1 - x0) * pw;
        let py = |ly: f64| oy + MARGIN * 0.5 + (y1 - ly) / (y1 - y0) * ph;
        writeln!(s, r#"<g>"#).unwrap();
        writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="gray"/>"#, px(x0), py(y1)).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, px(x0) + 4.0, py(y1) + 14.0, sl.scheme.name()).unwrap();
        for d in (x0 as i64)..=(x1 as i64) {
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#, px(d as f64), py(y0) + 14.0).unwrap();
        }
        for d in (y0 as i64)..=(y1 as i64) {
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, px(x0) - 4.0, py(d as f64) + 4.0).unwrap();
        }
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">h</text>"#, px(0.5 * (x0 + x1)), py(y0) + 28.0).unwrap();
        for r in ok.iter().filter(|r| r.scheme == sl.scheme) {
            writeln!(s, "{}", marker(sl.scheme, px(r.h.log10()), py(r.err().log10()))).unwrap();
        }
        if let Ok(m) = sl.slope {
            let n = sl.points.len() as f64;
            let mx = sl.points.iter().map(|p| p.0.log10()).sum::<f64>() / n;
            let my = sl.points.iter().map(|p| p.1.log10()).sum::<f64>() / n;
            let (a, b) = sl
                .points
                .iter()
                .map(|p| p.0.log10())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}"/>"#,
                px(a),
                py(my + m * (a - mx)),
                px(b),
                py(my + m * (b - mx)),
                colour(sl.scheme)
            )
            .unwrap();
            writeln!(s, r#"<text x="{:.2}" y="{:.2}">slope {m:.3}</text>"#, px(x0) + 4.0, py(y1) + 28.0).unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(report: &ConvergenceReport, path: &Path) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::Argument("no rows to plot".into()));
    }
    std::fs::write(path, svg_string(report))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_of_exact_power_laws() {
        let sq: Vec<(f64, f64)> = [0.1, 0.05, 0.02, 0.01].iter().map(|&h| (h, h * h)).collect();
        assert!((fit_slope(&sq).unwrap() - 2.0).abs() < 1e-12);
        let lin: Vec<(f64, f64)> = [0.3, 0.1, 0.07].iter().map(|&h| (h, 3.0 * h)).collect();
        assert!((fit_slope(&lin).unwrap() - 1.0).abs() < 1e-12);
        assert!(fit_slope(&lin[..2]).is_err());
        assert!(fit_slope(&[(0.1, 0.0), (0.2, 1.0), (0.3, 1.0)]).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("clustering".parse::<Scheme>().is_err());
    }

    fn row(scheme: Scheme, n: usize, seed: u64, h: f64, err: f64) -> ConvergenceRow {
        ConvergenceRow {
            scheme,
            seed,
            n_base: n,
            h,
            min_angle: 0.5,
            err_fro: err,
            err_modular: Some(err),
            symmetry_defect: 0.0,
            wall_time_s: 0.0,
            error: None,
        }
    }

    #[test]
    fn medians_skip_failed_rows() {
        let mut rows = vec![
            row(Scheme::HomogeneousRandom, 250, 1, 0.5, 0.3),
            row(Scheme::HomogeneousRandom, 250, 2, 0.4, 0.1),
            row(Scheme::HomogeneousRandom, 250, 3, 0.6, 0.2),
        ];
        rows[1].error = Some("geometry".into());
        let p = median_points(&rows, Scheme::HomogeneousRandom);
        assert_eq!(p, vec![(0.55, 0.25)]);
    }

    #[test]
    fn csv_has_exact_header_and_is_deterministic() {
        let rows = vec![row(Scheme::ClusteringFibonacci, 250, 0, 0.5, 0.01)];
        let a = csv_string(&rows);
        assert_eq!(a.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(a.lines().count(), 2);
        assert_eq!(a, csv_string(&rows));
        let mut bad = rows.clone();
        bad[0].error = Some("resolution".into());
        assert!(csv_string(&bad).contains("error:resolution"));
    }

    #[test]
    fn svg_has_a_panel_per_scheme() {
        let rows: Vec<ConvergenceRow> = Scheme::ALL
            .iter()
            .flat_map(|&s| [0.4, 0.2, 0.1].map(|h| row(s, (1.0 / h) as usize, 0, h, h)))
            .collect();
        let slopes = Scheme::ALL
            .iter()
            .map(|&s| {
                let points = median_points(&rows, s);
                SchemeSlope { scheme: s, slope: fit_slope(&points).map_err(|e| e.to_string()), points }
            })
            .collect();
        let rep = ConvergenceReport { rows, slopes };
        let a = svg_string(&rep);
        assert_eq!(a.matches("<g>").count(), 4);
        assert!(a.contains("slope 1.000"));
        assert_eq!(a, svg_string(&rep));
    }

    #[test]
    fn plans_are_validated() {
        let mut p = ExperimentPlan::new("x.json");
        assert!(p.validate().is_ok());
        p.sizes = vec![500, 250, 1000];
        assert!(p.validate().is_err());
        p.sizes = vec![250, 500];
        assert!(p.validate().is_err());
    }
}
