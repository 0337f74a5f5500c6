use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by the pipeline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Config {
    pub quadrature_tol: f64,
    pub solver_tol: f64,
    /// CG iteration cap is `cg_iter_factor * sqrt(n)`.
    pub cg_iter_factor: f64,
    /// Below this many vertices the direct factorization is used.
    pub direct_threshold: usize,
    /// Relative Frobenius tolerance between the direct and energy methods.
    pub cross_tol: f64,
    pub zero_weight_tol: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            quadrature_tol: 1e-10,
            solver_tol: 1e-10,
            cg_iter_factor: 50.0,
            direct_threshold: 5000,
            cross_tol: 1e-6,
            zero_weight_tol: 1e-14,
        }
    }
}
