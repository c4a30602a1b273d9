//! Error and residual metrics of a computed solution.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::EvaluationSet;
use crate::par::Execution;
use crate::problems::monge_ampere::hessian_is_positive_definite;
use crate::problems::Problem;
use crate::system::CollocationSystem;

/// One row of a results table. Optional fields are empty in the CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsRow {
    pub name: String,
    pub problem: String,
    pub kernel: String,
    pub method: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub shape: f64,
    pub status: String,
    pub mu_final: Option<f64>,
    pub rms_eps: Option<f64>,
    pub max_eps: Option<f64>,
    pub rms_r: Option<f64>,
    pub max_r: Option<f64>,
    pub rms_rc: Option<f64>,
    pub cond_j: Option<f64>,
    pub cond_h: Option<f64>,
    pub iterations: Option<usize>,
    pub accepted: Option<usize>,
    /// Log-log slope of the last three residual-norm reductions.
    pub slope: Option<f64>,
    /// Same, on the distance to the final iterate.
    pub slope_err: Option<f64>,
    /// Monge-Ampère only: the Hessian of the solution is positive definite
    /// at every evaluation point.
    pub convex: Option<bool>,
    pub wall_time_s: Option<f64>,
    pub error: Option<String>,
}

pub fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Metrics of the trial function with coefficients `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionMetrics {
    pub rms_eps: Option<f64>,
    pub max_eps: Option<f64>,
    pub rms_r: f64,
    pub max_r: f64,
    pub rms_rc: f64,
    pub convex: Option<bool>,
}

/// `eps = u - u_exact` and the PDE residual `R` on the evaluation set,
/// `R_c` over every collocation row. The convexity check reads the
/// components as a Hessian, so it only makes sense for Monge-Ampère.
pub fn solution_metrics(
    sys: &CollocationSystem,
    prob: &dyn Problem,
    alpha: &DVector<f64>,
    eval: &EvaluationSet,
    check_convexity: bool,
    exec: Execution,
) -> Result<SolutionMetrics> {
    use crate::kernels::DifferentialComponent::Identity;
    let mut comps = vec![Identity];
    comps.extend_from_slice(prob.components());
    let vals = sys.interpolant(alpha).eval_many(&comps, &eval.points, exec)?;
    let mut eps = Vec::new();
    let mut r = Vec::with_capacity(vals.len());
    for (x, v) in eval.points.iter().zip(&vals) {
        if let Some(u) = prob.exact(x) {
            eps.push(v[0] - u);
        }
        r.push(prob.residual(x, &v[1..]));
    }
    let has_exact = !eps.is_empty();
    let rc = sys.residual_alpha(prob, alpha)?;
    let convex = check_convexity.then(|| vals.iter().all(|v| hessian_is_positive_definite(prob.dim(), &v[1..])));
    Ok(SolutionMetrics {
        rms_eps: has_exact.then(|| rms(&eps)),
        max_eps: has_exact.then(|| max_abs(&eps)),
        rms_r: rms(&r),
        max_r: max_abs(&r),
        rms_rc: rms(rc.as_slice()),
        convex,
    })
}
