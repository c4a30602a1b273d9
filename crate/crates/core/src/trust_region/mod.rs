//! Trust-region rootfinder for the collocation system.
//!
//! The radius update follows the classic rule: shrink by 4 when
//! `rho < 1/4`, double (up to `delta_max`) when `rho > 3/4` and the step hit
//! the boundary, accept the step when `rho > eta`.

pub mod scaling;
pub mod steps;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cond_estimate, cond_svd};
use crate::problems::Problem;
use crate::system::{fd_jacobian, CollocationSystem, FdScheme};
pub use steps::{
    cauchy_step, dogleg_step, model_drop, nearly_exact_step, trust_ratio, twod_subspace_step, Step, StepKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrsMethod {
    Dogleg,
    NearlyExact,
    #[serde(alias = "2dsub")]
    TwoDSubspace,
}

impl TrsMethod {
    pub fn needs_hessian(self) -> bool {
        self != TrsMethod::Dogleg
    }

    pub fn label(self) -> &'static str {
        match self {
            TrsMethod::Dogleg => "dogleg",
            TrsMethod::NearlyExact => "nearly_exact",
            TrsMethod::TwoDSubspace => "2dsub",
        }
    }
}

/// How the Jacobian is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    #[default]
    Analytic,
    /// Forward differences of the residual; the Hessian is then `J^T J`.
    ForwardDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustRegionConfig {
    pub trs: TrsMethod,
    pub scaling: bool,
    pub delta0: f64,
    pub delta_max: f64,
    pub eta: f64,
    pub max_iter: usize,
    /// Stagnation window in accepted iterations.
    pub window: usize,
    /// Relative drop of `mu` over the window below which `mu` stagnates.
    pub stagnation_tol: f64,
    /// `mu_floor = floor_factor * max(1, mu_0)`.
    pub floor_factor: f64,
    /// Relative singularity tolerance on the smallest Hessian eigenvalue.
    pub eig_tol: f64,
    /// Estimate `cond(J)` at the final iterate.
    pub condition: bool,
}

impl TrustRegionConfig {
    pub fn new(trs: TrsMethod, scaling: bool) -> Self {
        let delta0 = if scaling { 1e10 } else { 1.0 };
        TrustRegionConfig {
            trs,
            scaling,
            delta0,
            delta_max: 1e3 * delta0,
            eta: 1e-4,
            max_iter: 500,
            window: 5,
            stagnation_tol: 1e-3,
            floor_factor: 1e-12,
            eig_tol: 1e-14,
            condition: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0 <= self.delta_max) {
            return Err(Error::Config("need 0 < delta0 <= delta_max".into()));
        }
        if !(0.0..0.25).contains(&self.eta) {
            return Err(Error::Config("eta must lie in [0, 1/4)".into()));
        }
        if self.window == 0 || self.max_iter == 0 {
            return Err(Error::Config("window and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Merit at the current iterate (before the step).
    pub mu: f64,
    pub mu_trial: f64,
    pub delta: f64,
    pub rho: f64,
    pub step_kind: StepKind,
    pub step_norm: f64,
    pub accepted: bool,
    pub hessian_pd: Option<bool>,
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    Stagnated,
    MaxIter,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub trace: Vec<IterationRecord>,
    pub final_beta: DVector<f64>,
    pub final_mu: f64,
    pub mu0: f64,
    pub converged: bool,
    pub reason: StopReason,
    pub cond_j_final: Option<f64>,
    /// Every accepted iterate, starting with the initial one.
    pub iterates: Vec<DVector<f64>>,
    /// Merit at each entry of `iterates`.
    pub merits: Vec<f64>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn accepted(&self) -> usize {
        self.trace.iter().filter(|r| r.accepted).count()
    }

    /// `||W||` at each accepted iterate.
    pub fn residual_norms(&self) -> Vec<f64> {
        self.merits.iter().map(|m| (2.0 * m).sqrt()).collect()
    }

    /// Terminal order measured on the residual norms.
    pub fn residual_slope(&self) -> Option<f64> {
        let r = self.residual_norms();
        let last = *r.last()?;
        let kept: Vec<f64> = r.into_iter().filter(|&w| w > NOISE_MARGIN * last).collect();
        slope_of_last_three(&kept)
    }

    /// Terminal order measured on `||beta_k - beta_final||`, over the
    /// iterates whose residual is still above the roundoff floor.
    pub fn error_slope(&self) -> Option<f64> {
        convergence_slope(&self.iterates, &self.final_beta, &self.residual_norms())
    }
}

/// Residual, Jacobian and (optionally) merit Hessian at one point.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub w: DVector<f64>,
    pub j: DMatrix<f64>,
    pub h: Option<DMatrix<f64>>,
}

/// What the solver needs from a nonlinear system.
pub trait MeritProvider: Sync {
    fn n_vars(&self) -> usize;
    fn residual(&self, beta: &DVector<f64>) -> Result<DVector<f64>>;
    fn linearize(&self, beta: &DVector<f64>, hessian: bool) -> Result<Linearization>;
}

/// Adapter from a collocation system and problem.
pub struct SystemProvider<'a> {
    pub sys: &'a CollocationSystem,
    pub prob: &'a dyn Problem,
    pub mode: JacobianMode,
}

impl MeritProvider for SystemProvider<'_> {
    fn n_vars(&self) -> usize {
        self.sys.n_vars()
    }

    fn residual(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        self.sys.residual(self.prob, beta)
    }

    fn linearize(&self, beta: &DVector<f64>, hessian: bool) -> Result<Linearization> {
        match self.mode {
            JacobianMode::Analytic => {
                let st = self.sys.state(self.prob, beta, hessian)?;
                Ok(Linearization {
                    w: st.w,
                    j: st.j,
                    h: st.h,
                })
            }
            JacobianMode::ForwardDifference => {
                let w = self.sys.residual(self.prob, beta)?;
                let j = fd_jacobian(self.sys, self.prob, beta, FdScheme::Forward)?;
                let h = hessian.then(|| j.tr_mul(&j));
                Ok(Linearization { w, j, h })
            }
        }
    }
}

/// 2-norm condition number: SVD up to 1500 unknowns, estimate beyond.
pub fn condition_number(j: &DMatrix<f64>) -> f64 {
    if j.nrows() <= 1500 {
        cond_svd(j)
    } else {
        cond_estimate(j, 30)
    }
}

fn merit(w: &DVector<f64>) -> f64 {
    0.5 * w.norm_squared()
}

/// Runs the trust-region iteration from `beta0`.
pub fn solve(provider: &dyn MeritProvider, cfg: &TrustRegionConfig, beta0: &DVector<f64>) -> Result<SolveReport> {
    cfg.validate()?;
    if beta0.len() != provider.n_vars() || beta0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("initial guess has wrong length or non-finite entries".into()));
    }
    let need_h = cfg.trs.needs_hessian() || cfg.scaling;
    let mut beta = beta0.clone();
    let mut lin = provider
        .linearize(&beta, need_h)
        .map_err(|e| Error::NonFinite(format!("at the initial guess: {e}")))?;
    let mut mu = merit(&lin.w);
    if !mu.is_finite() {
        return Err(Error::NonFinite("merit at the initial guess".into()));
    }
    let mu0 = mu;
    let floor = cfg.floor_factor * mu0.max(1.0);
    let mut delta = cfg.delta0;
    let mut history = vec![mu];
    let mut iterates = vec![beta.clone()];
    let mut trace = Vec::new();
    let mut rejections = 0usize;
    let classify = |mu: f64| {
        if mu < floor {
            StopReason::Converged
        } else {
            StopReason::Stagnated
        }
    };
    let mut reason = StopReason::MaxIter;

    for k in 1..=cfg.max_iter {
        if mu == 0.0 {
            reason = StopReason::Converged;
            break;
        }
        let grad = lin.j.tr_mul(&lin.w);
        if grad.iter().all(|&g| g == 0.0) {
            reason = classify(mu);
            break;
        }
        let scaled = cfg.scaling.then(|| {
            let diag = scaling::scaling_diagonal(lin.h.as_ref().expect("Hessian computed for scaling"));
            scaling::apply_scaling(&lin.j, lin.h.as_ref(), &grad, &diag)
        });
        let (j, h, g) = match &scaled {
            Some(s) => (&s.j, s.h.as_ref(), &s.grad),
            None => (&lin.j, lin.h.as_ref(), &grad),
        };
        let step = match cfg.trs {
            TrsMethod::Dogleg => dogleg_step(j, g, delta),
            TrsMethod::NearlyExact => nearly_exact_step(h.expect("Hessian"), g, delta),
            TrsMethod::TwoDSubspace => twod_subspace_step(h.expect("Hessian"), g, delta, cfg.eig_tol),
        };
        if !(step.model_drop > 0.0) || step.gamma.iter().any(|v| !v.is_finite()) {
            // No predicted decrease left at working precision.
            reason = classify(mu);
            break;
        }
        let gamma = match &scaled {
            Some(s) => s.unscale(&step.gamma),
            None => step.gamma.clone(),
        };
        let trial = &beta + &gamma;
        let mu_trial = provider.residual(&trial).map_or(f64::NAN, |w| merit(&w));
        let rho = trust_ratio(mu, mu_trial, step.model_drop);
        let step_norm = step.gamma.norm();
        let delta_used = delta;
        if rho < 0.25 {
            delta /= 4.0;
        } else if rho > 0.75 && (step_norm - delta).abs() <= 1e-10 * delta {
            delta = (2.0 * delta).min(cfg.delta_max);
        }
        let accepted = rho > cfg.eta;
        trace.push(IterationRecord {
            k,
            mu,
            mu_trial,
            delta: delta_used,
            rho,
            step_kind: step.kind,
            step_norm,
            accepted,
            hessian_pd: step.hessian_pd,
            fallback: step.fallback,
        });
        if accepted {
            rejections = 0;
            match provider.linearize(&trial, need_h) {
                Ok(l) => lin = l,
                Err(_) => {
                    reason = StopReason::NonFinite;
                    break;
                }
            }
            beta = trial;
            mu = merit(&lin.w);
            history.push(mu);
            iterates.push(beta.clone());
            if history.len() > cfg.window {
                let old = history[history.len() - 1 - cfg.window];
                if old - mu < cfg.stagnation_tol * old {
                    reason = classify(mu);
                    break;
                }
            }
        } else {
            rejections += 1;
            if rejections >= 4 * cfg.window {
                reason = classify(mu);
                break;
            }
        }
    }
    if mu == 0.0 {
        reason = StopReason::Converged;
    }
    let cond_j_final = cfg.condition.then(|| condition_number(&lin.j));
    Ok(SolveReport {
        trace,
        final_beta: beta,
        final_mu: mu,
        mu0,
        converged: reason == StopReason::Converged,
        reason,
        cond_j_final,
        iterates,
        merits: history,
    })
}

/// Iterates whose residual is within this factor of the final one are
/// treated as sitting on the roundoff floor.
pub const NOISE_MARGIN: f64 = 10.0;

/// Slope of `log e_{k+1}` against `log e_k` over the last three accepted
/// iterates, with `e_k = ||beta_k - beta_final||`. Iterates whose residual
/// norm is within [`NOISE_MARGIN`] of the last one are skipped: there the
/// error is dominated by roundoff in `beta_final`.
pub fn convergence_slope(iterates: &[DVector<f64>], final_beta: &DVector<f64>, residuals: &[f64]) -> Option<f64> {
    let last = *residuals.last()?;
    let errs: Vec<f64> = iterates
        .iter()
        .zip(residuals)
        .filter(|(_, &w)| w > NOISE_MARGIN * last)
        .map(|(b, _)| (b - final_beta).norm())
        .collect();
    slope_of_last_three(&errs)
}

fn slope_of_last_three(v: &[f64]) -> Option<f64> {
    if v.len() < 3 || v.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let e = &v[v.len() - 3..];
    let dx = (e[1] / e[0]).ln();
    if dx == 0.0 {
        return None;
    }
    Some((e[2] / e[1]).ln() / dx)
}
