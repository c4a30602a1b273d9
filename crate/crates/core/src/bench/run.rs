//! Running single experiments and sweeps.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;

use super::config::{ProblemConfig, RunConfig, SolverConfig};
use super::metrics::{solution_metrics, MetricsRow};
use crate::error::{Error, Result};
use crate::geometry::EvaluationSet;
use crate::newton::{self, NewtonOutcome};
use crate::par::{self, Execution};
use crate::problems::guess::gaussian_vector;
use crate::problems::initial_guess;
use crate::system::{CollocationSystem, SystemOptions};
use crate::trust_region::{self, condition_number, SystemProvider};

/// Result of one run: the metrics row, the JSON-lines trace and whether the
/// solver reported success.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub row: MetricsRow,
    pub trace: String,
    pub success: bool,
}

#[derive(Serialize)]
struct NewtonTraceLine {
    k: usize,
    rms_rc: f64,
}

/// Runs `cfg`; relative paths in it resolve against `base`. Nothing is
/// written to disk here.
pub fn run(cfg: &RunConfig, base: &Path, exec: Execution) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let prob = cfg.problem.build(&cfg.pointset)?;
    let prob = prob.as_ref();
    let ps = cfg.pointset.build(prob, base)?;
    let kernel = cfg.kernel.spec(prob.dim())?;
    let eval = EvaluationSet::sample(&prob.domain(), cfg.n_eval, cfg.seed, &ps.nodes)?;
    let newton_cfg = cfg.solver.newton();
    let opts = SystemOptions {
        eliminate: cfg.solver.eliminates(),
        augment_constant: false,
        exec,
    };
    let sys = CollocationSystem::build(&kernel, &ps, prob, opts)?;
    let mut beta0 = initial_guess(cfg.guess.strategy, &sys, prob, &ps)?;
    if cfg.guess.perturbation > 0.0 {
        beta0 += gaussian_vector(beta0.len(), cfg.guess.perturbation_seed) * cfg.guess.perturbation;
    }
    let mut row = MetricsRow {
        name: cfg.name.clone(),
        problem: prob.name(),
        kernel: kernel.label(),
        method: cfg.solver.label(),
        n: ps.n_nodes(),
        shape: kernel.scale,
        ..Default::default()
    };
    let check_convexity = matches!(cfg.problem, ProblemConfig::MongeAmpere { .. });
    let mut trace = String::new();
    let (alpha, success) = match &cfg.solver {
        SolverConfig::TrustRegion { .. } => {
            let (tr, mode) = cfg.solver.trust_region().expect("trust-region config");
            let provider = SystemProvider { sys: &sys, prob, mode };
            let rep = trust_region::solve(&provider, &tr, &beta0)?;
            for rec in &rep.trace {
                writeln!(trace, "{}", serde_json::to_string(rec).expect("trace record serializes")).unwrap();
            }
            row.status = format!("{:?}", rep.reason).to_lowercase();
            row.mu_final = Some(rep.final_mu);
            row.cond_j = rep.cond_j_final;
            row.iterations = Some(rep.iterations());
            row.accepted = Some(rep.accepted());
            row.slope = rep.residual_slope();
            row.slope_err = rep.error_slope();
            if tr.trs.needs_hessian() || tr.scaling {
                let h = sys.merit_hessian(prob, &rep.final_beta)?;
                row.cond_h = Some(condition_number(&h));
            }
            (sys.alpha(&rep.final_beta), rep.converged)
        }
        SolverConfig::OperatorNewton { .. } => {
            let ncfg = newton_cfg.expect("newton config");
            let rep = newton::run(&sys, prob, &beta0, &ncfg);
            for (k, r) in rep.history.iter().enumerate() {
                let line = NewtonTraceLine { k, rms_rc: *r };
                writeln!(trace, "{}", serde_json::to_string(&line).expect("trace line serializes")).unwrap();
            }
            row.status = format!("{:?}", rep.outcome).to_lowercase();
            row.iterations = Some(rep.history.len());
            row.accepted = Some(rep.history.len());
            let w = sys.residual_alpha(prob, &rep.final_alpha);
            row.mu_final = w.as_ref().ok().map(|w| 0.5 * w.norm_squared());
            if let Ok(j) = sys.jacobian_alpha(prob, &rep.final_alpha) {
                row.cond_j = Some(condition_number(&j));
            }
            (rep.final_alpha.clone(), rep.outcome == NewtonOutcome::Converged)
        }
    };
    fill_metrics(&mut row, &sys, prob, &alpha, &eval, check_convexity, exec);
    row.wall_time_s = Some(start.elapsed().as_secs_f64());
    Ok(RunOutput { row, trace, success })
}

fn fill_metrics(
    row: &mut MetricsRow,
    sys: &CollocationSystem,
    prob: &dyn crate::problems::Problem,
    alpha: &DVector<f64>,
    eval: &EvaluationSet,
    check_convexity: bool,
    exec: Execution,
) {
    // A diverged iterate can overflow; the row still reports the solver status.
    match solution_metrics(sys, prob, alpha, eval, check_convexity, exec) {
        Ok(m) => {
            row.rms_eps = m.rms_eps;
            row.max_eps = m.max_eps;
            row.rms_r = Some(m.rms_r);
            row.max_r = Some(m.max_r);
            row.rms_rc = Some(m.rms_rc);
            row.convex = m.convex;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
}

/// A row for a run that failed before producing a solution.
pub fn error_row(cfg: &RunConfig, err: &Error) -> MetricsRow {
    MetricsRow {
        name: cfg.name.clone(),
        method: cfg.solver.label(),
        shape: cfg.kernel.scale,
        status: if err.is_config() { "config_error" } else { "error" }.into(),
        error: Some(err.to_string()),
        ..Default::default()
    }
}

/// Runs every config and returns the outputs in input order. Several runs
/// execute concurrently, each on a single thread; a lone run keeps the
/// data-parallel kernels.
pub fn sweep(cfgs: &[RunConfig], base: &Path) -> Vec<Result<RunOutput>> {
    let (outer, inner) = if cfgs.len() > 1 {
        (Execution::best(), Execution::Sequential)
    } else {
        (Execution::Sequential, Execution::best())
    };
    par::map_indexed(outer, cfgs.len(), |i| run(&cfgs[i], base, inner))
}

/// CSV text for a set of rows; wall time is blanked when `with_time` is off
/// so that reruns compare byte for byte. An empty set gives the header only.
pub fn to_csv(rows: &[MetricsRow], with_time: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        let mut r = r.clone();
        if !with_time {
            r.wall_time_s = None;
        }
        w.serialize(&r).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    let text = String::from_utf8(bytes).expect("csv is utf-8");
    if rows.is_empty() {
        return Ok(format!("{}\n", csv_header()));
    }
    Ok(text)
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Header line of the metrics CSV, without the newline.
pub fn csv_header() -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(MetricsRow::default()).expect("default row serializes");
    let bytes = w.into_inner().expect("in-memory writer");
    let text = String::from_utf8(bytes).expect("csv is utf-8");
    text.lines().next().unwrap_or_default().to_string()
}
