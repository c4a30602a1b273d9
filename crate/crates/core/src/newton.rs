//! Operator-Newton baseline: at every iterate, collocate the linearized
//! operator on the correction, solve by LU and update the full coefficients.
//! No residual smoothing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::problems::Problem;
use crate::system::CollocationSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub max_iter: usize,
    /// Stop once `RMS(R_c)` falls below this.
    pub tol: f64,
    /// Report convergence when the best `RMS(R_c)` is below this.
    pub accept: f64,
    /// Divergence when `RMS(R_c)` exceeds this multiple of its initial value.
    pub divergence_factor: f64,
    /// Stop after this many iterations without a new best residual, once
    /// the residual has dropped below its initial value.
    pub patience: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iter: 100,
            tol: 1e-15,
            accept: 1e-12,
            divergence_factor: 1e6,
            patience: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonOutcome {
    Converged,
    Diverged,
    Singular,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    /// `RMS(R_c)` at every iterate, starting with the initial one.
    pub history: Vec<f64>,
    pub final_alpha: DVector<f64>,
    pub outcome: NewtonOutcome,
}

fn rms(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        (v.norm_squared() / v.len() as f64).sqrt()
    }
}

/// `[L_u phi]` over all rows: linearized PDE rows followed by the linear rows.
pub fn linearized_matrix(sys: &CollocationSystem, prob: &dyn Problem, alpha: &DVector<f64>) -> Result<DMatrix<f64>> {
    let vals: Vec<DVector<f64>> = sys.full.iter().map(|m| m * alpha).collect();
    let s = sys.components.len();
    let coefs = par::try_map_indexed(sys.exec, sys.n_pde_rows(), |i| {
        let v: Vec<f64> = vals.iter().map(|c| c[i]).collect();
        let mut c = vec![0.0; s];
        prob.linearized(&sys.pde_points[i], &v, &mut c)?;
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::Evaluation {
                row: i,
                node: sys.pde_nodes[i],
                what: "linearized coefficients",
            });
        }
        Ok(c)
    })?;
    let np = sys.n_pde_rows();
    let n = sys.n_coefficients();
    let mut l = DMatrix::zeros(np + sys.b.nrows(), n);
    for i in 0..np {
        for (m, d) in sys.full.iter().enumerate() {
            let c = coefs[i][m];
            if c == 0.0 {
                continue;
            }
            for j in 0..n {
                l[(i, j)] += c * d[(i, j)];
            }
        }
    }
    l.view_mut((np, 0), (sys.b.nrows(), n)).copy_from(&sys.b);
    Ok(l)
}

/// One update `alpha + gamma` with `[L phi] gamma = -R`. Returns the new
/// coefficients and the residual at the old ones.
pub fn newton_iterate(
    sys: &CollocationSystem,
    prob: &dyn Problem,
    alpha: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let r = sys.residual_alpha(prob, alpha)?;
    let l = linearized_matrix(sys, prob, alpha)?;
    let gamma = l
        .lu()
        .solve(&(-&r))
        .filter(|g| g.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("linearized collocation matrix".into()))?;
    Ok((alpha + gamma, r))
}

/// Iterates operator-Newton from `alpha0` (full coefficient space).
pub fn run(sys: &CollocationSystem, prob: &dyn Problem, alpha0: &DVector<f64>, cfg: &NewtonConfig) -> NewtonReport {
    let mut alpha = alpha0.clone();
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let outcome = loop {
        let (next, r) = match newton_iterate(sys, prob, &alpha) {
            Ok(x) => x,
            Err(Error::Singular(_)) => break NewtonOutcome::Singular,
            Err(_) => {
                history.push(f64::INFINITY);
                break NewtonOutcome::Diverged;
            }
        };
        let res = rms(&r);
        history.push(res);
        if !res.is_finite() || res > cfg.divergence_factor * history[0] {
            break NewtonOutcome::Diverged;
        }
        if res < best {
            best = res;
            since_best = 0;
        } else if best < history[0] {
            // Only a run that has made progress can be sitting on a noise
            // floor; one that never improved is left to diverge or run out.
            since_best += 1;
        }
        if res <= cfg.tol || since_best >= cfg.patience || history.len() > cfg.max_iter {
            break if best <= cfg.accept {
                NewtonOutcome::Converged
            } else {
                NewtonOutcome::MaxIter
            };
        }
        alpha = next;
    };
    NewtonReport {
        history,
        final_alpha: alpha,
        outcome,
    }
}

/// `max |[L phi] - J| / max |J|` over the nonlinear rows at `alpha`.
pub fn check_newton_equivalence(sys: &CollocationSystem, prob: &dyn Problem, alpha: &DVector<f64>) -> Result<f64> {
    let l = linearized_matrix(sys, prob, alpha)?;
    let j = sys.jacobian_alpha(prob, alpha)?;
    let np = sys.n_pde_rows();
    let lr = l.rows(0, np);
    let jr = j.rows(0, np);
    Ok((lr - jr).amax() / jr.amax().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_disc, generate_grid, GridDomain};
    use crate::kernels::KernelSpec;
    use crate::problems::guess::gaussian_vector;
    use crate::problems::{CubicSemilinear, LinearPoisson, MongeAmpere, Plateau};
    use crate::system::SystemOptions;

    fn full_opts() -> SystemOptions {
        SystemOptions {
            eliminate: false,
            ..Default::default()
        }
    }

    #[test]
    fn linear_problem_converges_in_one_step() {
        let ps = generate_grid(GridDomain::UnitSquare, 8).unwrap();
        let k = KernelSpec::imq(0.4, 2).unwrap();
        let p = LinearPoisson::new(2, crate::geometry::Domain::unit_square(), |x| x[0] * x[1], |x| x[0]);
        let sys = CollocationSystem::build(&k, &ps, &p, full_opts()).unwrap();
        let a0 = gaussian_vector(sys.n_coefficients(), 1);
        let (a1, _) = newton_iterate(&sys, &p, &a0).unwrap();
        let r = sys.residual_alpha(&p, &a1).unwrap();
        assert!(r.amax() < 1e-8, "{}", r.amax());
        assert!(check_newton_equivalence(&sys, &p, &a0).unwrap() == 0.0);
    }

    #[test]
    fn equivalence_with_analytic_jacobian() {
        let grid = generate_grid(GridDomain::UnitSquare, 7).unwrap();
        let disc = generate_disc(1.0, 40, 16, 3).unwrap();
        let cube = generate_grid(GridDomain::UnitCube, 4).unwrap();
        let cubic = CubicSemilinear;
        let plateau = Plateau::new(0.57).unwrap();
        let ma = MongeAmpere::new(3).unwrap();
        let cases: Vec<(&dyn Problem, _, KernelSpec)> = vec![
            (&cubic, &grid, KernelSpec::wc4(0.6, 2).unwrap()),
            (&plateau, &disc, KernelSpec::imq(0.6, 2).unwrap()),
            (&ma, &cube, KernelSpec::mq(0.5, 3).unwrap()),
        ];
        for (p, ps, k) in cases {
            let sys = CollocationSystem::build(&k, ps, p, full_opts()).unwrap();
            let a = gaussian_vector(sys.n_coefficients(), 5) * 0.1;
            assert!(check_newton_equivalence(&sys, p, &a).unwrap() <= 1e-10, "{}", p.name());
        }
    }

    #[test]
    fn cubic_converges_quadratically() {
        let ps = generate_grid(GridDomain::UnitSquare, 10).unwrap();
        let k = KernelSpec::wc4(0.5, 2).unwrap();
        let sys = CollocationSystem::build(&k, &ps, &CubicSemilinear, full_opts()).unwrap();
        let rep = run(&sys, &CubicSemilinear, &DVector::zeros(sys.n_coefficients()), &NewtonConfig::default());
        assert_eq!(rep.outcome, NewtonOutcome::Converged, "{:?}", rep.history);
    }

    #[test]
    fn detects_divergence() {
        let ps = generate_grid(GridDomain::UnitSquare, 8).unwrap();
        let k = KernelSpec::wc4(0.5, 2).unwrap();
        let sys = CollocationSystem::build(&k, &ps, &CubicSemilinear, full_opts()).unwrap();
        let a0 = gaussian_vector(sys.n_coefficients(), 2);
        // any growth beyond half the initial residual counts as divergence here
        let rep = run(&sys, &CubicSemilinear, &a0, &NewtonConfig { divergence_factor: 0.5, ..Default::default() });
        assert_eq!(rep.outcome, NewtonOutcome::Diverged);
        assert_eq!(rep.history.len(), 1);
    }
}
