//! Finite-difference Jacobians and Hessians.
//!
//! Used as test oracles and, with [`FdScheme::Forward`], as the degraded
//! baseline that mimics a solver without analytic derivatives.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CollocationSystem;
use crate::error::Result;
use crate::par;
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FdScheme {
    /// `h = sqrt(eps) (1 + |beta_j|)`, first order.
    Forward,
    /// `h = eps^(1/3) (1 + |beta_j|)`, second order.
    #[default]
    Central,
    /// Central differences at `h` and `h/2` combined to fourth order.
    Richardson,
}

fn central_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + x.abs())
}

/// Column-wise finite differences of `f: R^n -> R^m` at `x`.
pub fn fd_matrix<F>(f: F, x: &DVector<f64>, scheme: FdScheme, exec: par::Execution) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Sync + Send,
{
    let n = x.len();
    let base = match scheme {
        FdScheme::Forward => Some(f(x)?),
        _ => None,
    };
    let shifted = |j: usize, h: f64| -> Result<DVector<f64>> {
        let mut y = x.clone();
        y[j] += h;
        f(&y)
    };
    let cols = par::try_map_indexed(exec, n, |j| -> Result<DVector<f64>> {
        match scheme {
            FdScheme::Forward => {
                let h = f64::EPSILON.sqrt() * (1.0 + x[j].abs());
                let h = (x[j] + h) - x[j];
                Ok((shifted(j, h)? - base.as_ref().unwrap()) / h)
            }
            FdScheme::Central => {
                let h = central_step(x[j]);
                Ok((shifted(j, h)? - shifted(j, -h)?) / (2.0 * h))
            }
            FdScheme::Richardson => {
                let h = 4.0 * central_step(x[j]);
                let d1 = (shifted(j, h)? - shifted(j, -h)?) / (2.0 * h);
                let d2 = (shifted(j, h / 2.0)? - shifted(j, -h / 2.0)?) / h;
                Ok((d2 * 4.0 - d1) / 3.0)
            }
        }
    })?;
    let m = cols.first().map_or(0, |c| c.len());
    let mut out = DMatrix::zeros(m, n);
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    Ok(out)
}

/// Finite-difference Jacobian of the residual.
pub fn fd_jacobian(
    sys: &CollocationSystem,
    prob: &dyn Problem,
    beta: &DVector<f64>,
    scheme: FdScheme,
) -> Result<DMatrix<f64>> {
    fd_matrix(|b| sys.residual(prob, b), beta, scheme, sys.exec)
}

/// Finite differences of the analytic gradient `J^T W`, symmetrized.
pub fn fd_hessian(
    sys: &CollocationSystem,
    prob: &dyn Problem,
    beta: &DVector<f64>,
    scheme: FdScheme,
) -> Result<DMatrix<f64>> {
    let h = fd_matrix(|b| Ok(sys.merit_and_grad(prob, b)?.1), beta, scheme, sys.exec)?;
    Ok((&h + h.transpose()) * 0.5)
}

/// Max entry error relative to the largest entry of `exact`.
pub fn max_relative_error(approx: &DMatrix<f64>, exact: &DMatrix<f64>) -> f64 {
    let scale = exact.amax().max(f64::MIN_POSITIVE);
    (approx - exact).amax() / scale
}
