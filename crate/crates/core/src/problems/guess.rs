//! Initial iterates for the nonlinear solve.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LinearPoisson, Problem};
use crate::error::{Error, Result};
use crate::geometry::Pointset;
use crate::system::{CollocationSystem, SystemOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuessStrategy {
    Zero,
    GaussianRandom { seed: u64 },
    /// Solution of the Laplace equation with the same boundary data.
    Laplacian,
    /// Solution of `lap u = prob.poisson_rhs` with the same boundary data.
    Poisson,
}

/// `n` i.i.d. standard normal values from a seeded stream.
pub fn gaussian_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)))
}

/// Full coefficient vector of the linear companion problem, solved on the
/// same centres and enrichment as `sys`.
pub fn linear_solution(
    sys: &CollocationSystem,
    prob: &dyn Problem,
    ps: &Pointset,
    with_source: bool,
) -> Result<DVector<f64>> {
    let lin = LinearPoisson::companion(prob, with_source).with_enrichment(sys.enrichment.clone());
    let opts = SystemOptions {
        eliminate: false,
        augment_constant: false,
        exec: sys.exec,
    };
    let lsys = CollocationSystem::build(&sys.kernel, ps, &lin, opts)?;
    let zero = DVector::zeros(lsys.n_coefficients());
    let w0 = lsys.residual_alpha(&lin, &zero)?;
    let j = lsys.jacobian_alpha(&lin, &zero)?;
    let alpha = j
        .lu()
        .solve(&(-w0))
        .ok_or_else(|| Error::Singular("linear guess collocation matrix".into()))?;
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("linear guess collocation matrix".into()));
    }
    Ok(alpha)
}

/// Initial solver variables for `sys`.
pub fn initial_guess(
    strategy: GuessStrategy,
    sys: &CollocationSystem,
    prob: &dyn Problem,
    ps: &Pointset,
) -> Result<DVector<f64>> {
    let n = sys.n_vars();
    match strategy {
        GuessStrategy::Zero => Ok(DVector::zeros(n)),
        GuessStrategy::GaussianRandom { seed } => Ok(gaussian_vector(n, seed)),
        GuessStrategy::Laplacian => Ok(sys.beta_from_alpha(&linear_solution(sys, prob, ps, false)?)),
        GuessStrategy::Poisson => Ok(sys.beta_from_alpha(&linear_solution(sys, prob, ps, true)?)),
    }
}
