//! Finite-difference validation of the analytic derivatives.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{generate_disc, generate_grid, generate_mold, GridDomain, MoldSpec, Pointset};
use crate::kernels::KernelSpec;
use crate::par::Execution;
use crate::problems::guess::gaussian_vector;
use crate::problems::{check_partials, CubicSemilinear, HeleShaw, MongeAmpere, Plateau, Problem};
use crate::system::fd::{fd_hessian, max_relative_error};
use crate::system::{fd_jacobian, CollocationSystem, FdScheme, SystemOptions};

pub const JACOBIAN_TOL: f64 = 1e-6;
pub const HESSIAN_TOL: f64 = 1e-5;
/// Relative to the Frobenius norm of `H`.
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const PARTIALS_D1_TOL: f64 = 1e-6;
pub const PARTIALS_D2_TOL: f64 = 1e-5;

pub const PROBLEM_IDS: [&str; 5] = ["cubic", "plateau", "hele_shaw", "monge_ampere_2d", "monge_ampere_3d"];

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub problem: String,
    pub n_nodes: usize,
    pub jacobian_error: f64,
    pub hessian_error: f64,
    pub symmetry_error: f64,
    pub d1_error: f64,
    pub d2_error: f64,
    pub pattern_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.jacobian_error <= JACOBIAN_TOL
            && self.hessian_error <= HESSIAN_TOL
            && self.symmetry_error <= SYMMETRY_TOL
            && self.d1_error <= PARTIALS_D1_TOL
            && self.d2_error <= PARTIALS_D2_TOL
            && self.pattern_ok
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem {} on {} nodes", self.problem, self.n_nodes)?;
        writeln!(f, "  J  vs FD           {:.3e} (tol {JACOBIAN_TOL:e})", self.jacobian_error)?;
        writeln!(f, "  H  vs FD of grad   {:.3e} (tol {HESSIAN_TOL:e})", self.hessian_error)?;
        writeln!(f, "  H  asymmetry       {:.3e} (tol {SYMMETRY_TOL:e})", self.symmetry_error)?;
        writeln!(f, "  d1 vs FD           {:.3e} (tol {PARTIALS_D1_TOL:e})", self.d1_error)?;
        writeln!(f, "  d2 vs FD           {:.3e} (tol {PARTIALS_D2_TOL:e})", self.d2_error)?;
        writeln!(f, "  d2 sparsity        {}", if self.pattern_ok { "ok" } else { "violated" })?;
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// A small instance of each catalog problem.
pub fn small_instance(id: &str) -> Result<(Box<dyn Problem>, Pointset, KernelSpec)> {
    Ok(match id {
        "cubic" => (
            Box::new(CubicSemilinear::new()),
            generate_grid(GridDomain::UnitSquare, 12)?,
            KernelSpec::mq(0.3, 2)?,
        ),
        "plateau" => {
            let p = Plateau::new(0.1)?;
            let ps = generate_disc(p.radius, 110, 40, 1)?;
            (Box::new(p), ps, KernelSpec::matern(11, 0.3, 2)?.normalized(true))
        }
        "hele_shaw" => {
            let mold = MoldSpec {
                boundary_spacing: 0.45,
                n_interior: 100,
                ..Default::default()
            };
            (Box::new(HeleShaw::new(0.6, mold, 2)?), generate_mold(&mold)?, KernelSpec::imq(1.5, 2)?)
        }
        "monge_ampere_2d" => (
            Box::new(MongeAmpere::new(2)?),
            generate_grid(GridDomain::UnitSquare, 12)?,
            KernelSpec::mq(0.3, 2)?,
        ),
        "monge_ampere_3d" => (
            Box::new(MongeAmpere::new(3)?),
            generate_grid(GridDomain::UnitCube, 5)?,
            KernelSpec::mq(0.5, 3)?,
        ),
        _ => {
            return Err(Error::Config(format!(
                "unknown problem '{id}', expected one of {}",
                PROBLEM_IDS.join(", ")
            )))
        }
    })
}

/// Checks J, H and the pointwise partials of `id` against finite
/// differences at a seeded random iterate.
pub fn validate(id: &str, seed: u64) -> Result<ValidationReport> {
    let (prob, ps, kernel) = small_instance(id)?;
    let prob = prob.as_ref();
    let sys = CollocationSystem::build(
        &kernel,
        &ps,
        prob,
        SystemOptions {
            exec: Execution::best(),
            ..Default::default()
        },
    )?;
    let beta = sys.beta_from_alpha(&(gaussian_vector(sys.n_coefficients(), seed) * 0.05));
    let j = sys.jacobian(prob, &beta)?;
    let fdj = fd_jacobian(&sys, prob, &beta, FdScheme::Richardson)?;
    let raw = sys.merit_hessian_raw(prob, &beta)?;
    let h = sys.merit_hessian(prob, &beta)?;
    let fdh = fd_hessian(&sys, prob, &beta, FdScheme::Richardson)?;

    // Pointwise partials at the component values of the iterate.
    let alpha = sys.alpha(&beta);
    let vals = sys
        .interpolant(&alpha)
        .eval_many(prob.components(), &sys.pde_points, Execution::best())?;
    let (mut d1, mut d2, mut pattern_ok) = (0.0f64, 0.0f64, true);
    for (x, v) in sys.pde_points.iter().zip(&vals).step_by(7) {
        let c = check_partials(prob, x, v);
        d1 = d1.max(c.d1_error);
        d2 = d2.max(c.d2_error);
        pattern_ok &= c.symmetric && c.pattern_ok;
    }
    Ok(ValidationReport {
        problem: prob.name(),
        n_nodes: ps.n_nodes(),
        jacobian_error: max_relative_error(&fdj, &j),
        hessian_error: max_relative_error(&fdh, &h),
        symmetry_error: (&raw - raw.transpose()).amax() / raw.norm().max(f64::MIN_POSITIVE),
        d1_error: d1,
        d2_error: d2,
        pattern_ok,
    })
}
