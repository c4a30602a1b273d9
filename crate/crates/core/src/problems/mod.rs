//! Problem definitions: the PDE residual per node with its first and second
//! partials in the differential components, boundary data, and the
//! linearization used by the operator-Newton baseline.

pub mod cubic;
pub mod guess;
pub mod hele_shaw;
pub mod linear;
pub mod monge_ampere;
pub mod plateau;

pub use cubic::CubicSemilinear;
pub use guess::{initial_guess, GuessStrategy};
pub use hele_shaw::HeleShaw;
pub use linear::LinearPoisson;
pub use monge_ampere::MongeAmpere;
pub use plateau::Plateau;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::kernels::DifferentialComponent;
use crate::system::enrichment::Enrichment;

/// A nonlinear elliptic BVP in the form the collocation system consumes.
///
/// `v` always holds the values of the components returned by
/// [`components`](Problem::components), in that order.
pub trait Problem: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn components(&self) -> &[DifferentialComponent];

    /// PDE residual `W` at a collocation node.
    fn residual(&self, x: &Point, v: &[f64]) -> f64;

    /// `dW/dD_m`, length `S`.
    fn d1(&self, x: &Point, v: &[f64], out: &mut [f64]);

    /// `d2W/dD_m dD_n`, row-major `S x S`, symmetric.
    fn d2(&self, x: &Point, v: &[f64], out: &mut [f64]);

    /// Index pairs `(m, n)`, `m <= n`, where `d2` can be nonzero.
    fn d2_pairs(&self) -> Vec<(usize, usize)> {
        let s = self.components().len();
        (0..s).flat_map(|m| (m..s).map(move |n| (m, n))).collect()
    }

    /// Dirichlet data `g`.
    fn dirichlet(&self, x: &Point) -> f64;

    /// Neumann data `dg/dn`.
    fn neumann(&self, _x: &Point) -> f64 {
        0.0
    }

    fn exact(&self, _x: &Point) -> Option<f64> {
        None
    }

    /// Domain used for evaluation sets.
    fn domain(&self) -> Domain;

    fn enrichment(&self) -> Vec<Enrichment> {
        Vec::new()
    }

    /// Coefficients of the linearized operator acting on the correction, one
    /// per component. This is a separate code path from [`d1`](Problem::d1).
    fn linearized(&self, _x: &Point, _v: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::Config(format!("{} has no linearized operator", self.name())))
    }

    /// Flux function of a quasilinear divergence-form operator, if any.
    fn flux(&self) -> Option<Flux> {
        None
    }

    /// Right-hand side of the linear problem used by the Poisson guess.
    fn poisson_rhs(&self, _x: &Point) -> f64 {
        0.0
    }
}

/// `G(t)` in `div(G(|grad u|) grad u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flux {
    /// `G = 1`
    Constant,
    /// `G = 1/sqrt(1 + t^2)`
    MinimalSurface,
    /// `G = t^(p-2)`
    PowerLaw { p: f64 },
}

impl Flux {
    /// `(G, G', G'')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        match *self {
            Flux::Constant => (1.0, 0.0, 0.0),
            Flux::MinimalSurface => {
                let s = 1.0 / (1.0 + t * t).sqrt();
                let s3 = s * s * s;
                (s, -t * s3, (2.0 * t * t - 1.0) * s3 * s * s)
            }
            Flux::PowerLaw { p } => {
                let e = p - 2.0;
                (t.powf(e), e * t.powf(e - 1.0), e * (e - 1.0) * t.powf(e - 2.0))
            }
        }
    }
}

/// Nodes where a linearization condition fails.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidityReport {
    /// `|G'(t)| <= 1/t^2` violated.
    pub linearization_violations: Vec<usize>,
    /// `B^2 - 4AC < 0` violated.
    pub ellipticity_violations: Vec<usize>,
    pub checked: usize,
}

impl ValidityReport {
    pub fn ok(&self) -> bool {
        self.linearization_violations.is_empty() && self.ellipticity_violations.is_empty()
    }
}

/// Evaluates both conditions for a quasilinear flux at the given gradients.
///
/// The expanded operator in 2D is `A u_xx + B u_xy + C u_yy` with
/// `A = G + G' u_x^2 / t`, `B = 2 G' u_x u_y / t`, `C = G + G' u_y^2 / t`.
pub fn check_linearization_validity(flux: Flux, gradients: &[[f64; 2]]) -> ValidityReport {
    let mut rep = ValidityReport {
        checked: gradients.len(),
        ..Default::default()
    };
    for (i, g) in gradients.iter().enumerate() {
        let t = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let (gg, g1, _) = flux.eval(t);
        if t > 0.0 && g1.abs() > 1.0 / (t * t) {
            rep.linearization_violations.push(i);
        }
        let (a, b, c) = if t > 0.0 {
            (gg + g1 * g[0] * g[0] / t, 2.0 * g1 * g[0] * g[1] / t, gg + g1 * g[1] * g[1] / t)
        } else {
            (gg, 0.0, gg)
        };
        if b * b - 4.0 * a * c >= 0.0 {
            rep.ellipticity_violations.push(i);
        }
    }
    rep
}

/// Quasilinear residual `W = P(q) lap u + Q(q) Inf u` with `q = |grad u|^2`
/// and `Inf u = u_x^2 u_xx + 2 u_x u_y u_xy + u_y^2 u_yy`, plus its partials.
///
/// Component layout: `[u_x, u_y, u_xx, u_xy, u_yy]` starting at `offset`.
pub(crate) struct QuasiTerms {
    /// `P, P', P''` as functions of `q`.
    pub p: [f64; 3],
    /// `Q, Q', Q''` as functions of `q`.
    pub q: [f64; 3],
}

impl QuasiTerms {
    pub fn residual(&self, v: &[f64]) -> f64 {
        let [ux, uy, uxx, uxy, uyy] = [v[0], v[1], v[2], v[3], v[4]];
        let lap = uxx + uyy;
        let inf = ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy;
        self.p[0] * lap + self.q[0] * inf
    }

    /// Fills a 5-vector of first partials and a 5x5 row-major block of
    /// second partials (either may be skipped).
    pub fn partials(&self, v: &[f64], d1: Option<&mut [f64]>, d2: Option<&mut [f64]>) {
        let [ux, uy, uxx, uxy, uyy] = [v[0], v[1], v[2], v[3], v[4]];
        let lap = uxx + uyy;
        let inf = ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy;
        let [p, p1, p2] = self.p;
        let [q, q1, q2] = self.q;
        let inf_x = 2.0 * (ux * uxx + uy * uxy);
        let inf_y = 2.0 * (uy * uyy + ux * uxy);
        let s1 = p1 * lap + q1 * inf;
        if let Some(d1) = d1 {
            d1[0] = 2.0 * ux * s1 + q * inf_x;
            d1[1] = 2.0 * uy * s1 + q * inf_y;
            d1[2] = p + q * ux * ux;
            d1[3] = 2.0 * q * ux * uy;
            d1[4] = p + q * uy * uy;
        }
        if let Some(d2) = d2 {
            let s2 = p2 * lap + q2 * inf;
            let mut set = |m: usize, n: usize, val: f64| {
                d2[m * 5 + n] = val;
                d2[n * 5 + m] = val;
            };
            set(0, 0, 4.0 * ux * ux * s2 + 4.0 * ux * q1 * inf_x + 2.0 * s1 + 2.0 * q * uxx);
            set(1, 1, 4.0 * uy * uy * s2 + 4.0 * uy * q1 * inf_y + 2.0 * s1 + 2.0 * q * uyy);
            set(
                0,
                1,
                4.0 * ux * uy * s2 + 2.0 * ux * q1 * inf_y + 2.0 * uy * q1 * inf_x + 2.0 * q * uxy,
            );
            set(0, 2, 2.0 * ux * (p1 + q1 * ux * ux) + 2.0 * q * ux);
            set(1, 2, 2.0 * uy * (p1 + q1 * ux * ux));
            set(0, 4, 2.0 * ux * (p1 + q1 * uy * uy));
            set(1, 4, 2.0 * uy * (p1 + q1 * uy * uy) + 2.0 * q * uy);
            set(0, 3, 4.0 * q1 * ux * ux * uy + 2.0 * q * uy);
            set(1, 3, 4.0 * q1 * ux * uy * uy + 2.0 * q * ux);
            for m in 2..5 {
                for n in 2..5 {
                    d2[m * 5 + n] = 0.0;
                }
            }
        }
    }
}

/// Finite-difference consistency of a problem's partials at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialsCheck {
    /// Max error of `d1` against central differences of `residual`,
    /// relative to `max(1, max |d1|)`.
    pub d1_error: f64,
    /// Same for `d2` against central differences of `d1`.
    pub d2_error: f64,
    pub symmetric: bool,
    /// Every nonzero of `d2` is listed in `d2_pairs`.
    pub pattern_ok: bool,
}

pub fn check_partials(prob: &dyn Problem, x: &Point, v: &[f64]) -> PartialsCheck {
    let s = v.len();
    let mut d1 = vec![0.0; s];
    let mut d2 = vec![0.0; s * s];
    prob.d1(x, v, &mut d1);
    prob.d2(x, v, &mut d2);
    let mut e1: f64 = 0.0;
    let mut e2: f64 = 0.0;
    let scale1 = d1.iter().fold(1.0f64, |m, a| m.max(a.abs()));
    let scale2 = d2.iter().fold(1.0f64, |m, a| m.max(a.abs()));
    for m in 0..s {
        let h = 1e-5 * (1.0 + v[m].abs());
        let mut vp = v.to_vec();
        let mut vm = v.to_vec();
        vp[m] += h;
        vm[m] -= h;
        let fd = (prob.residual(x, &vp) - prob.residual(x, &vm)) / (2.0 * h);
        e1 = e1.max((fd - d1[m]).abs() / scale1);
        let mut gp = vec![0.0; s];
        let mut gm = vec![0.0; s];
        prob.d1(x, &vp, &mut gp);
        prob.d1(x, &vm, &mut gm);
        for n in 0..s {
            let fd = (gp[n] - gm[n]) / (2.0 * h);
            e2 = e2.max((fd - d2[n * s + m]).abs() / scale2);
        }
    }
    let symmetric = (0..s).all(|m| (0..s).all(|n| d2[m * s + n] == d2[n * s + m]));
    let pairs = prob.d2_pairs();
    let pattern_ok = (0..s).all(|m| (m..s).all(|n| d2[m * s + n] == 0.0 || pairs.contains(&(m, n))));
    PartialsCheck {
        d1_error: e1,
        d2_error: e2,
        symmetric,
        pattern_ok,
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// `check_partials` that also asserts symmetry and the sparsity pattern.
    pub fn fd_check(prob: &dyn Problem, x: &Point, v: &[f64]) -> (f64, f64) {
        let c = check_partials(prob, x, v);
        assert!(c.symmetric, "d2 not symmetric");
        assert!(c.pattern_ok, "d2 nonzero outside d2_pairs");
        (c.d1_error, c.d2_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_derivatives_match_fd() {
        for flux in [Flux::MinimalSurface, Flux::PowerLaw { p: 2.6 }, Flux::Constant] {
            for &t in &[0.3, 1.0, 2.5] {
                let h = 1e-6;
                let (_, g1, g2) = flux.eval(t);
                let fd1 = (flux.eval(t + h).0 - flux.eval(t - h).0) / (2.0 * h);
                let fd2 = (flux.eval(t + h).1 - flux.eval(t - h).1) / (2.0 * h);
                assert!((g1 - fd1).abs() < 1e-8 && (g2 - fd2).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn minimal_surface_always_valid() {
        let grads: Vec<[f64; 2]> = (0..200)
            .map(|i| {
                let r = 10f64.powf(-3.0 + 7.0 * i as f64 / 199.0);
                [r * (i as f64).cos(), r * (i as f64).sin()]
            })
            .collect();
        let rep = check_linearization_validity(Flux::MinimalSurface, &grads);
        assert!(rep.ok());
        assert!(check_linearization_validity(Flux::Constant, &grads).ok());
    }

    #[test]
    fn power_law_breaks_above_threshold() {
        let p: f64 = 2.6;
        let threshold = (p - 2.0).powf(1.0 / (1.0 - p));
        assert!((threshold - 1.376).abs() < 1e-3);
        let grads = [[threshold * 0.99, 0.0], [0.0, threshold * 1.01], [0.5, 0.5]];
        let rep = check_linearization_validity(Flux::PowerLaw { p }, &grads);
        assert_eq!(rep.linearization_violations, vec![1]);
        assert!(rep.ellipticity_violations.is_empty());
    }
}
