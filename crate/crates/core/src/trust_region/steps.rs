//! Trust-region subproblem solvers for the model
//! `theta(g) = mu + grad^T g + g^T A g / 2` inside `||g|| <= delta`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{sorted_symmetric_eigen, PivotedQr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Full,
    Dogleg,
    Cauchy,
    Boundary2D,
    NearlyExact,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub gamma: DVector<f64>,
    pub kind: StepKind,
    /// `theta(0) - theta(gamma)` under the model matrix the method used.
    pub model_drop: f64,
    /// Lagrange multiplier, when the method computes one.
    pub lambda: Option<f64>,
    /// Whether `A` was found positive definite (Hessian methods only).
    pub hessian_pd: Option<bool>,
    /// The method fell back to the Cauchy step.
    pub fallback: bool,
}

/// `theta(0) - theta(gamma)` given `A gamma`.
fn drop_with(grad: &DVector<f64>, gamma: &DVector<f64>, a_gamma: &DVector<f64>) -> f64 {
    -(grad.dot(gamma) + 0.5 * gamma.dot(a_gamma))
}

/// `theta(0) - theta(gamma)` for a dense symmetric model matrix.
pub fn model_drop(grad: &DVector<f64>, a: &DMatrix<f64>, gamma: &DVector<f64>) -> f64 {
    drop_with(grad, gamma, &(a * gamma))
}

/// Cauchy step from the curvature `g^T A g`.
pub fn cauchy_from_curvature(grad: &DVector<f64>, gag: f64, delta: f64) -> DVector<f64> {
    let gn = grad.norm();
    let tau = if gag <= 0.0 {
        1.0
    } else {
        (gn * gn * gn / (delta * gag)).min(1.0)
    };
    grad * (-tau * delta / gn)
}

/// Minimizer of the model along steepest descent inside the region.
pub fn cauchy_step(grad: &DVector<f64>, a: &DMatrix<f64>, delta: f64) -> DVector<f64> {
    cauchy_from_curvature(grad, grad.dot(&(a * grad)), delta)
}

fn cauchy_with(grad: &DVector<f64>, a: &DMatrix<f64>, delta: f64, fallback: bool) -> Step {
    let gamma = cauchy_step(grad, a, delta);
    Step {
        model_drop: model_drop(grad, a, &gamma),
        gamma,
        kind: StepKind::Cauchy,
        lambda: None,
        hessian_pd: None,
        fallback,
    }
}

/// Dogleg step for `A = J^T J`, never forming `A`.
///
/// The full step solves `J^T J g = -grad` through a pivoted QR of `J`:
/// `R^T z = -P^T grad`, `R w = z`, `g = P w`.
pub fn dogleg_step(j: &DMatrix<f64>, grad: &DVector<f64>, delta: f64) -> Step {
    let n = grad.len();
    let jg = j * grad;
    let gag = jg.norm_squared();
    let cauchy = |fallback: bool| {
        let gamma = cauchy_from_curvature(grad, gag, delta);
        let jgam = j * &gamma;
        Step {
            model_drop: -(grad.dot(&gamma) + 0.5 * jgam.norm_squared()),
            gamma,
            kind: StepKind::Cauchy,
            lambda: None,
            hessian_pd: None,
            fallback,
        }
    };

    let qr = PivotedQr::new(j.clone());
    let d = qr.diag_abs();
    let singular = d.len() < n || d[n - 1] < n as f64 * f64::EPSILON * d[0] || d[0] == 0.0;
    if singular {
        return cauchy(true);
    }
    let perm = qr.perm();
    let pg: Vec<f64> = perm.iter().map(|&k| -grad[k]).collect();
    let z = qr.solve_rt(&pg, n);
    let w = qr.solve_r(&z, n);
    let mut full = DVector::zeros(n);
    for (k, &p) in perm.iter().enumerate() {
        full[p] = w[k];
    }
    if full.iter().any(|v| !v.is_finite()) {
        return cauchy(true);
    }
    let model = |gamma: DVector<f64>, kind| {
        let jgam = j * &gamma;
        Step {
            model_drop: -(grad.dot(&gamma) + 0.5 * jgam.norm_squared()),
            gamma,
            kind,
            lambda: None,
            hessian_pd: None,
            fallback: false,
        }
    };
    if full.norm() <= delta {
        return model(full, StepKind::Full);
    }
    let gn2 = grad.norm_squared();
    if gag == 0.0 {
        return model(grad * (-delta / gn2.sqrt()), StepKind::Dogleg);
    }
    let gu = grad * (-gn2 / gag);
    let gu_norm = gu.norm();
    if gu_norm >= delta {
        return model(gu * (delta / gu_norm), StepKind::Dogleg);
    }
    // ||gu + s (full - gu)||^2 = delta^2 for s in [0, 1]
    let d = &full - &gu;
    let a = d.norm_squared();
    let b = 2.0 * gu.dot(&d);
    let c = gu.norm_squared() - delta * delta;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    // c < 0, so the positive root is stable in this form
    let s = if b >= 0.0 { -2.0 * c / (b + disc) } else { (disc - b) / (2.0 * a) };
    model(gu + d * s.clamp(0.0, 1.0), StepKind::Dogleg)
}

/// Eigendecomposition of the model matrix with the gradient in its basis.
pub struct EigenModel {
    pub vals: DVector<f64>,
    pub vecs: DMatrix<f64>,
    pub g: DVector<f64>,
}

impl EigenModel {
    pub fn new(h: &DMatrix<f64>, grad: &DVector<f64>) -> Self {
        let (vals, vecs) = sorted_symmetric_eigen(h);
        let g = vecs.tr_mul(grad);
        EigenModel { vals, vecs, g }
    }

    fn coeffs(&self, lambda: f64) -> DVector<f64> {
        DVector::from_fn(self.g.len(), |i, _| -self.g[i] / (self.vals[i] + lambda))
    }

    fn norm_at(&self, lambda: f64) -> f64 {
        self.coeffs(lambda).norm()
    }
}

/// Moré-Sorensen nearly exact solution through the eigendecomposition of `H`.
pub fn nearly_exact_step(h: &DMatrix<f64>, grad: &DVector<f64>, delta: f64) -> Step {
    let em = EigenModel::new(h, grad);
    nearly_exact_eigen(&em, h, grad, delta)
}

pub(crate) fn nearly_exact_eigen(em: &EigenModel, h: &DMatrix<f64>, grad: &DVector<f64>, delta: f64) -> Step {
    let n = grad.len();
    let l1 = em.vals[0];
    let scale = em.vals.amax().max(f64::MIN_POSITIVE);
    let finish = |coef: DVector<f64>, lambda: f64, kind| {
        let gamma = &em.vecs * coef;
        Step {
            model_drop: model_drop(grad, h, &gamma),
            gamma,
            kind,
            lambda: Some(lambda),
            hessian_pd: Some(l1 > 0.0),
            fallback: false,
        }
    };

    if l1 > 0.0 {
        let c = em.coeffs(0.0);
        if c.norm() <= delta {
            return finish(c, 0.0, StepKind::Full);
        }
    }

    let lo0 = (-l1).max(0.0);
    // Hard case: gradient (numerically) orthogonal to the lowest eigenspace
    // and the step at lambda = -l1 stays inside the region.
    let cluster: Vec<usize> = (0..n).filter(|&i| em.vals[i] - l1 <= 1e-12 * scale).collect();
    let gnorm = em.g.norm();
    let g_low = cluster.iter().map(|&i| em.g[i] * em.g[i]).sum::<f64>().sqrt();
    if l1 <= 0.0 && g_low <= 1e-12 * gnorm {
        let mut c = DVector::zeros(n);
        for i in 0..n {
            if !cluster.contains(&i) {
                c[i] = -em.g[i] / (em.vals[i] - l1);
            }
        }
        let cn = c.norm();
        if cn <= delta {
            let t = (delta * delta - cn * cn).max(0.0).sqrt();
            // both signs give the same model value; pick a descent-compatible one
            let q = cluster[0];
            let sign = if em.g[q] > 0.0 { -1.0 } else { 1.0 };
            c[q] += sign * t;
            return finish(c, -l1, StepKind::NearlyExact);
        }
    }

    // Safeguarded Newton on 1/||g(lambda)|| - 1/delta.
    let mut lo = lo0;
    let mut hi = gnorm / delta - l1.min(0.0) + scale * 1e-15 + lo0.max(f64::MIN_POSITIVE);
    while em.norm_at(hi) > delta {
        hi *= 2.0;
    }
    let mut lambda = hi;
    for _ in 0..200 {
        let c = em.coeffs(lambda);
        let nrm = c.norm();
        if (nrm - delta).abs() <= 1e-13 * delta {
            break;
        }
        if nrm > delta {
            lo = lo.max(lambda);
        } else {
            hi = hi.min(lambda);
        }
        // phi = 1/nrm - 1/delta, phi' = sum c_i^2 / (l_i + lambda) / nrm^3
        let s: f64 = (0..n).map(|i| c[i] * c[i] / (em.vals[i] + lambda)).sum();
        let phi = 1.0 / nrm - 1.0 / delta;
        let dphi = s / (nrm * nrm * nrm);
        let mut next = lambda - phi / dphi;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if next == lambda {
            break;
        }
        lambda = next;
        if hi - lo <= 1e-15 * hi.abs() {
            break;
        }
    }
    finish(em.coeffs(lambda), lambda, StepKind::NearlyExact)
}

/// Two-dimensional subspace approximation (Byrd-Schnabel-Shultz).
///
/// `eig_tol` is relative to the largest eigenvalue magnitude of `H`.
pub fn twod_subspace_step(h: &DMatrix<f64>, grad: &DVector<f64>, delta: f64, eig_tol: f64) -> Step {
    let em = EigenModel::new(h, grad);
    let nu = em.vals[0];
    let tol = eig_tol * em.vals.amax();
    let pd = Some(nu > 0.0);
    let mut cauchy = cauchy_with(grad, h, delta, false);
    cauchy.hessian_pd = pd;

    let other = if nu > tol {
        let full = &em.vecs * em.coeffs(0.0);
        if full.norm() <= delta {
            let model_drop = model_drop(grad, h, &full);
            return Step {
                gamma: full,
                kind: StepKind::Full,
                model_drop,
                lambda: Some(0.0),
                hessian_pd: pd,
                fallback: false,
            };
        }
        full
    } else if nu.abs() <= tol {
        return cauchy;
    } else {
        // shift past the lowest eigenvalue so that H - shift I > 0
        let shift = 1.5 * nu;
        let p = &em.vecs * em.coeffs(-shift);
        let pn = p.norm();
        if pn <= delta {
            let mut q = em.vecs.column(0).into_owned();
            if q.dot(grad) > 0.0 {
                q = -q;
            }
            let pq = p.dot(&q);
            let v = -pq + (pq * pq + delta * delta - pn * pn).max(0.0).sqrt();
            let gamma = p + q * v;
            let drop = model_drop(grad, h, &gamma);
            if drop >= cauchy.model_drop {
                return Step {
                    gamma,
                    kind: StepKind::Boundary2D,
                    model_drop: drop,
                    lambda: None,
                    hessian_pd: pd,
                    fallback: false,
                };
            }
            cauchy.fallback = true;
            return cauchy;
        }
        p
    };
    let mut step = subspace_minimizer(h, grad, &other, delta).unwrap_or(cauchy);
    step.hessian_pd = pd;
    step
}

/// Exact TRS minimizer over `span[grad, other]`.
fn subspace_minimizer(h: &DMatrix<f64>, grad: &DVector<f64>, other: &DVector<f64>, delta: f64) -> Option<Step> {
    let gn = grad.norm();
    let s1 = grad / gn;
    let mut s2 = other - &s1 * s1.dot(other);
    let n2 = s2.norm();
    if !(n2 > 1e-12 * other.norm()) {
        return None;
    }
    s2 /= n2;
    let hs1 = h * &s1;
    let hs2 = h * &s2;
    let a12 = 0.5 * (s1.dot(&hs2) + s2.dot(&hs1));
    let a = DMatrix::from_row_slice(2, 2, &[s1.dot(&hs1), a12, a12, s2.dot(&hs2)]);
    let g2 = DVector::from_vec(vec![gn, s2.dot(grad)]);
    let sub = nearly_exact_step(&a, &g2, delta);
    let gamma = &s1 * sub.gamma[0] + &s2 * sub.gamma[1];
    let drop = model_drop(grad, h, &gamma);
    Some(Step {
        gamma,
        kind: if sub.kind == StepKind::Full { StepKind::Full } else { StepKind::Boundary2D },
        model_drop: drop,
        lambda: sub.lambda,
        hessian_pd: None,
        fallback: false,
    })
}

/// `rho = (mu_old - mu_new) / model_drop`; a non-finite trial gives `-inf`.
pub fn trust_ratio(mu_old: f64, mu_new: f64, model_drop: f64) -> f64 {
    if !mu_new.is_finite() {
        return f64::NEG_INFINITY;
    }
    (mu_old - mu_new) / model_drop
}
