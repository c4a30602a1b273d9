//! Frozen-time Hele-Shaw pressure problem: `div(|grad u|^(p-2) grad u) = 0`
//! in a mold with `u = 1` on the injection slit, `u = 0` on the front and
//! `du/dn = 0` on the walls.
//!
//! Expanded, `W = q^a lap u + (p-2) q^(a-1) Inf u` with `q = |grad u|^2`
//! and `a = (p-2)/2`.

use super::{Flux, Problem, QuasiTerms};
use crate::error::{Error, Result};
use crate::geometry::{Domain, MoldSpec, Point};
use crate::kernels::DifferentialComponent as D;
use crate::system::enrichment::{motz_enrichment, Enrichment};

const COMPONENTS: [D; 5] = [
    D::FirstPartial(0),
    D::FirstPartial(1),
    D::SecondPartial(0, 0),
    D::SecondPartial(0, 1),
    D::SecondPartial(1, 1),
];

/// Floor on `|grad u|` inside the power-law terms.
pub const GRADIENT_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct HeleShaw {
    pub gamma: f64,
    pub mold: MoldSpec,
    /// Motz functions per slit endpoint.
    pub motz_per_corner: u32,
}

impl HeleShaw {
    pub fn new(gamma: f64, mold: MoldSpec, motz_per_corner: u32) -> Result<Self> {
        if !(gamma > -1.0) {
            return Err(Error::Domain(format!("Hele-Shaw needs gamma > -1, got {gamma}")));
        }
        Ok(HeleShaw {
            gamma,
            mold,
            motz_per_corner,
        })
    }

    pub fn p(&self) -> f64 {
        self.gamma + 2.0
    }

    fn terms(&self, v: &[f64]) -> QuasiTerms {
        let e = self.p() - 2.0;
        let a = e / 2.0;
        let q_raw = v[0] * v[0] + v[1] * v[1];
        let floor = GRADIENT_GUARD * GRADIENT_GUARD;
        if q_raw < floor {
            // Constant extension below the guard.
            return QuasiTerms {
                p: [floor.powf(a), 0.0, 0.0],
                q: [e * floor.powf(a - 1.0), 0.0, 0.0],
            };
        }
        let q = q_raw;
        QuasiTerms {
            p: [q.powf(a), a * q.powf(a - 1.0), a * (a - 1.0) * q.powf(a - 2.0)],
            q: [
                e * q.powf(a - 1.0),
                e * (a - 1.0) * q.powf(a - 2.0),
                e * (a - 1.0) * (a - 2.0) * q.powf(a - 3.0),
            ],
        }
    }
}

impl Problem for HeleShaw {
    fn name(&self) -> String {
        format!("hele_shaw(gamma={}, motz={})", self.gamma, self.motz_per_corner)
    }

    fn dim(&self) -> usize {
        2
    }

    fn components(&self) -> &[D] {
        &COMPONENTS
    }

    fn residual(&self, _x: &Point, v: &[f64]) -> f64 {
        self.terms(v).residual(v)
    }

    fn d1(&self, _x: &Point, v: &[f64], out: &mut [f64]) {
        self.terms(v).partials(v, Some(out), None);
    }

    fn d2(&self, _x: &Point, v: &[f64], out: &mut [f64]) {
        self.terms(v).partials(v, None, Some(out));
    }

    fn d2_pairs(&self) -> Vec<(usize, usize)> {
        vec![(0, 0), (0, 1), (1, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)]
    }

    fn dirichlet(&self, x: &Point) -> f64 {
        if self.mold.on_inlet(x) {
            1.0
        } else {
            0.0
        }
    }

    fn domain(&self) -> Domain {
        self.mold.domain()
    }

    fn enrichment(&self) -> Vec<Enrichment> {
        let [lo, hi] = self.mold.singular_points();
        let k = self.motz_per_corner;
        let mut out = motz_enrichment(k, lo, -std::f64::consts::FRAC_PI_2, 1.0);
        out.extend(motz_enrichment(k, hi, std::f64::consts::FRAC_PI_2, -1.0));
        out
    }

    /// `A v_xx + B v_xy + C v_yy + D v_x + E v_y` from the flux `G(t)`.
    fn linearized(&self, _x: &Point, v: &[f64], out: &mut [f64]) -> Result<()> {
        quasilinear_coefficients(Flux::PowerLaw { p: self.p() }, v, out);
        Ok(())
    }

    fn flux(&self) -> Option<Flux> {
        Some(Flux::PowerLaw { p: self.p() })
    }
}

/// Linearized coefficients of `G lap u + G'/t Inf u` over the layout
/// `[u_x, u_y, u_xx, u_xy, u_yy]`.
pub fn quasilinear_coefficients(flux: Flux, v: &[f64], out: &mut [f64]) {
    let (ux, uy) = (v[0], v[1]);
    let hess = [v[2], v[3], v[4]];
    let t_raw = (ux * ux + uy * uy).sqrt();
    let guarded = t_raw < GRADIENT_GUARD;
    let t = t_raw.max(GRADIENT_GUARD);
    let (g, g1, g2) = flux.eval(t);
    let h = g1 / t;
    out[2] = g + h * ux * ux;
    out[3] = 2.0 * h * ux * uy;
    out[4] = g + h * uy * uy;
    if guarded {
        // Coefficients are frozen below the guard.
        out[0] = 2.0 * h * (ux * hess[0] + uy * hess[1]);
        out[1] = 2.0 * h * (uy * hess[2] + ux * hess[1]);
        return;
    }
    let h1 = (g2 * t - g1) / (t * t);
    for (axis, (a, b)) in [(ux, uy), (uy, ux)].into_iter().enumerate() {
        // derivatives of (coef of u_aa, u_ab, u_bb) with respect to u_a
        let dt = a / t;
        let d_aa = g1 * dt + h1 * dt * a * a + 2.0 * h * a;
        let d_ab = 2.0 * h1 * dt * a * b + 2.0 * h * b;
        let d_bb = g1 * dt + h1 * dt * b * b;
        let (haa, hbb) = if axis == 0 { (hess[0], hess[2]) } else { (hess[2], hess[0]) };
        out[axis] = d_aa * haa + d_ab * hess[1] + d_bb * hbb;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::testing::fd_check;

    fn problem() -> HeleShaw {
        HeleShaw::new(0.6, MoldSpec::default(), 2).unwrap()
    }

    #[test]
    fn one_dimensional_reduction() {
        let hs = problem();
        let p = hs.p();
        let (du, d2u) = (-0.8f64, 1.7);
        let w = hs.residual(&[0.0; 3], &[du, 0.0, d2u, 0.0, 0.0]);
        let expect = (p - 1.0) * du.abs().powf(p - 2.0) * d2u;
        assert!((w - expect).abs() < 1e-13 * expect.abs());
        let w = hs.residual(&[0.0; 3], &[0.0, du, 0.0, 0.0, d2u]);
        assert!((w - expect).abs() < 1e-13 * expect.abs());
    }

    #[test]
    fn partials_match_fd() {
        let hs = problem();
        for k in 0..20 {
            let t = k as f64 + 1.0;
            let v: Vec<f64> = (0..5)
                .map(|m| 1.5 * (0.53 * t * (m + 2) as f64).sin() + if m < 2 { 0.6 } else { 0.0 })
                .collect();
            let (e1, e2) = fd_check(&hs, &[0.0; 3], &v);
            assert!(e1 < 1e-6 && e2 < 1e-5, "{e1} {e2} at {v:?}");
        }
    }

    #[test]
    fn linearization_equals_first_partials() {
        let hs = problem();
        for v in [[0.3, -1.1, 0.7, 2.0, -0.4], [2.0, 0.1, -0.3, 0.2, 1.0]] {
            let mut a = [0.0; 5];
            let mut b = [0.0; 5];
            hs.d1(&[0.0; 3], &v, &mut a);
            hs.linearized(&[0.0; 3], &v, &mut b).unwrap();
            for m in 0..5 {
                assert!((a[m] - b[m]).abs() < 1e-12 * (1.0 + a[m].abs()), "{m}: {a:?} {b:?}");
            }
        }
        let mut c = [0.0; 5];
        let v = [0.3, -1.1, 0.7, 2.0, -0.4];
        quasilinear_coefficients(Flux::MinimalSurface, &v, &mut c);
        let g = 1.0 / (1.0 + 0.09 + 1.21f64).sqrt();
        assert!((c[2] - g * (1.0 + 1.21) / (1.0 + 0.09 + 1.21)).abs() < 1e-14);
    }

    #[test]
    fn zero_gradient_is_finite() {
        let hs = problem();
        let v = [0.0, 0.0, 1.0, 0.5, -1.0];
        let mut d1 = [0.0; 5];
        let mut d2 = [0.0; 25];
        hs.d1(&[0.0; 3], &v, &mut d1);
        hs.d2(&[0.0; 3], &v, &mut d2);
        assert!(hs.residual(&[0.0; 3], &v).is_finite());
        assert!(d1.iter().chain(&d2).all(|x| x.is_finite()));
    }

    #[test]
    fn boundary_data() {
        let hs = problem();
        assert_eq!(hs.dirichlet(&[0.0, 1.5, 0.0]), 1.0);
        assert_eq!(hs.dirichlet(&[6.0, 1.5, 0.0]), 0.0);
        assert_eq!(hs.enrichment().len(), 4);
        assert!(HeleShaw::new(-1.5, MoldSpec::default(), 0).is_err());
    }
}
