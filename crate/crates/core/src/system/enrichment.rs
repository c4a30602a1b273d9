//! Non-RBF basis functions appended to the interpolant.
//!
//! Each enrichment function gets its own coefficient and one ancillary
//! linear equation `sum_j alpha_j h_k(c_j) = 0` over the RBF centres.

use serde::{Deserialize, Serialize};

use crate::kernels::DifferentialComponent;
use crate::geometry::Point;

/// Harmonic singular function `r^a cos(a theta)` with `a = (2k-1)/2`.
///
/// The local frame has `theta = 0` along the Neumann edge leaving the
/// singular point and `theta = pi` along the Dirichlet edge, with the
/// domain at `theta in [0, pi]`. The branch cut points straight out of the
/// domain (`theta = -pi/2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotzFunction {
    pub k: u32,
    pub centre: Point,
    /// Unit vector along the Neumann edge.
    pub edge: [f64; 2],
    /// Unit vector perpendicular to `edge`, pointing into the domain.
    pub inward: [f64; 2],
}

impl MotzFunction {
    /// `edge_angle` is the direction of the Neumann edge; `orientation = +1`
    /// puts the domain to the left of that edge, `-1` to the right.
    pub fn new(k: u32, centre: Point, edge_angle: f64, orientation: f64) -> Self {
        assert!(k >= 1, "Motz index starts at 1");
        let e = [edge_angle.cos(), edge_angle.sin()];
        let s = orientation.signum();
        MotzFunction {
            k,
            centre,
            edge: e,
            inward: [-s * e[1], s * e[0]],
        }
    }

    fn exponent(&self) -> f64 {
        (2 * self.k - 1) as f64 / 2.0
    }

    /// Local polar coordinates `(r, theta)` of `x`.
    pub fn polar(&self, x: &Point) -> (f64, f64) {
        let d = [x[0] - self.centre[0], x[1] - self.centre[1]];
        let xi = d[0] * self.edge[0] + d[1] * self.edge[1];
        let eta = d[0] * self.inward[0] + d[1] * self.inward[1];
        let mut th = eta.atan2(xi);
        if th < -std::f64::consts::FRAC_PI_2 {
            th += 2.0 * std::f64::consts::PI;
        }
        ((xi * xi + eta * eta).sqrt(), th)
    }

    /// Derivative components at the centre itself evaluate to 0.
    pub fn eval(&self, comp: DifferentialComponent, x: &Point) -> f64 {
        let (r, th) = self.polar(x);
        let a = self.exponent();
        if comp == DifferentialComponent::Identity {
            return r.powf(a) * (a * th).cos();
        }
        if r == 0.0 {
            return 0.0;
        }
        let e = self.edge;
        let n = self.inward;
        match comp {
            DifferentialComponent::Identity => unreachable!(),
            DifferentialComponent::FirstPartial(k) => {
                let m = a * r.powf(a - 1.0);
                let hxi = m * ((a - 1.0) * th).cos();
                let heta = -m * ((a - 1.0) * th).sin();
                e[k] * hxi + n[k] * heta
            }
            DifferentialComponent::SecondPartial(k, l) => {
                let m = a * (a - 1.0) * r.powf(a - 2.0);
                let hxx = m * ((a - 2.0) * th).cos();
                let hxy = -m * ((a - 2.0) * th).sin();
                let hyy = -hxx;
                e[k] * e[l] * hxx + (e[k] * n[l] + n[k] * e[l]) * hxy + n[k] * n[l] * hyy
            }
            // harmonic: h_xixi = -h_etaeta
            DifferentialComponent::Laplacian => 0.0,
        }
    }
}

/// An enrichment basis function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Enrichment {
    /// The constant 1 (MQ augmentation).
    Constant,
    Motz(MotzFunction),
}

impl Enrichment {
    pub fn eval(&self, comp: DifferentialComponent, x: &Point) -> f64 {
        match self {
            Enrichment::Constant => {
                if comp == DifferentialComponent::Identity {
                    1.0
                } else {
                    0.0
                }
            }
            Enrichment::Motz(m) => m.eval(comp, x),
        }
    }
}

/// `k_max` Motz functions (`k = 1..=k_max`) at one singular point.
pub fn motz_enrichment(k_max: u32, singularity: Point, edge_angle: f64, orientation: f64) -> Vec<Enrichment> {
    (1..=k_max)
        .map(|k| Enrichment::Motz(MotzFunction::new(k, singularity, edge_angle, orientation)))
        .collect()
}
