//! Minimal-surface (Plateau) problem on a disc of radius `pi/2 - s` with
//! exact solution `log(cos x / cos y)`.
//!
//! The residual is the divergence form multiplied through by
//! `(1 + |grad u|^2)^(3/2)`:
//! `W = u_xx (1 + u_y^2) + u_yy (1 + u_x^2) - 2 u_x u_y u_xy`.

use std::f64::consts::FRAC_PI_2;

use super::{Flux, Problem};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::kernels::DifferentialComponent as D;

const COMPONENTS: [D; 6] = [
    D::Identity,
    D::FirstPartial(0),
    D::FirstPartial(1),
    D::SecondPartial(0, 0),
    D::SecondPartial(0, 1),
    D::SecondPartial(1, 1),
];

const I_UX: usize = 1;
const I_UY: usize = 2;
const I_UXX: usize = 3;
const I_UXY: usize = 4;
const I_UYY: usize = 5;

#[derive(Debug, Clone, Copy)]
pub struct Plateau {
    pub s: f64,
    /// Disc radius actually used; `pi/2 - s` unless overridden.
    pub radius: f64,
}

impl Plateau {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < FRAC_PI_2) {
            return Err(Error::Domain(format!("Plateau needs 0 < s < pi/2, got {s}")));
        }
        Ok(Plateau {
            s,
            radius: FRAC_PI_2 - s,
        })
    }

    fn exact_value(x: &Point) -> f64 {
        (x[0].cos() / x[1].cos()).ln()
    }
}

impl Problem for Plateau {
    fn name(&self) -> String {
        format!("plateau(s={})", self.s)
    }

    fn dim(&self) -> usize {
        2
    }

    fn components(&self) -> &[D] {
        &COMPONENTS
    }

    fn residual(&self, _x: &Point, v: &[f64]) -> f64 {
        let (ux, uy) = (v[I_UX], v[I_UY]);
        v[I_UXX] * (1.0 + uy * uy) + v[I_UYY] * (1.0 + ux * ux) - 2.0 * ux * uy * v[I_UXY]
    }

    fn d1(&self, _x: &Point, v: &[f64], out: &mut [f64]) {
        let (ux, uy) = (v[I_UX], v[I_UY]);
        let (uxx, uxy, uyy) = (v[I_UXX], v[I_UXY], v[I_UYY]);
        out[0] = 0.0;
        out[I_UX] = 2.0 * ux * uyy - 2.0 * uy * uxy;
        out[I_UY] = 2.0 * uy * uxx - 2.0 * ux * uxy;
        out[I_UXX] = 1.0 + uy * uy;
        out[I_UXY] = -2.0 * ux * uy;
        out[I_UYY] = 1.0 + ux * ux;
    }

    fn d2(&self, _x: &Point, v: &[f64], out: &mut [f64]) {
        let (ux, uy) = (v[I_UX], v[I_UY]);
        out.fill(0.0);
        let mut set = |m: usize, n: usize, val: f64| {
            out[m * 6 + n] = val;
            out[n * 6 + m] = val;
        };
        set(I_UX, I_UX, 2.0 * v[I_UYY]);
        set(I_UY, I_UY, 2.0 * v[I_UXX]);
        set(I_UX, I_UY, -2.0 * v[I_UXY]);
        set(I_UX, I_UXY, -2.0 * uy);
        set(I_UX, I_UYY, 2.0 * ux);
        set(I_UY, I_UXX, 2.0 * uy);
        set(I_UY, I_UXY, -2.0 * ux);
    }

    fn d2_pairs(&self) -> Vec<(usize, usize)> {
        vec![
            (I_UX, I_UX),
            (I_UY, I_UY),
            (I_UX, I_UY),
            (I_UX, I_UXY),
            (I_UX, I_UYY),
            (I_UY, I_UXX),
            (I_UY, I_UXY),
        ]
    }

    fn dirichlet(&self, x: &Point) -> f64 {
        Self::exact_value(x)
    }

    fn exact(&self, x: &Point) -> Option<f64> {
        Some(Self::exact_value(x))
    }

    fn domain(&self) -> Domain {
        Domain::Disc { radius: self.radius }
    }

    /// Coefficient form `A v_xx + B v_xy + C v_yy + D v_x + E v_y` where
    /// `A, B, C` are the principal coefficients of the multiplied operator
    /// and `D, E` their gradient sensitivities contracted with `D^2 u`.
    fn linearized(&self, _x: &Point, v: &[f64], out: &mut [f64]) -> Result<()> {
        let (ux, uy) = (v[I_UX], v[I_UY]);
        let hess = [v[I_UXX], v[I_UXY], v[I_UYY]];
        let a = 1.0 + uy * uy;
        let b = -2.0 * ux * uy;
        let c = 1.0 + ux * ux;
        // d(A, B, C)/du_x and d(A, B, C)/du_y
        let dx = [0.0, -2.0 * uy, 2.0 * ux];
        let dy = [2.0 * uy, -2.0 * ux, 0.0];
        out[0] = 0.0;
        out[I_UX] = dx.iter().zip(&hess).map(|(p, q)| p * q).sum();
        out[I_UY] = dy.iter().zip(&hess).map(|(p, q)| p * q).sum();
        out[I_UXX] = a;
        out[I_UXY] = b;
        out[I_UYY] = c;
        Ok(())
    }

    fn flux(&self) -> Option<Flux> {
        Some(Flux::MinimalSurface)
    }
}
