//! Semilinear test problem `lap u - u^3 = f` on the unit square with
//! exact solution `sin(pi x) sin(pi y)`.

use std::f64::consts::PI;

use super::Problem;
use crate::error::Result;
use crate::geometry::{Domain, Point};
use crate::kernels::DifferentialComponent;

const COMPONENTS: [DifferentialComponent; 2] = [DifferentialComponent::Identity, DifferentialComponent::Laplacian];

#[derive(Debug, Clone, Copy, Default)]
pub struct CubicSemilinear;

impl CubicSemilinear {
    pub fn new() -> Self {
        CubicSemilinear
    }

    pub fn source(x: &Point) -> f64 {
        let s = (PI * x[0]).sin() * (PI * x[1]).sin();
        -2.0 * PI * PI * s - s * s * s
    }
}

impl Problem for CubicSemilinear {
    fn name(&self) -> String {
        "cubic".into()
    }

    fn dim(&self) -> usize {
        2
    }

    fn components(&self) -> &[DifferentialComponent] {
        &COMPONENTS
    }

    fn residual(&self, x: &Point, v: &[f64]) -> f64 {
        v[1] - v[0] * v[0] * v[0] - Self::source(x)
    }

    fn d1(&self, _x: &Point, v: &[f64], out: &mut [f64]) {
        out[0] = -3.0 * v[0] * v[0];
        out[1] = 1.0;
    }

    fn d2(&self, _x: &Point, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = -6.0 * v[0];
    }

    fn d2_pairs(&self) -> Vec<(usize, usize)> {
        vec![(0, 0)]
    }

    fn dirichlet(&self, _x: &Point) -> f64 {
        0.0
    }

    fn exact(&self, x: &Point) -> Option<f64> {
        Some((PI * x[0]).sin() * (PI * x[1]).sin())
    }

    fn domain(&self) -> Domain {
        Domain::unit_square()
    }

    /// `L v = lap v - 3 u^2 v`.
    fn linearized(&self, _x: &Point, v: &[f64], out: &mut [f64]) -> Result<()> {
        let u = v[0];
        out[0] = -3.0 * u.powi(2);
        out[1] = 1.0;
        Ok(())
    }

    fn poisson_rhs(&self, x: &Point) -> f64 {
        Self::source(x)
    }
}
