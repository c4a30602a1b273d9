//! Monge-Ampère equation `det D^2 u = f` on the unit square or cube with
//! exact solution `exp(|x|^2 / 2)`, for which `f = (1 + |x|^2) exp(d |x|^2 / 2)`.

use super::Problem;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::kernels::DifferentialComponent as D;

const COMPONENTS_2D: [D; 3] = [D::SecondPartial(0, 0), D::SecondPartial(0, 1), D::SecondPartial(1, 1)];

/// Symmetric storage: `[xx, yy, zz, xy, xz, yz]`.
const COMPONENTS_3D: [D; 6] = [
    D::SecondPartial(0, 0),
    D::SecondPartial(1, 1),
    D::SecondPartial(2, 2),
    D::SecondPartial(0, 1),
    D::SecondPartial(0, 2),
    D::SecondPartial(1, 2),
];

#[derive(Debug, Clone, Copy)]
pub struct MongeAmpere {
    pub dim: usize,
}

impl MongeAmpere {
    pub fn new(dim: usize) -> Result<Self> {
        match dim {
            2 | 3 => Ok(MongeAmpere { dim }),
            _ => Err(Error::Config(format!("Monge-Ampère is defined for d = 2, 3, got {dim}"))),
        }
    }

    fn r2(&self, x: &Point) -> f64 {
        x[..self.dim].iter().map(|v| v * v).sum()
    }

    pub fn source(&self, x: &Point) -> f64 {
        let r2 = self.r2(x);
        (1.0 + r2) * (self.dim as f64 * r2 / 2.0).exp()
    }

    /// Full 3x3 Hessian from the stored components.
    fn hessian3(v: &[f64]) -> [[f64; 3]; 3] {
        [[v[0], v[3], v[4]], [v[3], v[1], v[5]], [v[4], v[5], v[2]]]
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cofactor matrix, so that `d det / d m_ij = cof_ij`.
fn cofactor3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            *e = m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1];
        }
    }
    c
}

impl Problem for MongeAmpere {
    fn name(&self) -> String {
        format!("monge_ampere{}d", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self) -> &[D] {
        if self.dim == 2 {
            &COMPONENTS_2D
        } else {
            &COMPONENTS_3D
        }
    }

    fn residual(&self, x: &Point, v: &[f64]) -> f64 {
        let det = if self.dim == 2 {
            v[0] * v[2] - v[1] * v[1]
        } else {
            let (a, b, c, d, e, g) = (v[0], v[1], v[2], v[3], v[4], v[5]);
            a * b * c + 2.0 * d * e * g - a * g * g - b * e * e - c * d * d
        };
        det - self.source(x)
    }

    fn d1(&self, _x: &Point, v: &[f64], out: &mut [f64]) {
        if self.dim == 2 {
            out[0] = v[2];
            out[1] = -2.0 * v[1];
            out[2] = v[0];
        } else {
            let (a, b, c, d, e, g) = (v[0], v[1], v[2], v[3], v[4], v[5]);
            out[0] = b * c - g * g;
            out[1] = a * c - e * e;
            out[2] = a * b - d * d;
            out[3] = 2.0 * (e * g - c * d);
            out[4] = 2.0 * (d * g - b * e);
            out[5] = 2.0 * (d * e - a * g);
        }
    }

    fn d2(&self, _x: &Point, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        if self.dim == 2 {
            out[2] = 1.0;
            out[6] = 1.0;
            out[4] = -2.0;
            return;
        }
        let (a, b, c, d, e, g) = (v[0], v[1], v[2], v[3], v[4], v[5]);
        let mut set = |m: usize, n: usize, val: f64| {
            out[m * 6 + n] = val;
            out[n * 6 + m] = val;
        };
        set(0, 1, c);
        set(0, 2, b);
        set(1, 2, a);
        set(0, 5, -2.0 * g);
        set(1, 4, -2.0 * e);
        set(2, 3, -2.0 * d);
        set(3, 3, -2.0 * c);
        set(4, 4, -2.0 * b);
        set(5, 5, -2.0 * a);
        set(3, 4, 2.0 * g);
        set(3, 5, 2.0 * e);
        set(4, 5, 2.0 * d);
    }

    fn d2_pairs(&self) -> Vec<(usize, usize)> {
        if self.dim == 2 {
            vec![(0, 2), (1, 1)]
        } else {
            vec![
                (0, 1),
                (0, 2),
                (1, 2),
                (0, 5),
                (1, 4),
                (2, 3),
                (3, 3),
                (4, 4),
                (5, 5),
                (3, 4),
                (3, 5),
                (4, 5),
            ]
        }
    }

    fn dirichlet(&self, x: &Point) -> f64 {
        (self.r2(x) / 2.0).exp()
    }

    fn exact(&self, x: &Point) -> Option<f64> {
        Some(self.dirichlet(x))
    }

    fn domain(&self) -> Domain {
        if self.dim == 2 {
            Domain::unit_square()
        } else {
            Domain::unit_cube()
        }
    }

    /// Adjugate form `sum_ij cof(D^2 u)_ij v_ij`; off-diagonal entries count
    /// twice because `v_ij = v_ji`.
    fn linearized(&self, _x: &Point, v: &[f64], out: &mut [f64]) -> Result<()> {
        if self.dim == 2 {
            // cof of [[uxx, uxy], [uxy, uyy]]
            out[0] = v[2];
            out[1] = -v[1] - v[1];
            out[2] = v[0];
            return Ok(());
        }
        let cof = cofactor3(&Self::hessian3(v));
        out[0] = cof[0][0];
        out[1] = cof[1][1];
        out[2] = cof[2][2];
        out[3] = cof[0][1] + cof[1][0];
        out[4] = cof[0][2] + cof[2][0];
        out[5] = cof[1][2] + cof[2][1];
        Ok(())
    }

    /// `d f^(1/d)`.
    fn poisson_rhs(&self, x: &Point) -> f64 {
        self.dim as f64 * self.source(x).powf(1.0 / self.dim as f64)
    }
}

/// True if the stored Hessian components describe a positive definite matrix.
pub fn hessian_is_positive_definite(dim: usize, v: &[f64]) -> bool {
    if dim == 2 {
        v[0] > 0.0 && v[0] * v[2] - v[1] * v[1] > 0.0
    } else {
        let m = MongeAmpere::hessian3(v);
        m[0][0] > 0.0 && m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0 && det3(&m) > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::testing::fd_check;

    #[test]
    fn quadratic_has_unit_determinant() {
        let p = MongeAmpere::new(2).unwrap();
        let x = [0.0; 3];
        assert_eq!(p.residual(&x, &[1.0, 0.0, 1.0]) + p.source(&x), 1.0);
        let p3 = MongeAmpere::new(3).unwrap();
        assert_eq!(p3.residual(&x, &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]) + p3.source(&x), 1.0);
    }

    #[test]
    fn exact_solution_is_root() {
        for dim in [2, 3] {
            let p = MongeAmpere::new(dim).unwrap();
            let x = [0.3, 0.8, 0.45];
            let u = p.dirichlet(&x);
            let h = |i: usize, j: usize| u * ((i == j) as u8 as f64 + x[i] * x[j]);
            let v: Vec<f64> = p
                .components()
                .iter()
                .map(|c| match *c {
                    D::SecondPartial(i, j) => h(i, j),
                    _ => unreachable!(),
                })
                .collect();
            assert!(p.residual(&x, &v).abs() < 1e-12 * p.source(&x));
            assert!(hessian_is_positive_definite(dim, &v));
        }
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let v = [1.3, 0.4, -0.7, 0.2, 0.9, -0.5];
        let p = MongeAmpere::new(3).unwrap();
        let x = [0.0; 3];
        assert!((p.residual(&x, &v) + p.source(&x) - det3(&MongeAmpere::hessian3(&v))).abs() < 1e-14);
    }

    #[test]
    fn partials_match_fd() {
        for dim in [2, 3] {
            let p = MongeAmpere::new(dim).unwrap();
            let s = p.components().len();
            for k in 0..20 {
                let t = k as f64 + 1.0;
                let v: Vec<f64> = (0..s).map(|m| 2.0 * (0.41 * t * (m + 1) as f64).cos()).collect();
                let (e1, e2) = fd_check(&p, &[0.2, 0.3, 0.4], &v);
                assert!(e1 < 1e-7 && e2 < 1e-7, "{dim}d: {e1} {e2}");
            }
        }
    }

    #[test]
    fn linearization_equals_first_partials() {
        for dim in [2, 3] {
            let p = MongeAmpere::new(dim).unwrap();
            let s = p.components().len();
            let v: Vec<f64> = (0..s).map(|m| (m as f64 * 1.7).sin() + 0.5).collect();
            let mut a = vec![0.0; s];
            let mut b = vec![0.0; s];
            p.d1(&[0.0; 3], &v, &mut a);
            p.linearized(&[0.0; 3], &v, &mut b).unwrap();
            for m in 0..s {
                assert!((a[m] - b[m]).abs() < 1e-14, "{dim}d component {m}");
            }
        }
    }
}
