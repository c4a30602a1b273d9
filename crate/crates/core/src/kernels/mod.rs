//! Radial basis functions and their derivatives up to second order.
//!
//! All derivatives go through the radial chain rule with
//! `F1 = phi'(r)/r` and `F2 = (phi'' - phi'/r)/r^2`:
//!
//! ```text
//! d_k phi      = dx_k F1
//! d_k d_l phi  = delta_kl F1 + dx_k dx_l F2
//! lap phi      = d F1 + r^2 F2
//! ```
//!
//! Each family provides `F1` and `F2` in closed form, so coincident points
//! need no special casing beyond what is noted per family.

pub mod bessel;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::par::{self, Execution};

/// RBF family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelFamily {
    /// `sqrt(r^2 + c^2)`
    Mq,
    /// `1 / sqrt(r^2 + c^2)`
    Imq,
    /// `(r/c)^nu K_nu(r/c)` with `nu = (alpha - d)/2`
    Matern { alpha: u32 },
    /// Wendland C4, compact support of radius `L`
    Wc4,
}

/// A kernel family together with its shape parameter and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// `c` for MQ/IMQ/Matérn, the support radius `L` for WC4.
    pub scale: f64,
    pub dim: usize,
    /// Matérn only: divide by the value at the origin so that `phi(0) = 1`.
    #[serde(default)]
    pub normalize: bool,
}

/// One linear differential operator applied to the trial function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DifferentialComponent {
    Identity,
    FirstPartial(usize),
    SecondPartial(usize, usize),
    Laplacian,
}

impl DifferentialComponent {
    /// Mixed partials are stored with sorted axes.
    pub fn second(i: usize, j: usize) -> Self {
        DifferentialComponent::SecondPartial(i.min(j), i.max(j))
    }

    /// `-1` for first partials, `+1` otherwise: `[D phi]^T = parity [D phi]`.
    pub fn parity(self) -> f64 {
        match self {
            DifferentialComponent::FirstPartial(_) => -1.0,
            _ => 1.0,
        }
    }

    pub fn order(self) -> usize {
        match self {
            DifferentialComponent::Identity => 0,
            DifferentialComponent::FirstPartial(_) => 1,
            _ => 2,
        }
    }

    fn max_axis(self) -> Option<usize> {
        match self {
            DifferentialComponent::FirstPartial(i) => Some(i),
            DifferentialComponent::SecondPartial(i, j) => Some(i.max(j)),
            _ => None,
        }
    }

    /// Combines a radial profile into this component for offset `dx`.
    #[inline]
    pub fn apply(self, dx: &Point, dim: usize, p: &Radial) -> f64 {
        match self {
            DifferentialComponent::Identity => p.phi,
            DifferentialComponent::FirstPartial(k) => dx[k] * p.f1,
            DifferentialComponent::SecondPartial(k, l) => {
                let diag = if k == l { p.f1 } else { 0.0 };
                diag + dx[k] * dx[l] * p.f2
            }
            DifferentialComponent::Laplacian => {
                let r2: f64 = dx[..dim].iter().map(|v| v * v).sum();
                dim as f64 * p.f1 + r2 * p.f2
            }
        }
    }
}

impl std::fmt::Display for DifferentialComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        const AX: [&str; 3] = ["x", "y", "z"];
        match *self {
            DifferentialComponent::Identity => write!(f, "u"),
            DifferentialComponent::FirstPartial(i) => write!(f, "u_{}", AX[i]),
            DifferentialComponent::SecondPartial(i, j) => write!(f, "u_{}{}", AX[i], AX[j]),
            DifferentialComponent::Laplacian => write!(f, "lap u"),
        }
    }
}

/// Radial profile `(phi, F1, F2)` at one distance.
///
/// At `r = 0` the `F2` slot is never used (it is always multiplied by a
/// zero offset) and holds its limit when finite, 0 otherwise.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Radial {
    pub phi: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Wendland polynomial data for a given dimension.
struct WendlandCoeffs {
    a: i32,
    p2: f64,
    p1: f64,
    q1: f64,
    q0: f64,
}

impl WendlandCoeffs {
    fn new(dim: usize) -> Self {
        let s = (3 + dim / 2) as f64;
        let a = s + 2.0;
        let p2 = s * s + 4.0 * s + 3.0;
        let p1 = 3.0 * s + 6.0;
        // phi'(t) = t (1-t)^(a-1) (q1 t + q0); the constant term cancels
        let q1 = -(a + 2.0) * p2;
        let q0 = 2.0 * p2 - (a + 1.0) * p1;
        WendlandCoeffs {
            a: a as i32,
            p2,
            p1,
            q1,
            q0,
        }
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, scale: f64, dim: usize) -> Result<Self> {
        let spec = KernelSpec {
            family,
            scale,
            dim,
            normalize: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mq(c: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Mq, c, dim)
    }

    pub fn imq(c: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Imq, c, dim)
    }

    pub fn matern(alpha: u32, c: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Matern { alpha }, c, dim)
    }

    pub fn wc4(support: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Wc4, support, dim)
    }

    pub fn normalized(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Config(format!("dimension {} not in 1..=3", self.dim)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!(
                "shape parameter must be positive, got {}",
                self.scale
            )));
        }
        if let KernelFamily::Matern { alpha } = self.family {
            if (alpha as i64) - (self.dim as i64) < 1 {
                return Err(Error::Config(format!(
                    "Matern order (alpha - d)/2 must be at least 1/2 (alpha={alpha}, d={})",
                    self.dim
                )));
            }
        }
        Ok(())
    }

    /// `2 nu` for the Matérn family.
    fn two_nu(&self) -> i32 {
        match self.family {
            KernelFamily::Matern { alpha } => alpha as i32 - self.dim as i32,
            _ => 0,
        }
    }

    fn matern_scale(&self) -> f64 {
        if self.normalize {
            1.0 / bessel::g_at_zero(self.two_nu()).unwrap_or(1.0)
        } else {
            1.0
        }
    }

    /// `phi(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        let c = self.scale;
        match self.family {
            KernelFamily::Mq => (r * r + c * c).sqrt(),
            KernelFamily::Imq => 1.0 / (r * r + c * c).sqrt(),
            KernelFamily::Matern { .. } => {
                let two_nu = self.two_nu();
                let t = r / c;
                let g = if t == 0.0 {
                    bessel::g_at_zero(two_nu).unwrap_or(f64::INFINITY)
                } else {
                    bessel::g(two_nu, t)
                };
                g * self.matern_scale()
            }
            KernelFamily::Wc4 => {
                let t = r / c;
                if t >= 1.0 {
                    return 0.0;
                }
                let w = WendlandCoeffs::new(self.dim);
                (1.0 - t).powi(w.a) * (w.p2 * t * t + w.p1 * t + 3.0)
            }
        }
    }

    /// Radial profile up to the requested derivative order (0, 1 or 2).
    pub fn radial(&self, r: f64, order: usize) -> Result<Radial> {
        let c = self.scale;
        let mut p = Radial {
            phi: self.eval(r),
            ..Radial::default()
        };
        if order == 0 {
            return Ok(p);
        }
        match self.family {
            KernelFamily::Mq => {
                p.f1 = 1.0 / p.phi;
                p.f2 = -p.f1 * p.f1 * p.f1;
            }
            KernelFamily::Imq => {
                let p3 = p.phi * p.phi * p.phi;
                p.f1 = -p3;
                p.f2 = 3.0 * p3 * p.phi * p.phi;
            }
            KernelFamily::Matern { .. } => {
                let two_nu = self.two_nu();
                let t = r / c;
                let k = self.matern_scale();
                let c2 = c * c;
                if t == 0.0 {
                    // First partials vanish at the origin as long as phi is C1;
                    // second derivatives need F1(0), finite only for nu > 1.
                    let needed = if order == 1 { 1 } else { 2 };
                    match bessel::g_at_zero(two_nu - 2) {
                        Some(g1) => p.f1 = -g1 / c2 * k,
                        None if two_nu > needed => p.f1 = 0.0,
                        None => {
                            return Err(Error::Domain(format!(
                                "Matern order {} is not smooth enough at r = 0",
                                two_nu as f64 / 2.0
                            )))
                        }
                    }
                    p.f2 = bessel::g_at_zero(two_nu - 4).map_or(0.0, |g2| g2 / (c2 * c2) * k);
                } else {
                    p.f1 = -bessel::g(two_nu - 2, t) / c2 * k;
                    if order > 1 {
                        p.f2 = bessel::g(two_nu - 4, t) / (c2 * c2) * k;
                    }
                }
            }
            KernelFamily::Wc4 => {
                let t = r / c;
                if t < 1.0 {
                    let w = WendlandCoeffs::new(self.dim);
                    let l2 = c * c;
                    let om = 1.0 - t;
                    p.f1 = om.powi(w.a - 1) * (w.q1 * t + w.q0) / l2;
                    p.f2 = -(w.a as f64) * w.q1 * om.powi(w.a - 2) / (l2 * l2);
                }
            }
        }
        Ok(p)
    }

    /// `D phi(||xi - xj||)` with `D` acting on the first argument.
    pub fn eval_component(&self, comp: DifferentialComponent, xi: &Point, xj: &Point) -> Result<f64> {
        self.check_component(comp)?;
        let dx = offset(xi, xj);
        let r = norm(&dx, self.dim);
        let p = self.radial(r, comp.order())?;
        Ok(comp.apply(&dx, self.dim, &p))
    }

    fn check_component(&self, comp: DifferentialComponent) -> Result<()> {
        match comp.max_axis() {
            Some(a) if a >= self.dim => Err(Error::Config(format!(
                "component {comp} uses axis {a} in dimension {}",
                self.dim
            ))),
            _ => Ok(()),
        }
    }

    /// Short label such as `MQ(c=0.2)`.
    pub fn label(&self) -> String {
        match self.family {
            KernelFamily::Mq => format!("MQ(c={})", self.scale),
            KernelFamily::Imq => format!("IMQ(c={})", self.scale),
            KernelFamily::Matern { alpha } => format!("MATERN(alpha={alpha},c={})", self.scale),
            KernelFamily::Wc4 => format!("WC4(L={})", self.scale),
        }
    }
}

#[inline]
pub(crate) fn offset(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn norm(v: &Point, dim: usize) -> f64 {
    v[..dim].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense matrix with entry `(i, j) = D phi(rows[i] - centres[j])`.
pub fn assemble_matrix(
    spec: &KernelSpec,
    comp: DifferentialComponent,
    rows: &[Point],
    centres: &[Point],
    exec: Execution,
) -> Result<DMatrix<f64>> {
    let mut out = assemble_components(spec, &[comp], rows, centres, exec)?;
    Ok(out.pop().expect("one component"))
}

/// Assembles several components at once, sharing the radial profiles.
pub fn assemble_components(
    spec: &KernelSpec,
    comps: &[DifferentialComponent],
    rows: &[Point],
    centres: &[Point],
    exec: Execution,
) -> Result<Vec<DMatrix<f64>>> {
    spec.validate()?;
    for &c in comps {
        spec.check_component(c)?;
    }
    let order = comps.iter().map(|c| c.order()).max().unwrap_or(0);
    let nr = rows.len();
    let nc = centres.len();
    let ns = comps.len();
    // One row of every component per task; written back column-major below.
    let row_data = par::try_map_indexed(exec, nr, |i| -> Result<Vec<f64>> {
        let mut buf = vec![0.0; ns * nc];
        for (j, cj) in centres.iter().enumerate() {
            let dx = offset(&rows[i], cj);
            let r = norm(&dx, spec.dim);
            let p = spec.radial(r, order)?;
            for (m, comp) in comps.iter().enumerate() {
                buf[m * nc + j] = comp.apply(&dx, spec.dim, &p);
            }
        }
        Ok(buf)
    })?;
    let mut mats: Vec<DMatrix<f64>> = (0..ns).map(|_| DMatrix::zeros(nr, nc)).collect();
    for (i, buf) in row_data.iter().enumerate() {
        for (m, mat) in mats.iter_mut().enumerate() {
            for j in 0..nc {
                mat[(i, j)] = buf[m * nc + j];
            }
        }
    }
    Ok(mats)
}
