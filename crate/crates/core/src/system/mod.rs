//! The square nonlinear collocation system.
//!
//! Unknowns are one coefficient per RBF centre plus one per enrichment
//! function. PDE rows are nonlinear; Dirichlet, Neumann and ancillary rows
//! are linear and collected into `B alpha = b`. By default the linear block
//! is eliminated with a pivoted QR of `B^T`, so that
//! `alpha = alpha_p + Z beta` with `B Z = 0`, and only the PDE rows remain.
//!
//! Per component `m` the system caches `A_m = [D_m phi] Z` and
//! `a_m = [D_m phi] alpha_p`, so nodal values are `A_m beta + a_m` and
//!
//! ```text
//! J = sum_m diag(dW/dD_m) A_m
//! H = J^T J + sum_m A_m^T [ sum_n diag(W d2W/dD_m dD_n) A_n ]
//! ```

pub mod enrichment;
pub mod fd;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{Point, Pointset};
use crate::kernels::{self, DifferentialComponent, KernelSpec};
use crate::linalg::{accurate_matvec, PivotedQr};
use crate::par::{self, Execution};
use crate::problems::Problem;
use enrichment::Enrichment;

pub use fd::{fd_jacobian, FdScheme};

/// Build-time switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemOptions {
    /// Eliminate the linear rows (reduced beta-space). When false the
    /// unknowns are the full coefficients and linear rows stay in `W`.
    pub eliminate: bool,
    /// Append the constant function as an enrichment (MQ augmentation).
    pub augment_constant: bool,
    pub exec: Execution,
}

impl Default for SystemOptions {
    fn default() -> Self {
        SystemOptions {
            eliminate: true,
            augment_constant: false,
            exec: Execution::best(),
        }
    }
}

/// Origin of a linear row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearRow {
    Dirichlet { node: usize },
    Neumann { node: usize },
    Ancillary { function: usize },
}

/// `alpha = particular + Z beta`.
#[derive(Debug, Clone)]
pub struct Elimination {
    pub z: DMatrix<f64>,
    pub particular: DVector<f64>,
    pub rank: usize,
}

/// Everything that depends on the unknowns at one iterate.
#[derive(Debug, Clone)]
pub struct MeritState {
    pub beta: DVector<f64>,
    pub alpha: DVector<f64>,
    pub w: DVector<f64>,
    pub mu: f64,
    pub grad: DVector<f64>,
    pub j: DMatrix<f64>,
    pub h: Option<DMatrix<f64>>,
}

/// Nodal quantities at every PDE row.
struct RowEval {
    w: Vec<f64>,
    /// `d1[m][i]`
    d1: Vec<Vec<f64>>,
    /// `d2[pair][i]`, pairs as in `Problem::d2_pairs`
    d2: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct CollocationSystem {
    pub kernel: KernelSpec,
    pub dim: usize,
    pub components: Vec<DifferentialComponent>,
    pub centres: Vec<Point>,
    pub enrichment: Vec<Enrichment>,
    /// Node index (in the pointset) of every PDE row.
    pub pde_nodes: Vec<usize>,
    pub pde_points: Vec<Point>,
    /// `[D_m phi | D_m h]` over PDE rows and all coefficients.
    pub full: Vec<DMatrix<f64>>,
    /// Linear block `B` and right-hand side `b`.
    pub b: DMatrix<f64>,
    pub b_rhs: DVector<f64>,
    pub linear_rows: Vec<LinearRow>,
    pub elimination: Option<Elimination>,
    reduced: Vec<DMatrix<f64>>,
    offsets: Vec<DVector<f64>>,
    d2_pairs: Vec<(usize, usize)>,
    pub exec: Execution,
}

impl CollocationSystem {
    pub fn build(
        kernel: &KernelSpec,
        ps: &Pointset,
        prob: &dyn Problem,
        opts: SystemOptions,
    ) -> Result<Self> {
        kernel.validate()?;
        ps.validate()?;
        if kernel.dim != ps.dim || prob.dim() != ps.dim {
            return Err(Error::Config(format!(
                "dimension mismatch: kernel {}, pointset {}, problem {}",
                kernel.dim,
                ps.dim,
                prob.dim()
            )));
        }
        let exec = opts.exec;
        let dim = ps.dim;
        let components = prob.components().to_vec();
        let centres = ps.centres();
        let mut enrichment = prob.enrichment();
        if opts.augment_constant {
            enrichment.push(Enrichment::Constant);
        }
        let nc = centres.len();
        let ne = enrichment.len();
        let ncoef = nc + ne;

        let mut pde_nodes: Vec<usize> = (0..ps.n_interior).collect();
        pde_nodes.extend(
            ps.tags
                .iter()
                .enumerate()
                .filter(|(_, t)| t.is_pde())
                .map(|(b, _)| ps.n_interior + b),
        );
        let pde_points: Vec<Point> = pde_nodes.iter().map(|&i| ps.nodes[i]).collect();

        let full = component_matrices(kernel, &components, &pde_points, &centres, &enrichment, exec)?;

        // Linear rows: boundary conditions, then ancillary equations.
        let n_lin = ps.n_boundary() + ne;
        let mut linear_rows = Vec::with_capacity(n_lin);
        let bnodes = ps.boundary();
        let value_rows = kernels::assemble_components(
            kernel,
            &(0..=dim)
                .map(|a| {
                    if a == 0 {
                        DifferentialComponent::Identity
                    } else {
                        DifferentialComponent::FirstPartial(a - 1)
                    }
                })
                .collect::<Vec<_>>(),
            bnodes,
            &centres,
            exec,
        )?;
        let mut b = DMatrix::zeros(n_lin, ncoef);
        let mut b_rhs = DVector::zeros(n_lin);
        for (k, x) in bnodes.iter().enumerate() {
            let node = ps.n_interior + k;
            if ps.tags[k].is_dirichlet() {
                for j in 0..nc {
                    b[(k, j)] = value_rows[0][(k, j)];
                }
                for (e, f) in enrichment.iter().enumerate() {
                    b[(k, nc + e)] = f.eval(DifferentialComponent::Identity, x);
                }
                b_rhs[k] = prob.dirichlet(x);
                linear_rows.push(LinearRow::Dirichlet { node });
            } else {
                let n = ps.normals[k];
                for j in 0..nc {
                    b[(k, j)] = (0..dim).map(|a| n[a] * value_rows[a + 1][(k, j)]).sum();
                }
                for (e, f) in enrichment.iter().enumerate() {
                    b[(k, nc + e)] = (0..dim)
                        .map(|a| n[a] * f.eval(DifferentialComponent::FirstPartial(a), x))
                        .sum();
                }
                b_rhs[k] = prob.neumann(x);
                linear_rows.push(LinearRow::Neumann { node });
            }
        }
        for (e, f) in enrichment.iter().enumerate() {
            let row = ps.n_boundary() + e;
            for (j, c) in centres.iter().enumerate() {
                b[(row, j)] = f.eval(DifferentialComponent::Identity, c);
            }
            linear_rows.push(LinearRow::Ancillary { function: e });
        }

        let rows_total = pde_points.len() + n_lin;
        if rows_total != ncoef {
            return Err(Error::Validation(format!(
                "system is {rows_total} x {ncoef}, not square"
            )));
        }

        let mut sys = CollocationSystem {
            kernel: *kernel,
            dim,
            components,
            centres,
            enrichment,
            pde_nodes,
            pde_points,
            full,
            b,
            b_rhs,
            linear_rows,
            elimination: None,
            reduced: Vec::new(),
            offsets: Vec::new(),
            d2_pairs: prob.d2_pairs(),
            exec,
        };
        if opts.eliminate && n_lin > 0 {
            let elim = eliminate(&sys.b, &sys.b_rhs)?;
            sys.reduced = sys.full.iter().map(|m| m * &elim.z).collect();
            sys.offsets = sys.full.iter().map(|m| m * &elim.particular).collect();
            sys.elimination = Some(elim);
        }
        Ok(sys)
    }

    pub fn n_coefficients(&self) -> usize {
        self.centres.len() + self.enrichment.len()
    }

    pub fn n_pde_rows(&self) -> usize {
        self.pde_points.len()
    }

    /// Number of unknowns in the solver's variable space.
    pub fn n_vars(&self) -> usize {
        match &self.elimination {
            Some(e) => e.z.ncols(),
            None => self.n_coefficients(),
        }
    }

    /// Rows of `W` in the solver's variable space.
    pub fn n_rows(&self) -> usize {
        match &self.elimination {
            Some(_) => self.n_pde_rows(),
            None => self.n_pde_rows() + self.b.nrows(),
        }
    }

    pub fn is_reduced(&self) -> bool {
        self.elimination.is_some()
    }

    /// Full coefficient vector for solver variables `beta`.
    pub fn alpha(&self, beta: &DVector<f64>) -> DVector<f64> {
        match &self.elimination {
            Some(e) => &e.particular + &e.z * beta,
            None => beta.clone(),
        }
    }

    /// Solver variables for a full coefficient vector (least-squares
    /// projection onto the affine space when eliminated).
    pub fn beta_from_alpha(&self, alpha: &DVector<f64>) -> DVector<f64> {
        match &self.elimination {
            Some(e) => e.z.tr_mul(&(alpha - &e.particular)),
            None => alpha.clone(),
        }
    }

    fn var_mats(&self) -> &[DMatrix<f64>] {
        if self.is_reduced() {
            &self.reduced
        } else {
            &self.full
        }
    }

    /// Values of every component at the PDE rows.
    fn component_values(&self, beta: &DVector<f64>) -> Vec<DVector<f64>> {
        let mats = self.var_mats();
        mats.iter()
            .enumerate()
            .map(|(m, a)| {
                let v = a * beta;
                if self.is_reduced() {
                    v + &self.offsets[m]
                } else {
                    v
                }
            })
            .collect()
    }

    fn eval_rows(&self, prob: &dyn Problem, beta: &DVector<f64>, order: usize) -> Result<RowEval> {
        let vals = self.component_values(beta);
        let s = self.components.len();
        let pairs = &self.d2_pairs;
        let rows = par::try_map_indexed(self.exec, self.n_pde_rows(), |i| {
            let v: Vec<f64> = vals.iter().map(|c| c[i]).collect();
            let err = |what| Error::Evaluation {
                row: i,
                node: self.pde_nodes[i],
                what,
            };
            if v.iter().any(|x| !x.is_finite()) {
                return Err(err("nodal value"));
            }
            let x = &self.pde_points[i];
            let w = prob.residual(x, &v);
            if !w.is_finite() {
                return Err(err("residual"));
            }
            let mut d1 = vec![0.0; if order >= 1 { s } else { 0 }];
            if order >= 1 {
                prob.d1(x, &v, &mut d1);
                if d1.iter().any(|x| !x.is_finite()) {
                    return Err(err("first partials"));
                }
            }
            let mut d2p = Vec::new();
            if order >= 2 {
                let mut d2 = vec![0.0; s * s];
                prob.d2(x, &v, &mut d2);
                d2p = pairs.iter().map(|&(m, n)| d2[m * s + n]).collect();
                if d2p.iter().any(|x: &f64| !x.is_finite()) {
                    return Err(err("second partials"));
                }
            }
            Ok((w, d1, d2p))
        })?;
        let n = rows.len();
        let mut out = RowEval {
            w: Vec::with_capacity(n),
            d1: vec![Vec::with_capacity(n); if order >= 1 { s } else { 0 }],
            d2: vec![Vec::with_capacity(n); if order >= 2 { pairs.len() } else { 0 }],
        };
        for (w, d1, d2) in rows {
            out.w.push(w);
            for (m, v) in d1.into_iter().enumerate() {
                out.d1[m].push(v);
            }
            for (p, v) in d2.into_iter().enumerate() {
                out.d2[p].push(v);
            }
        }
        Ok(out)
    }

    /// Linear-row residual `B alpha - b` (full mode only).
    fn linear_residual(&self, alpha: &DVector<f64>) -> DVector<f64> {
        accurate_matvec(&self.b, alpha) - &self.b_rhs
    }

    fn stack_w(&self, pde: Vec<f64>, beta: &DVector<f64>) -> DVector<f64> {
        if self.is_reduced() {
            DVector::from_vec(pde)
        } else {
            let lin = self.linear_residual(beta);
            DVector::from_iterator(pde.len() + lin.len(), pde.into_iter().chain(lin.iter().copied()))
        }
    }

    /// Residual vector `W(beta)`.
    pub fn residual(&self, prob: &dyn Problem, beta: &DVector<f64>) -> Result<DVector<f64>> {
        let ev = self.eval_rows(prob, beta, 0)?;
        Ok(self.stack_w(ev.w, beta))
    }

    fn jacobian_from(&self, ev: &RowEval) -> DMatrix<f64> {
        let mats = self.var_mats();
        let np = self.n_pde_rows();
        let nv = self.n_vars();
        let mut j = DMatrix::zeros(self.n_rows(), nv);
        for (m, a) in mats.iter().enumerate() {
            let d = &ev.d1[m];
            if d.iter().all(|&x| x == 0.0) {
                continue;
            }
            for c in 0..nv {
                let src = a.column(c);
                let mut dst = j.column_mut(c);
                for i in 0..np {
                    dst[i] += d[i] * src[i];
                }
            }
        }
        if !self.is_reduced() {
            j.view_mut((np, 0), (self.b.nrows(), nv)).copy_from(&self.b);
        }
        j
    }

    /// `J(beta) = sum_m diag(dW/dD_m) A_m`.
    pub fn jacobian(&self, prob: &dyn Problem, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let ev = self.eval_rows(prob, beta, 1)?;
        Ok(self.jacobian_from(&ev))
    }

    /// Second-order part `sum_m A_m^T [sum_n diag(W d2_mn) A_n]`, before
    /// symmetrization.
    fn second_order_term(&self, ev: &RowEval) -> DMatrix<f64> {
        let mats = self.var_mats();
        let nv = self.n_vars();
        let np = self.n_pde_rows();
        let s = self.components.len();
        let coupled: Vec<Option<DMatrix<f64>>> = par::map_indexed(self.exec, s, |m| {
            let mut c: Option<DMatrix<f64>> = None;
            for (p, &(a, b)) in self.d2_pairs.iter().enumerate() {
                let n = if a == m {
                    b
                } else if b == m {
                    a
                } else {
                    continue;
                };
                let wd: Vec<f64> = (0..np).map(|i| ev.w[i] * ev.d2[p][i]).collect();
                if wd.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let acc = c.get_or_insert_with(|| DMatrix::zeros(np, nv));
                let an = &mats[n];
                for col in 0..nv {
                    let src = an.column(col);
                    let mut dst = acc.column_mut(col);
                    for i in 0..np {
                        dst[i] += wd[i] * src[i];
                    }
                }
            }
            c
        });
        let mut h = DMatrix::zeros(nv, nv);
        for (m, c) in coupled.iter().enumerate() {
            if let Some(c) = c {
                h.gemm_tr(1.0, &mats[m], c, 1.0);
            }
        }
        h
    }

    fn hessian_from(&self, ev: &RowEval, j: &DMatrix<f64>) -> DMatrix<f64> {
        let mut h = self.second_order_term(ev);
        h.gemm_tr(1.0, j, j, 1.0);
        let ht = h.transpose();
        (h + ht) * 0.5
    }

    /// Merit Hessian `J^T J + sum_k W_k grad^2 W_k`, symmetrized.
    pub fn merit_hessian(&self, prob: &dyn Problem, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let ev = self.eval_rows(prob, beta, 2)?;
        let j = self.jacobian_from(&ev);
        Ok(self.hessian_from(&ev, &j))
    }

    /// Hessian before the final symmetrization, for diagnostics.
    pub fn merit_hessian_raw(&self, prob: &dyn Problem, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let ev = self.eval_rows(prob, beta, 2)?;
        let j = self.jacobian_from(&ev);
        let mut h = self.second_order_term(&ev);
        h.gemm_tr(1.0, &j, &j, 1.0);
        Ok(h)
    }

    /// `(mu, grad)` with `mu = W^T W / 2` and `grad = J^T W`.
    pub fn merit_and_grad(&self, prob: &dyn Problem, beta: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let ev = self.eval_rows(prob, beta, 1)?;
        let j = self.jacobian_from(&ev);
        let w = self.stack_w(ev.w, beta);
        Ok((0.5 * w.norm_squared(), j.tr_mul(&w)))
    }

    /// Full state at `beta`, with the Hessian only when asked for.
    pub fn state(&self, prob: &dyn Problem, beta: &DVector<f64>, hessian: bool) -> Result<MeritState> {
        let ev = self.eval_rows(prob, beta, if hessian { 2 } else { 1 })?;
        let j = self.jacobian_from(&ev);
        let h = hessian.then(|| self.hessian_from(&ev, &j));
        let w = self.stack_w(ev.w, beta);
        let grad = j.tr_mul(&w);
        Ok(MeritState {
            beta: beta.clone(),
            alpha: self.alpha(beta),
            mu: 0.5 * w.norm_squared(),
            w,
            grad,
            j,
            h,
        })
    }

    /// Residual of all rows (PDE then linear) at full coefficients `alpha`.
    pub fn residual_alpha(&self, prob: &dyn Problem, alpha: &DVector<f64>) -> Result<DVector<f64>> {
        let pde = self.pde_residual_alpha(prob, alpha)?;
        let lin = self.linear_residual(alpha);
        Ok(DVector::from_iterator(
            pde.len() + lin.len(),
            pde.iter().chain(lin.iter()).copied(),
        ))
    }

    /// PDE-row residual at full coefficients.
    pub fn pde_residual_alpha(&self, prob: &dyn Problem, alpha: &DVector<f64>) -> Result<DVector<f64>> {
        let vals: Vec<DVector<f64>> = self.full.iter().map(|m| accurate_matvec(m, alpha)).collect();
        let rows = par::try_map_indexed(self.exec, self.n_pde_rows(), |i| {
            let v: Vec<f64> = vals.iter().map(|c| c[i]).collect();
            let w = prob.residual(&self.pde_points[i], &v);
            if w.is_finite() {
                Ok(w)
            } else {
                Err(Error::Evaluation {
                    row: i,
                    node: self.pde_nodes[i],
                    what: "residual",
                })
            }
        })?;
        Ok(DVector::from_vec(rows))
    }

    /// Full-space Jacobian of all rows at `alpha`.
    pub fn jacobian_alpha(&self, prob: &dyn Problem, alpha: &DVector<f64>) -> Result<DMatrix<f64>> {
        let vals: Vec<DVector<f64>> = self.full.iter().map(|m| m * alpha).collect();
        let s = self.components.len();
        let d1 = par::try_map_indexed(self.exec, self.n_pde_rows(), |i| {
            let v: Vec<f64> = vals.iter().map(|c| c[i]).collect();
            let mut d = vec![0.0; s];
            prob.d1(&self.pde_points[i], &v, &mut d);
            if d.iter().all(|x| x.is_finite()) {
                Ok(d)
            } else {
                Err(Error::Evaluation {
                    row: i,
                    node: self.pde_nodes[i],
                    what: "first partials",
                })
            }
        })?;
        let np = self.n_pde_rows();
        let n = self.n_coefficients();
        let mut j = DMatrix::zeros(np + self.b.nrows(), n);
        for (m, a) in self.full.iter().enumerate() {
            for c in 0..n {
                for i in 0..np {
                    j[(i, c)] += d1[i][m] * a[(i, c)];
                }
            }
        }
        j.view_mut((np, 0), (self.b.nrows(), n)).copy_from(&self.b);
        Ok(j)
    }

    /// Evaluator for the trial function with coefficients `alpha`.
    pub fn interpolant<'a>(&'a self, alpha: &'a DVector<f64>) -> Interpolant<'a> {
        Interpolant {
            kernel: &self.kernel,
            centres: &self.centres,
            enrichment: &self.enrichment,
            alpha,
        }
    }
}

/// `[D_m phi | D_m h]` for every component over the given rows.
fn component_matrices(
    kernel: &KernelSpec,
    comps: &[DifferentialComponent],
    rows: &[Point],
    centres: &[Point],
    enrichment: &[Enrichment],
    exec: Execution,
) -> Result<Vec<DMatrix<f64>>> {
    let rbf = kernels::assemble_components(kernel, comps, rows, centres, exec)?;
    let nc = centres.len();
    Ok(rbf
        .into_iter()
        .zip(comps)
        .map(|(m, &comp)| {
            if enrichment.is_empty() {
                return m;
            }
            let mut out = m.resize_horizontally(nc + enrichment.len(), 0.0);
            for (e, f) in enrichment.iter().enumerate() {
                for (i, x) in rows.iter().enumerate() {
                    out[(i, nc + e)] = f.eval(comp, x);
                }
            }
            out
        })
        .collect())
}

/// Pivoted QR of `B^T`: null-space basis `Z` and particular solution.
pub fn eliminate(b: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<Elimination> {
    let m = b.nrows();
    let n = b.ncols();
    if m > n {
        return Err(Error::DegenerateLinearBlock { rank: n, rows: m });
    }
    let qr = PivotedQr::new(b.transpose());
    let rank = qr.rank(qr.default_rtol());
    if rank < m {
        return Err(Error::DegenerateLinearBlock { rank, rows: m });
    }
    // B = P R^T Q1^T, so B Q1 nu = b gives R^T nu = P^T b.
    let pb: Vec<f64> = qr.perm().iter().map(|&k| rhs[k]).collect();
    let nu = qr.solve_rt(&pb, m);
    let mut particular = vec![0.0; n];
    particular[..m].copy_from_slice(&nu);
    qr.apply_q(&mut particular);
    if particular.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateLinearBlock { rank, rows: m });
    }
    Ok(Elimination {
        z: qr.q_columns(m),
        particular: DVector::from_vec(particular),
        rank,
    })
}

/// The trial function `sum_j alpha_j phi(x - c_j) + sum_k alpha_k h_k(x)`.
pub struct Interpolant<'a> {
    kernel: &'a KernelSpec,
    centres: &'a [Point],
    enrichment: &'a [Enrichment],
    alpha: &'a DVector<f64>,
}

impl Interpolant<'_> {
    pub fn eval(&self, comp: DifferentialComponent, x: &Point) -> Result<f64> {
        let mut s = 0.0;
        for (j, c) in self.centres.iter().enumerate() {
            s += self.alpha[j] * self.kernel.eval_component(comp, x, c)?;
        }
        let nc = self.centres.len();
        for (e, f) in self.enrichment.iter().enumerate() {
            s += self.alpha[nc + e] * f.eval(comp, x);
        }
        Ok(s)
    }

    /// Values of several components at many points.
    pub fn eval_many(
        &self,
        comps: &[DifferentialComponent],
        points: &[Point],
        exec: Execution,
    ) -> Result<Vec<Vec<f64>>> {
        par::try_map_indexed(exec, points.len(), |i| {
            comps.iter().map(|&c| self.eval(c, &points[i])).collect()
        })
    }
}

#[cfg(test)]
mod tests;
