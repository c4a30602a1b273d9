//! Diagonal rescaling `alpha' = Gamma alpha` with `Gamma_ii = d2 mu / d alpha_i^2`.

use nalgebra::{DMatrix, DVector};

/// Relative clamp on the scaling diagonal.
pub const SCALING_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Scaled {
    pub j: DMatrix<f64>,
    pub h: Option<DMatrix<f64>>,
    pub grad: DVector<f64>,
    /// Diagonal of `Gamma`.
    pub diag: DVector<f64>,
}

impl Scaled {
    /// Maps a step in scaled variables back: `gamma = Gamma^-1 gamma'`.
    pub fn unscale(&self, step: &DVector<f64>) -> DVector<f64> {
        step.component_div(&self.diag)
    }
}

/// `Gamma_ii = max(|H_ii|, floor max_k |H_kk|)`.
pub fn scaling_diagonal(h: &DMatrix<f64>) -> DVector<f64> {
    let d = h.diagonal().abs();
    let max = d.max();
    let floor = if max > 0.0 { SCALING_FLOOR * max } else { 1.0 };
    d.map(|v| v.max(floor))
}

/// `J' = J Gamma^-1`, `A' = Gamma^-1 A Gamma^-1`, `grad' = Gamma^-1 grad`.
pub fn apply_scaling(j: &DMatrix<f64>, h: Option<&DMatrix<f64>>, grad: &DVector<f64>, diag: &DVector<f64>) -> Scaled {
    let inv = diag.map(|v| 1.0 / v);
    let mut js = j.clone();
    for (c, mut col) in js.column_iter_mut().enumerate() {
        col *= inv[c];
    }
    let hs = h.map(|h| {
        let mut m = h.clone();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                m[(r, c)] *= inv[r] * inv[c];
            }
        }
        m
    });
    Scaled {
        j: js,
        h: hs,
        grad: grad.component_mul(&inv),
        diag: diag.clone(),
    }
}
