//! Dense helpers: Householder QR with column-norm pivoting, triangular
//! solves, sorted symmetric eigenpairs and condition numbers.

use nalgebra::{DMatrix, DVector};

/// `A P = Q R` with Householder reflectors stored below the diagonal.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    qr: DMatrix<f64>,
    tau: Vec<f64>,
    /// Column `k` of `A P` is column `perm[k]` of `A`.
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(mut a: DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let kmax = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![0.0; kmax];
        let mut vn1: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
        let mut vn2 = vn1.clone();
        let tol3z = f64::EPSILON.sqrt();

        for k in 0..kmax {
            // pivot: largest remaining column norm
            let p = (k..n)
                .max_by(|&i, &j| vn1[i].partial_cmp(&vn1[j]).expect("finite norms"))
                .expect("nonempty range");
            if p != k {
                a.swap_columns(p, k);
                perm.swap(p, k);
                vn1.swap(p, k);
                vn2.swap(p, k);
            }

            let data = a.as_mut_slice();
            let col = &mut data[k * m..(k + 1) * m];
            let alpha = col[k];
            let xnorm = col[k + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            let t = if xnorm == 0.0 {
                0.0
            } else {
                let beta = -alpha.signum() * alpha.hypot(xnorm);
                let scale = 1.0 / (alpha - beta);
                col[k + 1..].iter_mut().for_each(|v| *v *= scale);
                col[k] = beta;
                (beta - alpha) / beta
            };
            tau[k] = t;

            if t != 0.0 {
                let (head, tail) = data.split_at_mut((k + 1) * m);
                let v = &head[k * m + k..(k + 1) * m];
                for cj in tail.chunks_exact_mut(m) {
                    let cj = &mut cj[k..];
                    let mut w = cj[0];
                    for (x, vi) in cj[1..].iter().zip(&v[1..]) {
                        w += x * vi;
                    }
                    w *= t;
                    cj[0] -= w;
                    for (x, vi) in cj[1..].iter_mut().zip(&v[1..]) {
                        *x -= w * vi;
                    }
                }
            }

            // downdate the partial column norms
            for j in k + 1..n {
                if vn1[j] != 0.0 {
                    let r = a[(k, j)].abs() / vn1[j];
                    let temp = (1.0 - r * r).max(0.0);
                    let temp2 = temp * (vn1[j] / vn2[j]).powi(2);
                    if temp2 <= tol3z {
                        let nrm = if k + 1 < m {
                            a.view((k + 1, j), (m - k - 1, 1)).norm()
                        } else {
                            0.0
                        };
                        vn1[j] = nrm;
                        vn2[j] = nrm;
                    } else {
                        vn1[j] *= temp.sqrt();
                    }
                }
            }
        }
        PivotedQr { qr: a, tau, perm }
    }

    pub fn nrows(&self) -> usize {
        self.qr.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.qr.ncols()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// `|R_kk|` in factorization order (non-increasing up to roundoff).
    pub fn diag_abs(&self) -> Vec<f64> {
        (0..self.tau.len()).map(|k| self.qr[(k, k)].abs()).collect()
    }

    /// Numerical rank with relative tolerance `rtol` on the diagonal of R.
    pub fn rank(&self, rtol: f64) -> usize {
        let d = self.diag_abs();
        match d.first() {
            None => 0,
            Some(&0.0) => 0,
            Some(&d0) => d.iter().take_while(|&&v| v > rtol * d0).count(),
        }
    }

    /// Default rank tolerance `max(m, n) eps`.
    pub fn default_rtol(&self) -> f64 {
        self.nrows().max(self.ncols()) as f64 * f64::EPSILON
    }

    /// Upper-triangular factor, `min(m,n) x n`.
    pub fn r(&self) -> DMatrix<f64> {
        let k = self.tau.len();
        DMatrix::from_fn(k, self.ncols(), |i, j| if i <= j { self.qr[(i, j)] } else { 0.0 })
    }

    /// `x <- Q^T x`.
    pub fn apply_qt(&self, x: &mut [f64]) {
        for k in 0..self.tau.len() {
            self.reflect(k, x);
        }
    }

    /// `x <- Q x`.
    pub fn apply_q(&self, x: &mut [f64]) {
        for k in (0..self.tau.len()).rev() {
            self.reflect(k, x);
        }
    }

    fn reflect(&self, k: usize, x: &mut [f64]) {
        let t = self.tau[k];
        if t == 0.0 {
            return;
        }
        let m = self.nrows();
        let v = &self.qr.as_slice()[k * m + k + 1..(k + 1) * m];
        let mut w = x[k];
        for (xi, vi) in x[k + 1..].iter().zip(v) {
            w += xi * vi;
        }
        w *= t;
        x[k] -= w;
        for (xi, vi) in x[k + 1..].iter_mut().zip(v) {
            *xi -= w * vi;
        }
    }

    /// Columns `from..m` of the full orthogonal factor `Q`.
    pub fn q_columns(&self, from: usize) -> DMatrix<f64> {
        let m = self.nrows();
        let mut out = DMatrix::zeros(m, m - from);
        for (c, mut col) in out.column_iter_mut().enumerate() {
            let mut e = vec![0.0; m];
            e[from + c] = 1.0;
            self.apply_q(&mut e);
            col.copy_from_slice(&e);
        }
        out
    }

    /// Solves `R x = b` on the leading `k x k` block.
    pub fn solve_r(&self, b: &[f64], k: usize) -> Vec<f64> {
        let mut x = b[..k].to_vec();
        for i in (0..k).rev() {
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(k).skip(i + 1) {
                s -= self.qr[(i, j)] * xj;
            }
            x[i] = s / self.qr[(i, i)];
        }
        x
    }

    /// Solves `R^T x = b` on the leading `k x k` block.
    pub fn solve_rt(&self, b: &[f64], k: usize) -> Vec<f64> {
        let mut x = b[..k].to_vec();
        for i in 0..k {
            let col = self.qr.column(i);
            let mut s = x[i];
            for j in 0..i {
                s -= col[j] * x[j];
            }
            x[i] = s / col[i];
        }
        x
    }
}

/// `A x` with compensated dot products (error-free transforms), accurate
/// to about one rounding regardless of cancellation. Used for residuals,
/// where the plain product sets the noise floor of Newton-type iterations.
pub fn accurate_matvec(a: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    let mut hi = vec![0.0f64; m];
    let mut lo = vec![0.0f64; m];
    for j in 0..n {
        let xj = x[j];
        let col = a.column(j);
        for i in 0..m {
            let p = col[i] * xj;
            let pe = col[i].mul_add(xj, -p);
            let s = hi[i] + p;
            let bb = s - hi[i];
            let se = (hi[i] - (s - bb)) + (p - bb);
            hi[i] = s;
            lo[i] += pe + se;
        }
    }
    DVector::from_iterator(m, hi.iter().zip(&lo).map(|(h, l)| h + l))
}

/// Eigenpairs of a symmetric matrix sorted by ascending eigenvalue.
pub fn sorted_symmetric_eigen(h: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// 2-norm condition number from singular values.
pub fn cond_svd(a: &DMatrix<f64>) -> f64 {
    let s = a.singular_values();
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Condition number of a symmetric matrix from its eigenvalues.
pub fn cond_symmetric(h: &DMatrix<f64>) -> f64 {
    let ev = h.symmetric_eigenvalues();
    let max = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Cheap 2-norm condition estimate for large square matrices: power
/// iteration on `A^T A` for the largest singular value and on its inverse
/// (through LU factorizations) for the smallest.
pub fn cond_estimate(a: &DMatrix<f64>, iters: usize) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 1.0;
    }
    let start = |phase: f64| {
        let x = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * phase).fract());
        let nx = x.norm();
        x / nx
    };
    let mut x = start(0.618_034);
    let mut smax = 0.0;
    for _ in 0..iters {
        let y = a.tr_mul(&(a * &x));
        smax = y.norm().sqrt();
        x = &y / y.norm();
    }
    let lu = a.clone().lu();
    let lut = a.transpose().lu();
    let mut x = start(0.414_214);
    let mut inv = 0.0;
    for _ in 0..iters {
        // (A^T A)^{-1} x = A^{-1} A^{-T} x
        let Some(w) = lut.solve(&x).and_then(|z| lu.solve(&z)) else {
            return f64::INFINITY;
        };
        let nw = w.norm();
        if !nw.is_finite() {
            return f64::INFINITY;
        }
        inv = nw.sqrt();
        x = w / nw;
    }
    smax * inv
}

#[cfg(test)]
mod tests {
    #[test]
    fn accurate_matvec_survives_cancellation() {
        let a = DMatrix::from_row_slice(2, 3, &[1e16, 1.0, -1e16, 0.5, 0.25, 0.125]);
        let x = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let y = accurate_matvec(&a, &x);
        assert_eq!(y[0], 1.0);
        assert_eq!(y[1], 0.875);
        assert_eq!((&a * &x)[0], 0.0);
    }

    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() - 0.5)
    }

    fn permuted(a: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, perm[j])])
    }

    #[test]
    fn reconstructs_input() {
        for (m, n) in [(7, 4), (4, 7), (6, 6), (30, 12)] {
            let a = random(m, n, (m * 10 + n) as u64);
            let qr = PivotedQr::new(a.clone());
            let q = qr.q_columns(0);
            let recon = q.columns(0, m.min(n)) * qr.r();
            assert!((recon - permuted(&a, qr.perm())).amax() < 1e-14);
            assert!((q.transpose() * &q - DMatrix::identity(m, m)).amax() < 1e-14);
            let d = qr.diag_abs();
            assert!(d.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn detects_rank() {
        let b = random(8, 3, 1);
        let c = random(3, 10, 2);
        let qr = PivotedQr::new(&b * &c);
        assert_eq!(qr.rank(qr.default_rtol()), 3);
    }

    #[test]
    fn triangular_solves() {
        let a = random(9, 9, 5);
        let qr = PivotedQr::new(a);
        let x = random(9, 1, 6);
        let r = qr.r();
        let b = &r * &x;
        let y = qr.solve_r(b.as_slice(), 9);
        assert!(y.iter().zip(x.iter()).all(|(u, v)| (u - v).abs() < 1e-12));
        let b = r.transpose() * &x;
        let y = qr.solve_rt(b.as_slice(), 9);
        assert!(y.iter().zip(x.iter()).all(|(u, v)| (u - v).abs() < 1e-12));
    }

    #[test]
    fn qt_inverts_q() {
        let qr = PivotedQr::new(random(10, 6, 8));
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut y = x.clone();
        qr.apply_q(&mut y);
        qr.apply_qt(&mut y);
        assert!(y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn eigen_sorted() {
        let a = random(6, 6, 3);
        let h = &a + a.transpose();
        let (vals, vecs) = sorted_symmetric_eigen(&h);
        assert!(vals.as_slice().windows(2).all(|w| w[0] <= w[1]));
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((recon - h).amax() < 1e-13);
    }

    #[test]
    fn condition_numbers() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10.0, 100.0, 1000.0]));
        assert!((cond_svd(&d) - 1000.0).abs() < 1e-9);
        assert!((cond_symmetric(&d) - 1000.0).abs() < 1e-9);
        let a = random(40, 40, 11);
        let exact = cond_svd(&a);
        let est = cond_estimate(&a, 30);
        assert!(est <= exact * 1.0001 && est >= exact / 10.0, "{est} vs {exact}");
    }
}
