//! Oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `g^T x + x^T A x / 2`.
pub fn model(a: &DMatrix<f64>, g: &DVector<f64>, x: &DVector<f64>) -> f64 {
    g.dot(x) + 0.5 * x.dot(&(a * x))
}

fn model2(a: &DMatrix<f64>, g: &DVector<f64>, r: f64, t: f64) -> f64 {
    let (x, y) = (r * t.cos(), r * t.sin());
    g[0] * x + g[1] * y + 0.5 * (a[(0, 0)] * x * x + (a[(0, 1)] + a[(1, 0)]) * x * y + a[(1, 1)] * y * y)
}

/// Minimum of a 2D quadratic model over the disc of radius `delta`, by
/// exhaustive search on a polar grid followed by repeated local zooming
/// around the best grid-local minima.
pub fn grid_min(a: &DMatrix<f64>, g: &DVector<f64>, delta: f64) -> f64 {
    const NR: usize = 200;
    const NT: usize = 720;
    let dr = delta / NR as f64;
    let dt = std::f64::consts::TAU / NT as f64;
    let vals: Vec<Vec<f64>> = (0..=NR)
        .map(|i| (0..NT).map(|j| model2(a, g, i as f64 * dr, j as f64 * dt)).collect())
        .collect();
    let mut cands = Vec::new();
    for i in 0..=NR {
        // the centre row is a single point
        let nt = if i == 0 { 1 } else { NT };
        for j in 0..nt {
            let v = vals[i][j];
            let mut is_min = true;
            for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    let ii = i as i64 + di;
                    if ii < 0 || ii > NR as i64 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(NT as i64) as usize;
                    if vals[ii as usize][jj] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                cands.push((v, i, j));
            }
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0));
    cands
        .iter()
        .take(16)
        .map(|&(_, i, j)| zoom(a, g, delta, i as f64 * dr, j as f64 * dt, dr, dt))
        .fold(f64::INFINITY, f64::min)
}

fn zoom(a: &DMatrix<f64>, g: &DVector<f64>, delta: f64, mut r: f64, mut t: f64, mut wr: f64, mut wt: f64) -> f64 {
    let mut best = model2(a, g, r, t);
    // Pattern search: recentre on the best sample and shrink only once the
    // best sample is interior to the window, so long narrow valleys can be
    // followed.
    for _ in 0..400 {
        let (r0, t0) = (r, t);
        let mut edge = false;
        for i in -20i32..=20 {
            let rr = (r0 + wr * i as f64 / 10.0).clamp(0.0, delta);
            for j in -20i32..=20 {
                let tt = t0 + wt * j as f64 / 10.0;
                let v = model2(a, g, rr, tt);
                if v < best {
                    best = v;
                    r = rr;
                    t = tt;
                    edge = (i.abs() == 20 && rr > 0.0 && rr < delta) || j.abs() == 20;
                }
            }
        }
        if !edge {
            wr /= 5.0;
            wt /= 5.0;
        }
        if wr < 1e-15 * delta && wt < 1e-15 {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    PositiveDefinite,
    Indefinite,
    HardCase,
}

/// A seeded random 2D trust-region subproblem `(H, g, delta)`.
pub fn random_instance(kind: Kind, seed: u64) -> (DMatrix<f64>, DVector<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let q = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
    let (l1, l2) = match kind {
        Kind::PositiveDefinite => (rng.random_range(0.05..2.0), rng.random_range(0.05..5.0)),
        _ => (-rng.random_range(0.05..3.0), rng.random_range(-1.0..5.0)),
    };
    let (l1, l2) = (f64::min(l1, l2), f64::max(l1, l2));
    let h = q * Matrix2::new(l1, 0.0, 0.0, l2) * q.transpose();
    let h = DMatrix::from_column_slice(2, 2, h.as_slice());
    let mut delta = rng.random_range(0.1..3.0);
    let g = match kind {
        Kind::HardCase => {
            // Orthogonal to the lowest eigenvector, and small enough that
            // the shifted system's solution lies strictly inside.
            let q2 = q.column(1);
            let c = rng.random_range(0.1..1.0) * (l2 - l1);
            let g = DVector::from_vec(vec![c * q2[0], c * q2[1]]);
            let inside = c / (l2 - l1);
            if delta <= inside {
                delta = inside * rng.random_range(1.2..3.0);
            }
            g
        }
        _ => DVector::from_vec(vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]),
    };
    (h, g, delta)
}

/// A seeded Gauss-Newton instance `(J, g = J^T w, delta)`.
pub fn random_least_squares(seed: u64) -> (DMatrix<f64>, DVector<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
    let w = DVector::from_fn(2, |_, _| rng.random_range(-2.0..2.0));
    let delta = rng.random_range(0.05..3.0);
    (j.clone(), j.tr_mul(&w), delta)
}

/// KKT residual of a claimed global TRS solution with multiplier `lambda`:
/// stationarity, complementarity, feasibility and semidefiniteness.
pub fn kkt_residual(h: &DMatrix<f64>, g: &DVector<f64>, delta: f64, x: &DVector<f64>, lambda: f64) -> f64 {
    let n = g.len();
    let shifted = h + DMatrix::identity(n, n) * lambda;
    let stat = (&shifted * x + g).norm();
    let comp = (lambda * (delta - x.norm())).abs();
    let feas = (x.norm() - delta).max(0.0);
    let psd = (-SymmetricEigen::new(shifted).eigenvalues.min()).max(0.0);
    let dual = (-lambda).max(0.0);
    stat.max(comp).max(feas).max(psd).max(dual)
}
