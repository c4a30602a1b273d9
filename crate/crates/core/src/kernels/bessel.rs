//! Scaled modified Bessel functions of the second kind.
//!
//! The Matérn kernel only ever needs `g_mu(t) = t^mu K_mu(t)` for integer or
//! half-integer `mu`, so that is what this module provides. Half-integer
//! orders are elementary; integer orders start from `K_0` and `K_1`.

use std::f64::consts::{FRAC_PI_2, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this argument the power series is used for `K_0` and `K_1`.
const SERIES_LIMIT: f64 = 2.0;

fn bessel_i0_i1(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut s0, mut s1) = (t0, t1);
    for k in 1..60 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 < 1e-18 * s0 && t1 < 1e-18 * s1 {
            break;
        }
    }
    (s0, s1)
}

fn k0_k1_series(x: f64) -> (f64, f64) {
    let (i0, i1) = bessel_i0_i1(x);
    let q = 0.25 * x * x;
    let lg = (0.5 * x).ln();

    // K0 = -(ln(x/2) + gamma) I0 + sum_k (q^k / k!^2) H_k
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut s0 = 0.0;
    // K1 = 1/x + ln(x/2) I1 - (x/4) sum_k (psi(k+1) + psi(k+2)) q^k / (k! (k+1)!)
    let mut term1 = 1.0;
    let mut s1 = 0.0;
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            term *= q / (kf * kf);
            harmonic += 1.0 / kf;
            term1 *= q / (kf * (kf + 1.0));
        }
        let psi_sum = 2.0 * (-EULER_GAMMA + harmonic) + 1.0 / (kf + 1.0);
        s0 += term * harmonic;
        s1 += term1 * psi_sum;
        if k > 2 && term < 1e-18 && term1 < 1e-18 {
            break;
        }
    }
    let k0 = -(lg + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + lg * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// `e^x K_nu(x)` from `K_nu(x) = int_0^inf exp(-x cosh s) cosh(nu s) ds`.
///
/// The trapezoid rule converges geometrically for this integrand; h = 0.1
/// is far below the roundoff level for x > 1.
fn k_scaled_integral(nu: f64, x: f64) -> f64 {
    let h = 0.1;
    let mut sum = 0.5;
    let mut k = 1;
    loop {
        let s = k as f64 * h;
        let e = -x * (s.cosh() - 1.0);
        let term = e.exp() * (nu * s).cosh();
        sum += term;
        if e < -40.0 && term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    h * sum
}

/// `(K_0(x), K_1(x))` for `x > 0`.
pub fn k0_k1(x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0);
    if x <= SERIES_LIMIT {
        k0_k1_series(x)
    } else {
        let ex = (-x).exp();
        (ex * k_scaled_integral(0.0, x), ex * k_scaled_integral(1.0, x))
    }
}

/// `K_nu(x)` for `x > 0` by quadrature; used as a test reference.
pub fn k_quadrature(nu: f64, x: f64) -> f64 {
    (-x).exp() * k_scaled_integral(nu, x)
}

/// Gamma function at a positive integer or half-integer, given as `2 mu`.
pub fn gamma_half_integer(two_mu: u32) -> f64 {
    assert!(two_mu > 0);
    if two_mu.is_multiple_of(2) {
        (1..two_mu / 2).map(|k| k as f64).product()
    } else {
        // Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x)
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while 2.0 * x < two_mu as f64 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// `g_mu(0) = lim t->0 t^mu K_mu(t) = 2^(mu-1) Gamma(mu)` for `mu > 0`.
pub fn g_at_zero(two_mu: i32) -> Option<f64> {
    if two_mu <= 0 {
        return None;
    }
    let mu = two_mu as f64 / 2.0;
    Some(2f64.powf(mu - 1.0) * gamma_half_integer(two_mu as u32))
}

/// `g_mu(t) = t^mu K_mu(t)` for `t > 0` and `mu` an integer or half-integer,
/// given as `two_mu = 2 mu` (may be negative).
pub fn g(two_mu: i32, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    if two_mu < 0 {
        // K_{-mu} = K_mu
        return t.powi(two_mu) * g(-two_mu, t);
    }
    let (mut prev, mut cur, mut order2) = if two_mu % 2 == 1 {
        // g_{-1/2} expressed as t^2 g_{-1/2} = sqrt(pi/2) t e^-t to avoid 1/t
        let e = (FRAC_PI_2).sqrt() * (-t).exp();
        (t * e, e, 1)
    } else {
        let (k0, k1) = k0_k1(t);
        if two_mu == 0 {
            return k0;
        }
        // t^2 g_{-0} = t^2 K_0, g_1 = t K_1
        (t * t * k0, t * k1, 2)
    };
    // Here `prev` holds t^2 g_{order-1} and `cur` holds g_order.
    while order2 < two_mu {
        let mu = order2 as f64 / 2.0;
        let next = prev + 2.0 * mu * cur;
        prev = t * t * cur;
        cur = next;
        order2 += 2;
    }
    cur
}
