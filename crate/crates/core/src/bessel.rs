//! Bessel function J₀ and its zeros.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 8.0;
const SERIES_TERMS: usize = 30;

/// J₀(x): power series for |x| ≤ 8, Hankel asymptotic expansion beyond.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..SERIES_TERMS {
            term *= q / (k * k) as f64;
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        let (p, q) = hankel_pq(x);
        let chi = x - FRAC_PI_4;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// Asymptotic P₀, Q₀ summed up to the smallest term.
fn hankel_pq(x: f64) -> (f64, f64) {
    // a_k = Π_{j=1..k} (−(2j−1)²) / (k! 8^k)
    let mut a = 1.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= -odd * odd / (k as f64 * 8.0);
        let term = a / x.powi(k as i32);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // P = Σ (−1)^j a_{2j}/x^{2j}, Q = Σ (−1)^j a_{2j+1}/x^{2j+1}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    (p, q)
}

/// The `s`-th positive zero of J₀ (s ≥ 1), refined by bisection around the
/// McMahon estimate.
pub fn j0_zero(s: usize) -> f64 {
    assert!(s >= 1, "zeros are numbered from 1");
    let beta = (s as f64 - 0.25) * PI;
    let est = beta + 1.0 / (8.0 * beta) - 31.0 / (384.0 * beta.powi(3));
    let (mut lo, mut hi) = (est - 0.3, est + 0.3);
    let mut f_lo = j0(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = j0(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * mid {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Zero of J₀ closest to `x ≥ 0`.
pub fn nearest_j0_zero(x: f64) -> f64 {
    let s = ((x.abs() / PI + 0.25).round() as usize).max(1);
    let mut best = j0_zero(s);
    for cand in [s.saturating_sub(1), s + 1] {
        if cand >= 1 {
            let z = j0_zero(cand);
            if (z - x).abs() < (best - x).abs() {
                best = z;
            }
        }
    }
    best
}
