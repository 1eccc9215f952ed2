//! Dormand–Prince 5(4) integrator for complex vector ODEs with PI step
//! control and fourth-order continuous (dense) output.

use crate::{c, CVector, Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step; `None` means the integration length.
    pub h_max: Option<f64>,
    pub max_steps: usize,
    /// Admissible change of ‖y‖ per unit time; steps exceeding it are
    /// rejected like steps failing the local error test.
    pub norm_rate: Option<f64>,
    /// Admissible deviation of ‖y‖ at dense-output samples from the linear
    /// blend of the step's end-point norms.
    pub dense_norm_tol: Option<f64>,
}

impl Dopri5Options {
    pub fn with_tol(tol: f64) -> Self {
        Dopri5Options { rtol: tol, atol: tol, h_max: None, max_steps: 50_000_000, norm_rate: None, dense_norm_tol: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn axpy(acc: &mut CVector, a: f64, x: &CVector) {
    let a = c(a, 0.0);
    acc.iter_mut().zip(x.iter()).for_each(|(y, xi)| *y += a * xi);
}

fn combo(y: &CVector, h: f64, terms: &[(f64, &CVector)]) -> CVector {
    let mut out = y.clone();
    for (a, k) in terms {
        axpy(&mut out, h * a, k);
    }
    out
}

fn error_norm(err: &CVector, y0: &CVector, y1: &CVector, opts: &Dopri5Options) -> f64 {
    let mut sum = 0.0;
    for i in 0..err.len() {
        let sc = opts.atol + opts.rtol * y0[i].norm().max(y1[i].norm());
        sum += (err[i].re / sc).powi(2) + (err[i].im / sc).powi(2);
    }
    (sum / (2 * err.len()) as f64).sqrt()
}

/// Integrates `dy/dt = f(t, y)` from `samples[0]` to the last sample time and
/// returns the dense-output solution at every sample (`samples[0]` gives `y0`).
pub fn integrate<F>(f: F, y0: &CVector, samples: &[f64], opts: &Dopri5Options) -> Result<(Vec<CVector>, Stats)>
where
    F: Fn(f64, &CVector) -> CVector,
{
    if samples.is_empty() {
        return Ok((Vec::new(), Stats::default()));
    }
    if samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Contract("sample times must be nondecreasing".into()));
    }
    let t_start = samples[0];
    let t_end = *samples.last().unwrap();
    let mut out = Vec::with_capacity(samples.len());
    let mut next = 0;
    while next < samples.len() && samples[next] <= t_start {
        out.push(y0.clone());
        next += 1;
    }
    let mut stats = Stats::default();
    if next == samples.len() {
        return Ok((out, stats));
    }

    let span = t_end - t_start;
    let h_max = opts.h_max.unwrap_or(span).min(span);
    let mut t = t_start;
    let mut y = y0.clone();
    let mut k1 = f(t, &y);
    stats.evaluations += 1;

    // Initial step (Hairer & Wanner, II.4).
    let mut h = {
        let sc = |v: &CVector| {
            let mut s = 0.0;
            for i in 0..v.len() {
                let w = opts.atol + opts.rtol * y[i].norm();
                s += (v[i].norm() / w).powi(2);
            }
            (s / v.len() as f64).sqrt()
        };
        let d0 = sc(&y);
        let d1 = sc(&k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = combo(&y, h0, &[(1.0, &k1)]);
        let f1 = f(t + h0, &y1);
        stats.evaluations += 1;
        let d2 = sc(&(&f1 - &k1)) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(h_max)
    };

    const SAFETY: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;
    const BETA: f64 = 0.04;
    let expo = 0.2 - 0.75 * BETA;
    let mut err_old = 1e-4_f64;
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Integration { t, reason: "maximum number of steps exceeded".into() });
        }
        if t + h > t_end || t_end - (t + h) < 1e-12 * h {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration { t, reason: format!("step size underflow (h = {h:e})") });
        }

        let y2 = combo(&y, h, &[(A21, &k1)]);
        let k2 = f(t + C2 * h, &y2);
        let y3 = combo(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = f(t + C3 * h, &y3);
        let y4 = combo(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = f(t + C4 * h, &y4);
        let y5 = combo(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = f(t + C5 * h, &y5);
        let y6 = combo(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = f(t + h, &y6);
        let y_new = combo(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y_new);
        stats.evaluations += 6;

        let mut err_vec = CVector::zeros(y.len());
        for (a, k) in [(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)] {
            axpy(&mut err_vec, h * a, k);
        }
        let mut err = error_norm(&err_vec, &y, &y_new, opts);
        if let Some(rate) = opts.norm_rate {
            let allowed = (rate * h).max(4.0 * f64::EPSILON);
            err = err.max((y_new.norm() - y.norm()).abs() / allowed);
        }
        if !err.is_finite() {
            return Err(Error::Integration { t, reason: "non-finite error estimate".into() });
        }

        // Continuous extension on [t, t + h], evaluated at the samples it covers.
        let t_new = t + h;
        let mut dense = Vec::new();
        if err <= 1.0 {
            let ydiff = &y_new - &y;
            let bspl = &k1 * c(h, 0.0) - &ydiff;
            let r3 = &ydiff - &k7 * c(h, 0.0) - &bspl;
            let mut r4 = CVector::zeros(y.len());
            for (d, k) in [(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)] {
                axpy(&mut r4, h * d, k);
            }
            let (n0, n1) = (y.norm(), y_new.norm());
            let mut j = next;
            while j < samples.len() && samples[j] <= t_new {
                let s = ((samples[j] - t) / h).clamp(0.0, 1.0);
                let s1 = 1.0 - s;
                let inner = &r3 + &r4 * c(s1, 0.0);
                let inner = &bspl + inner * c(s, 0.0);
                let inner = &ydiff + inner * c(s1, 0.0);
                let ys = &y + inner * c(s, 0.0);
                if let Some(tol) = opts.dense_norm_tol {
                    err = err.max((ys.norm() - (s1 * n0 + s * n1)).abs() / tol.max(4.0 * f64::EPSILON));
                }
                dense.push(ys);
                j += 1;
            }
        }

        if err <= 1.0 {
            stats.accepted += 1;
            next += dense.len();
            out.extend(dense);
            let fac = (SAFETY * err.max(1e-10).powf(-expo) * err_old.powf(BETA)).clamp(FAC_MIN, FAC_MAX);
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            err_old = err.max(1e-4);
            t = t_new;
            y = y_new;
            k1 = k7;
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = (SAFETY * err.powf(-expo)).max(FAC_MIN);
            h *= fac;
            last_rejected = true;
        }
    }
    while out.len() < samples.len() {
        out.push(y.clone());
    }
    Ok((out, stats))
}
