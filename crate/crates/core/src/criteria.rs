//! Adiabaticity functionals, exact evolution bounds and condition verdicts.
//!
//! All functionals are evaluated on a [`FrameTrack`] in the discrete
//! parallel-transport gauge. Pair series are stored for `k < m` with
//! `A_km = |⟨m|k̇⟩| / γ̇_km`; the reverse orientation only flips the sign.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::propagator::{defects, StateTrajectory};
use crate::schedules::ScheduleSpec;
use crate::spectral::FrameTrack;
use crate::{spectral_norm, Error, Result};

/// Default reading of "≪": `lhs ≤ 0.1 · rhs`.
pub const DEFAULT_MARGIN: f64 = 0.1;
pub const DEFAULT_NOISE_TOL: f64 = 1e-6;

const FIXED_POINT_DAMPING: f64 = 0.5;
const FIXED_POINT_RTOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 200;

/// Scalar time series with its largest finite magnitude.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Series {
    #[serde(skip)]
    pub values: Vec<f64>,
    pub max_abs: f64,
    /// Number of samples carrying a ±∞ pole marker.
    pub poles: usize,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Self {
        let max_abs = values.iter().filter(|v| v.is_finite()).fold(0.0_f64, |a, v| a.max(v.abs()));
        let poles = values.iter().filter(|v| v.is_infinite()).count();
        Series { values, max_abs, poles }
    }
}

/// Series for one level pair `(k, m)`, `k < m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairSeries {
    pub k: usize,
    pub m: usize,
    #[serde(flatten)]
    pub series: Series,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    A0,
    A1,
    A2,
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|k| (k + 1..n).map(move |m| (k, m))).collect()
}

/// Reduces a phase increment to (−π/2, π/2]; sign flips of a real
/// coupling through zero carry no phase velocity.
fn reduce_half_turn(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let r = x - pi * (x / pi).round();
    if r <= -0.5 * pi {
        r + pi
    } else {
        r
    }
}

/// Three-point derivative on a non-uniform grid from phase increments
/// `inc[i] = φ_{i+1} − φ_i`.
fn derivative_from_increments(times: &[f64], inc: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        let d = inc[0] / (times[1] - times[0]);
        return vec![d, d];
    }
    for i in 1..n - 1 {
        let hm = times[i] - times[i - 1];
        let hp = times[i + 1] - times[i];
        out[i] = (hm * hm * inc[i] + hp * hp * inc[i - 1]) / (hm * hp * (hm + hp));
    }
    let (h1, h2) = (times[1] - times[0], times[2] - times[1]);
    let (f1, f2) = (inc[0], inc[0] + inc[1]);
    out[0] = (h1 + h2) / (h1 * h2) * f1 - h1 / (h2 * (h1 + h2)) * f2;
    let (h1, h2) = (times[n - 2] - times[n - 3], times[n - 1] - times[n - 2]);
    // f relative to the last sample
    let (g1, g2) = (-inc[n - 2], -inc[n - 2] - inc[n - 3]);
    out[n - 1] = -((h1 + h2) / (h1 * h2) * g1 - h2 / (h1 * (h1 + h2)) * g2);
    out
}

fn invariant_increment(track: &FrameTrack, m: usize, k: usize, i: usize, j: usize, scale: f64) -> f64 {
    let a = track.couplings[i].c[(m, k)];
    let b = track.couplings[j].c[(m, k)];
    if a.norm() <= 1e-12 * scale || b.norm() <= 1e-12 * scale {
        return 0.0;
    }
    let (fi, fj) = (&track.frames[i], &track.frames[j]);
    let link = |n: usize| fi.vector(n).dotc(&fj.vector(n)).arg();
    reduce_half_turn((b * a.conj()).arg() - link(k) + link(m))
}

fn power_defect(h: &[f64], p: i32) -> f64 {
    h.iter().sum::<f64>().powi(p) - h.iter().map(|x| x.powi(p)).sum::<f64>()
}

/// Removes the odd-order defect b·h³ + d·h⁵ of single-step increments. The
/// coefficients come from four-step windows: the two two-step increments and
/// the four-step increment are compared against the single steps they cover.
/// Each step uses the mean of the two windows centred on its end points.
fn corrected_increments(track: &FrameTrack, m: usize, k: usize, scale: f64, single: &[f64]) -> Vec<f64> {
    let times = track.times();
    let len = times.len();
    let coeff: Vec<(f64, f64)> = (0..len - 4)
        .map(|j| {
            let h = [
                times[j + 1] - times[j],
                times[j + 2] - times[j + 1],
                times[j + 3] - times[j + 2],
                times[j + 4] - times[j + 3],
            ];
            let pair = |a: usize| {
                let d = invariant_increment(track, m, k, j + a, j + a + 2, scale);
                reduce_half_turn(d - single[j + a] - single[j + a + 1])
            };
            let quad = invariant_increment(track, m, k, j, j + 4, scale);
            let quad = reduce_half_turn(quad - single[j..j + 4].iter().sum::<f64>());
            let l1 = pair(0) + pair(2);
            let (a11, a12) = (power_defect(&h[..2], 3) + power_defect(&h[2..], 3), power_defect(&h[..2], 5) + power_defect(&h[2..], 5));
            let (a21, a22) = (power_defect(&h, 3), power_defect(&h, 5));
            let det = a11 * a22 - a12 * a21;
            if det.abs() <= f64::MIN_POSITIVE {
                return (l1 / a11, 0.0);
            }
            ((l1 * a22 - a12 * quad) / det, (a11 * quad - a21 * l1) / det)
        })
        .collect();
    (0..len - 1)
        .map(|i| {
            let lo = i.saturating_sub(2).min(len - 5);
            let hi = i.saturating_sub(1).min(len - 5);
            let b = 0.5 * (coeff[lo].0 + coeff[hi].0);
            let d = 0.5 * (coeff[lo].1 + coeff[hi].1);
            let h = times[i + 1] - times[i];
            single[i] - b * h.powi(3) - d * h.powi(5)
        })
        .collect()
}

/// Gauge-invariant transport rate d/dt arg⟨m|k̇⟩ − Im⟨k|k̇⟩ + Im⟨m|ṁ⟩ for
/// every ordered pair and time, indexed `[(m, k)]`.
///
/// Per-step increments of arg⟨m|k̇⟩ corrected by the overlap phases of both
/// levels carry an odd-order defect from the discrete transport, removed by
/// [`corrected_increments`].
pub fn arg_rates(track: &FrameTrack) -> Vec<DMatrix<f64>> {
    let n = track.dim();
    let len = track.len();
    let times = track.times();
    let mut out = vec![DMatrix::zeros(n, n); len];
    for m in 0..n {
        for k in 0..n {
            if m == k {
                continue;
            }
            let scale = track.couplings.iter().map(|cm| cm.c[(m, k)].norm()).fold(0.0, f64::max);
            let single: Vec<f64> =
                (0..len.saturating_sub(1)).map(|i| invariant_increment(track, m, k, i, i + 1, scale)).collect();
            let inc = if len >= 5 {
                corrected_increments(track, m, k, scale, &single)
            } else {
                single
            };
            for (i, d) in derivative_from_increments(times, &inc).into_iter().enumerate() {
                out[i][(m, k)] = d;
            }
        }
    }
    out
}

/// γ̇⁽¹⁾_km = i(⟨k|k̇⟩ − ⟨m|ṁ⟩) − (E_k − E_m) + d/dt arg⟨m|k̇⟩, indexed `[(k, m)]`.
pub fn gamma1(track: &FrameTrack) -> Vec<DMatrix<f64>> {
    let n = track.dim();
    let rates = arg_rates(track);
    track
        .frames
        .iter()
        .zip(rates)
        .map(|(f, rate)| {
            DMatrix::from_fn(n, n, |k, m| if k == m { 0.0 } else { -(f.energies[k] - f.energies[m]) + rate[(m, k)] })
        })
        .collect()
}

/// Solves x_j = g_j + Σ_i w_i / x_i (j ≠ m) by damped fixed-point iteration
/// starting at x = g, on the branch where every x_j has the sign of g_j.
/// Entries at index `m` are ignored.
pub fn second_order_fixed_point(g: &[f64], w: &[f64], m: usize, t: f64) -> Result<Vec<f64>> {
    let n = g.len();
    let coupling = (0..n).filter(|&j| j != m).map(|j| w[j]).sum::<f64>().sqrt();
    // Start at γ̇⁽¹⁾ unless it vanishes against the coupling scale; there the
    // iteration from γ̇⁽¹⁾ would divide by (nearly) zero.
    let mut x: Vec<f64> = g
        .iter()
        .map(|&gj| if gj.abs() <= 1e-8 * coupling { if gj < 0.0 { -coupling } else { coupling } } else { gj })
        .collect();
    if (0..n).any(|j| j != m && (x[j] == 0.0 || !x[j].is_finite())) {
        return Err(Error::Convergence { t });
    }
    let same_branch = |x: &[f64]| (0..n).filter(|&j| j != m).all(|j| (x[j] < 0.0) == (g[j] < 0.0));
    for _ in 0..FIXED_POINT_MAX_ITER {
        let s: f64 = (0..n).filter(|&j| j != m).map(|j| w[j] / x[j]).sum();
        let mut change = 0.0_f64;
        for j in (0..n).filter(|&j| j != m) {
            let target = g[j] + s;
            let next = (1.0 - FIXED_POINT_DAMPING) * x[j] + FIXED_POINT_DAMPING * target;
            change = change.max(((next - x[j]) / next).abs());
            x[j] = next;
        }
        if !change.is_finite() {
            break;
        }
        if change < FIXED_POINT_RTOL {
            if same_branch(&x) {
                return Ok(x);
            }
            break;
        }
    }
    branch_root(g, w, m).ok_or(Error::Convergence { t })
}

/// Every x_j equals g_j + s for one shift s solving s = Σ w_j / (g_j + s).
/// Between the poles −g_j that bracket zero the right side minus s is
/// monotone, so that interval holds exactly one root and it keeps sign(x_j) = sign(g_j).
fn branch_root(g: &[f64], w: &[f64], m: usize) -> Option<Vec<f64>> {
    let idx: Vec<usize> = (0..g.len()).filter(|&j| j != m).collect();
    let f = |s: f64| s - idx.iter().map(|&j| w[j] / (g[j] + s)).sum::<f64>();
    let lo_pole = idx.iter().filter(|&&j| g[j] >= 0.0).map(|&j| -g[j]).fold(f64::NEG_INFINITY, f64::max);
    let hi_pole = idx.iter().filter(|&&j| g[j] < 0.0).map(|&j| -g[j]).fold(f64::INFINITY, f64::min);
    let total: f64 = idx.iter().map(|&j| w[j]).sum();
    let reach = 1.0 + total.sqrt() + idx.iter().map(|&j| g[j].abs()).fold(0.0, f64::max);
    let mut lo = if lo_pole.is_finite() { lo_pole } else { hi_pole.min(0.0) - reach };
    let mut hi = if hi_pole.is_finite() { hi_pole } else { lo_pole.max(0.0) + reach };
    while !lo_pole.is_finite() && f(lo) > 0.0 {
        lo -= 2.0 * (hi - lo);
    }
    while !hi_pole.is_finite() && f(hi) < 0.0 {
        hi += 2.0 * (hi - lo);
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let x: Vec<f64> = (0..g.len()).map(|j| if j == m { g[j] } else { g[j] + s }).collect();
    let ok = idx.iter().all(|&j| x[j].is_finite() && x[j] != 0.0 && (x[j] < 0.0) == (g[j] < 0.0));
    ok.then_some(x)
}

/// Two-level closed form of the second-order rate: root of x² − g x − w = 0
/// with the sign of g.
pub fn second_order_closed_form(g: f64, w: f64) -> f64 {
    0.5 * (g + g.signum() * (g * g + 4.0 * w).sqrt())
}

/// γ̇⁽²⁾ for every time: `out[i][(k, m)]` solves the recursion for level `m`.
pub fn gamma2(track: &FrameTrack, g1: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let n = track.dim();
    track
        .couplings
        .iter()
        .zip(g1)
        .map(|(cm, g)| {
            let mut out = DMatrix::zeros(n, n);
            for m in 0..n {
                let gcol: Vec<f64> = (0..n).map(|j| g[(j, m)]).collect();
                let w: Vec<f64> = (0..n).map(|j| if j == m { 0.0 } else { cm.c[(j, m)].norm_sqr() }).collect();
                let x = second_order_fixed_point(&gcol, &w, m, cm.t)?;
                for k in (0..n).filter(|&k| k != m) {
                    out[(k, m)] = x[k];
                }
            }
            Ok(out)
        })
        .collect()
}

/// θ̇⁽²⁾_m − θ̇⁽¹⁾_m = −Σ_{k≠m} |⟨m|k̇⟩|² / γ̇⁽²⁾_km per time and level.
pub fn second_order_corrections(track: &FrameTrack) -> Result<Vec<Vec<f64>>> {
    let n = track.dim();
    let g2 = gamma2(track, &gamma1(track))?;
    Ok(track
        .couplings
        .iter()
        .zip(&g2)
        .map(|(cm, g)| {
            (0..n)
                .map(|m| (0..n).filter(|&k| k != m).map(|k| -cm.c[(m, k)].norm_sqr() / g[(k, m)]).sum())
                .collect()
        })
        .collect())
}

fn ratio_with_pole(num: f64, den: f64, scale: f64) -> f64 {
    if den.abs() <= 1e-8 * scale {
        if den < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Per-pair series of the chosen functional. A⁽⁰⁾ is reported as a
/// magnitude, A⁽¹⁾ and A⁽²⁾ signed.
pub fn a_functionals(track: &FrameTrack, choice: Functional) -> Result<Vec<PairSeries>> {
    let n = track.dim();
    let g1 = if choice == Functional::A0 { Vec::new() } else { gamma1(track) };
    let g2 = if choice == Functional::A2 { gamma2(track, &g1)? } else { Vec::new() };
    Ok(pairs(n)
        .into_iter()
        .map(|(k, m)| {
            let values = (0..track.len())
                .map(|i| {
                    let f = &track.frames[i];
                    let coupling = track.couplings[i].c[(m, k)].norm();
                    let spacing = f.energies[m] - f.energies[k];
                    match choice {
                        Functional::A0 => coupling / spacing.abs(),
                        Functional::A1 => ratio_with_pole(coupling, g1[i][(k, m)], spacing.abs()),
                        Functional::A2 => coupling / g2[i][(k, m)],
                    }
                })
                .collect();
            PairSeries { k, m, series: Series::new(values) }
        })
        .collect())
}

/// Left-hand side of the usual condition for level `n`:
/// Σ_{m≠n} |⟨m|ṅ⟩ / ω_mn| at every time.
pub fn usual_condition(track: &FrameTrack, n: usize) -> Result<Series> {
    if n >= track.dim() {
        return Err(Error::invalid("level", format!("index {n} out of range")));
    }
    let values = track
        .frames
        .iter()
        .zip(&track.couplings)
        .map(|(f, cm)| {
            (0..f.dim())
                .filter(|&m| m != n)
                .map(|m| cm.c[(m, n)].norm() / (f.energies[m] - f.energies[n]).abs())
                .sum()
        })
        .collect();
    Ok(Series::new(values))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OmegaSummary {
    /// Ω = max_{t, k≠m} |⟨m|k̇⟩|.
    pub omega: f64,
    /// Ω_n = max_{t, m≠n} |⟨n|ṁ⟩|.
    pub omega_n: f64,
    /// max_t ‖Ḣ‖ / ΔE, an upper bound on Ω.
    pub hdot_bound: f64,
}

pub fn omega_max(spec: &ScheduleSpec, track: &FrameTrack, n: usize) -> Result<OmegaSummary> {
    let mut omega = 0.0_f64;
    let mut omega_n = 0.0_f64;
    let mut hdot_bound = 0.0_f64;
    for (f, cm) in track.frames.iter().zip(&track.couplings) {
        omega = omega.max(cm.max_offdiag());
        for m in (0..f.dim()).filter(|&m| m != n) {
            omega_n = omega_n.max(cm.c[(n, m)].norm());
        }
        hdot_bound = hdot_bound.max(spectral_norm(&spec.hdot(f.t)?) / f.gap);
    }
    Ok(OmegaSummary { omega, omega_n, hdot_bound })
}

/// Discrete total variation Σ|ΔA|.
pub fn total_variation(series: &[f64]) -> Result<f64> {
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::Pole { t: i as f64 });
    }
    Ok(series.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
}

/// Indices of confirmed interior extrema; reversals smaller than
/// `noise_tol · max|series|` are ignored.
pub fn extrema(series: &[f64], noise_tol: f64) -> Vec<usize> {
    let scale = series.iter().filter(|v| v.is_finite()).fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut out = Vec::new();
    if scale == 0.0 || series.len() < 3 {
        return out;
    }
    let thr = noise_tol * scale;
    let mut dir = 0i8;
    let mut ext = 0usize;
    for i in 1..series.len() {
        let v = series[i];
        if !v.is_finite() {
            continue;
        }
        match dir {
            0 => {
                if v > series[0] + thr {
                    dir = 1;
                    ext = i;
                } else if v < series[0] - thr {
                    dir = -1;
                    ext = i;
                }
            }
            1 => {
                if v >= series[ext] {
                    ext = i;
                } else if v < series[ext] - thr {
                    out.push(ext);
                    dir = -1;
                    ext = i;
                }
            }
            _ => {
                if v <= series[ext] {
                    ext = i;
                } else if v > series[ext] + thr {
                    out.push(ext);
                    dir = 1;
                    ext = i;
                }
            }
        }
    }
    out
}

/// Number of monotonicity changes (M − 1) of a sampled series.
pub fn monotonicity_changes(series: &[f64], noise_tol: f64) -> usize {
    extrema(series, noise_tol).len()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ZenoBound {
    /// 1 − cos(√(N−1) Ω_n T), with the argument clamped at π.
    pub cosine: f64,
    /// (N−1) Ω_n² T² / 2.
    pub quadratic: f64,
}

pub fn zeno_bound(omega_n: f64, n_levels: usize, horizon: f64) -> ZenoBound {
    let k = (n_levels as f64 - 1.0).max(0.0);
    let arg = (k.sqrt() * omega_n * horizon).min(std::f64::consts::PI);
    ZenoBound { cosine: 1.0 - arg.cos(), quadratic: 0.5 * k * (omega_n * horizon).powi(2) }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PointFixBounds {
    /// Bound on b₋ = max_t max_{m≠n} |b_m(t)| (θ⁽¹⁾ phases); ∞ when vacuous.
    pub b_minus: f64,
    /// Bound on 1 − min_t |b_n(t)| (θ⁽¹⁾ phases).
    pub one_minus_b_plus: f64,
    /// Same bounds with the terms removable by θ⁽²⁾ phases dropped.
    pub b_minus_theta2: f64,
    pub one_minus_b_plus_theta2: f64,
    /// The b₋ denominator is not positive.
    pub b_minus_vacuous: bool,
    /// The 1 − b₊ bound is ≥ 1 and carries no information.
    pub one_minus_b_plus_vacuous: bool,
}

pub fn pointfix_bounds(a_max: f64, tv: f64, omega: f64, horizon: f64, n_levels: usize) -> PointFixBounds {
    let nf = n_levels as f64;
    let aot = a_max * omega * horizon;
    let num = 2.0 * a_max + tv + (nf - 2.0) * aot;
    let den_common = 1.0 - (nf - 2.0) * (a_max + tv) - (nf - 2.0).powi(2) * aot;
    let den1 = den_common - (nf - 1.0) * aot;
    let frac = |d: f64| if d > 0.0 { num / d } else { f64::INFINITY };
    let inner = a_max + (nf - 1.0).sqrt() * tv + (nf - 2.0) * aot;
    let quad = 2.0 * (nf - 1.0) * inner * inner;
    let one_minus_b_plus = 2.0 * (nf - 1.0) * aot + quad;
    PointFixBounds {
        b_minus: frac(den1),
        one_minus_b_plus,
        b_minus_theta2: frac(den_common),
        one_minus_b_plus_theta2: quad,
        b_minus_vacuous: den1 <= 0.0,
        one_minus_b_plus_vacuous: !(one_minus_b_plus < 1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Σ|⟨m|ṅ⟩/ω_mn| ≪ 1.
    Usual,
    /// A + √N ∫|A′| + (√N + N − 2) A Ω T ≪ 1/√N.
    EqNotOptimized,
    /// A⁽¹⁾ + √(N−2) A⁽¹⁾ Ω T ≪ 1/N on monotone pieces.
    EqMonotonic,
    /// 2|A⁽¹⁾| ≪ 1/M² (two levels only).
    EqTwoLevelM,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub satisfied: bool,
}

impl Verdict {
    pub fn new(lhs: f64, rhs: f64, margin: f64) -> Self {
        Verdict { lhs, rhs, margin, satisfied: lhs.is_finite() && lhs <= margin * rhs }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriteriaOptions {
    pub margin: f64,
    pub noise_tol: f64,
    /// Allow splitting [0, T] into monotone pieces for `EqMonotonic`.
    pub subdivide: bool,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        CriteriaOptions { margin: DEFAULT_MARGIN, noise_tol: DEFAULT_NOISE_TOL, subdivide: true }
    }
}

/// Every functional for one tracked level, plus summary parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub level: usize,
    pub dim: usize,
    pub horizon: f64,
    #[serde(skip)]
    pub times: Vec<f64>,
    pub usual: Series,
    pub a0: Vec<PairSeries>,
    pub a1: Vec<PairSeries>,
    pub a2: Option<Vec<PairSeries>>,
    pub a2_error: Option<String>,
    /// max_t Σ_{m≠n} |A⁽⁰⁾_mn|.
    pub a0_level_sum_max: f64,
    pub omega: f64,
    pub omega_n: f64,
    pub hdot_bound: f64,
    pub min_gap: f64,
    /// A(T) from A⁽¹⁾ (finite samples only).
    pub a_max: f64,
    pub a_has_pole: bool,
    /// ∫|A′| = max over pairs of the A⁽¹⁾ total variation; `None` across a pole.
    pub tv: Option<f64>,
    /// Monotonicity changes (M − 1) of each signed A⁽¹⁾ pair series.
    pub m_count: Vec<usize>,
    #[serde(skip)]
    pub coupling_max: Vec<f64>,
}

impl CriteriaReport {
    /// Largest M − 1 across pairs.
    pub fn max_m_count(&self) -> usize {
        self.m_count.iter().copied().max().unwrap_or(0)
    }
}

/// Evaluates every functional on a frame track for level `n`.
pub fn evaluate(spec: &ScheduleSpec, track: &FrameTrack, n: usize, opts: &CriteriaOptions) -> Result<CriteriaReport> {
    let usual = usual_condition(track, n)?;
    let a0 = a_functionals(track, Functional::A0)?;
    let a1 = a_functionals(track, Functional::A1)?;
    let (a2, a2_error) = match a_functionals(track, Functional::A2) {
        Ok(s) => (Some(s), None),
        Err(e @ Error::Convergence { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let omega = omega_max(spec, track, n)?;
    let dim = track.dim();
    let a0_level_sum_max = track
        .frames
        .iter()
        .zip(&track.couplings)
        .map(|(f, cm)| {
            (0..dim)
                .filter(|&m| m != n)
                .map(|m| cm.c[(n, m)].norm() / (f.energies[m] - f.energies[n]).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let a_max = a1.iter().map(|p| p.series.max_abs).fold(0.0, f64::max);
    let a_has_pole = a1.iter().any(|p| p.series.poles > 0);
    let tv = a1
        .iter()
        .map(|p| total_variation(&p.series.values))
        .collect::<Result<Vec<_>>>()
        .ok()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    let m_count = a1.iter().map(|p| monotonicity_changes(&p.series.values, opts.noise_tol)).collect();
    Ok(CriteriaReport {
        level: n,
        dim,
        horizon: track.grid.end() - track.grid.start(),
        times: track.times().to_vec(),
        usual,
        a0,
        a1,
        a2,
        a2_error,
        a0_level_sum_max,
        omega: omega.omega,
        omega_n: omega.omega_n,
        hdot_bound: omega.hdot_bound,
        min_gap: crate::spectral::min_gap(&track.frames),
        a_max,
        a_has_pole,
        tv,
        m_count,
        coupling_max: track.couplings.iter().map(|c| c.max_offdiag()).collect(),
    })
}

/// Renders one condition as a verdict.
pub fn check_condition(report: &CriteriaReport, which: Condition, opts: &CriteriaOptions) -> Result<Verdict> {
    let nf = report.dim as f64;
    let margin = opts.margin;
    let big_t = report.horizon;
    Ok(match which {
        Condition::Usual => Verdict::new(report.usual.max_abs, 1.0, margin),
        Condition::EqNotOptimized => {
            let lhs = match (report.a_has_pole, report.tv) {
                (false, Some(tv)) => {
                    let a = report.a_max;
                    a + nf.sqrt() * tv + (nf.sqrt() + nf - 2.0) * a * report.omega * big_t
                }
                _ => f64::INFINITY,
            };
            Verdict::new(lhs, 1.0 / nf.sqrt(), margin)
        }
        Condition::EqMonotonic => {
            if report.a_has_pole {
                return Ok(Verdict::new(f64::INFINITY, 1.0 / nf, margin));
            }
            let mut cuts: Vec<usize> = report.a1.iter().flat_map(|p| extrema(&p.series.values, opts.noise_tol)).collect();
            if !cuts.is_empty() && !opts.subdivide {
                return Err(Error::Precondition(
                    "A⁽¹⁾ is not monotone on [0, T] and interval subdivision is disabled".into(),
                ));
            }
            cuts.push(0);
            cuts.push(report.times.len() - 1);
            cuts.sort_unstable();
            cuts.dedup();
            let k = (nf - 2.0).max(0.0).sqrt();
            let lhs = cuts
                .windows(2)
                .map(|w| {
                    let (lo, hi) = (w[0], w[1]);
                    let a = report
                        .a1
                        .iter()
                        .flat_map(|p| p.series.values[lo..=hi].iter())
                        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
                    let omega = report.coupling_max[lo..=hi].iter().copied().fold(0.0, f64::max);
                    let span = report.times[hi] - report.times[lo];
                    a + k * a * omega * span
                })
                .sum();
            Verdict::new(lhs, 1.0 / nf, margin)
        }
        Condition::EqTwoLevelM => {
            if report.dim != 2 {
                return Err(Error::Precondition("the M² condition applies to two-level systems only".into()));
            }
            let lhs = if report.a_has_pole { f64::INFINITY } else { 2.0 * report.a_max };
            let m = (report.m_count[0] + 1) as f64;
            Verdict::new(lhs, 1.0 / (m * m), margin)
        }
    })
}

/// All applicable verdicts, keyed by condition name.
pub fn all_verdicts(report: &CriteriaReport, opts: &CriteriaOptions) -> Result<Vec<(Condition, Verdict)>> {
    let mut list = vec![Condition::Usual, Condition::EqNotOptimized, Condition::EqMonotonic];
    if report.dim == 2 {
        list.push(Condition::EqTwoLevelM);
    }
    list.into_iter().map(|c| check_condition(report, c, opts).map(|v| (c, v))).collect()
}

/// Closed-form two-level real condition |Ω₀ δ̇₀| / (δ₀² + Ω₀²)^{3/2}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealTwoLevel {
    pub series: Series,
    /// max_t |closed form − 2|A⁽¹⁾| from the generic pipeline|.
    pub generic_max_diff: f64,
}

pub fn real_two_level_condition(spec: &ScheduleSpec, track: &FrameTrack) -> Result<RealTwoLevel> {
    if spec.dim() != 2 || spec.dressed_parts(track.grid.start()).is_none() {
        return Err(Error::Precondition("requires a dressed-type real two-level schedule".into()));
    }
    let values: Vec<f64> = track
        .times()
        .iter()
        .map(|&t| {
            let (d, dd, r) = spec.dressed_parts(t).unwrap();
            (r * dd).abs() / (d * d + r * r).powf(1.5)
        })
        .collect();
    let generic = a_functionals(track, Functional::A1)?;
    let generic_max_diff = values
        .iter()
        .zip(&generic[0].series.values)
        .map(|(a, b)| (a - 2.0 * b.abs()).abs())
        .fold(0.0, f64::max);
    Ok(RealTwoLevel { series: Series::new(values), generic_max_diff })
}

/// Observed adiabaticity defects next to the exact bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundsReport {
    pub level: usize,
    pub horizon: f64,
    /// 1 − |b_n(T)|.
    pub one_minus_bn: f64,
    /// √(1 − |b_n(T)|²).
    pub projector_distance: f64,
    /// Re b_n(T) with θ⁽¹⁾ phases.
    pub re_bn: f64,
    /// 1 − min_t |b_n(t)|.
    pub one_minus_min_bn: f64,
    /// max_t max_{m≠n} |b_m(t)|.
    pub b_minus_observed: f64,
    pub zeno: ZenoBound,
    /// cosine bound − observed 1 − |b_n(T)|; must be ≥ 0.
    pub zeno_slack: f64,
    /// |(1 − Re b_n(T)) − (1 − cos(Ω_n T))|, meaningful where the bound is reached.
    pub zeno_gap: f64,
    pub pointfix: PointFixBounds,
    /// bound − observed 1 − min_t|b_n|; `None` when the bound is vacuous.
    pub pointfix_slack: Option<f64>,
    pub b_minus_slack: Option<f64>,
}

pub fn evaluate_bounds(report: &CriteriaReport, traj: &StateTrajectory) -> Result<BoundsReport> {
    let n = report.level;
    let b = traj
        .adiabatic_b
        .as_ref()
        .ok_or_else(|| Error::Contract("adiabatic amplitudes have not been computed".into()))?;
    let bn_final = b.last().unwrap()[n].norm();
    let re_bn = b.last().unwrap()[n].re;
    let (one_minus_bn, projector_distance) = defects(bn_final);
    let one_minus_min_bn = 1.0 - traj.min_amplitude(n)?;
    let b_minus_observed = b
        .iter()
        .flat_map(|v| (0..v.len()).filter(move |&m| m != n).map(move |m| v[m].norm()))
        .fold(0.0, f64::max);
    let zeno = zeno_bound(report.omega_n, report.dim, report.horizon);
    let pointfix = match (report.a_has_pole, report.tv) {
        (false, Some(tv)) => pointfix_bounds(report.a_max, tv, report.omega, report.horizon, report.dim),
        _ => PointFixBounds {
            b_minus: f64::INFINITY,
            one_minus_b_plus: f64::INFINITY,
            b_minus_theta2: f64::INFINITY,
            one_minus_b_plus_theta2: f64::INFINITY,
            b_minus_vacuous: true,
            one_minus_b_plus_vacuous: true,
        },
    };
    Ok(BoundsReport {
        level: n,
        horizon: report.horizon,
        one_minus_bn,
        projector_distance,
        re_bn,
        one_minus_min_bn,
        b_minus_observed,
        zeno,
        zeno_slack: zeno.cosine - one_minus_bn,
        zeno_gap: ((1.0 - re_bn) - zeno.cosine).abs(),
        pointfix,
        pointfix_slack: (!pointfix.one_minus_b_plus_vacuous).then(|| pointfix.one_minus_b_plus - one_minus_min_bn),
        b_minus_slack: (!pointfix.b_minus_vacuous).then(|| pointfix.b_minus - b_minus_observed),
    })
}
