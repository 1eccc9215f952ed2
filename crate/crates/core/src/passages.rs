//! Landau–Zener–Stückelberg analytics for the cycling Hamiltonian
//! −½(δ₀(t)σ_z + Ω₀σ_x) with δ₀ = α cos ωt, checked against full numerics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bessel;
use crate::propagator::propagate;
use crate::schedules::{build_grid, Model, ScheduleSpec};
use crate::spectral::{frame_track, SpectralOptions};
use crate::{c, Error, Result, C64};

/// Default grid density for passage windows.
pub const DEFAULT_POINTS: usize = 2001;
const NEAR_ZERO: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclingParams {
    pub alpha: f64,
    pub omega: f64,
    pub rabi: f64,
    pub swapped: bool,
}

impl CyclingParams {
    pub fn of(spec: &ScheduleSpec) -> Result<Self> {
        match *spec.model() {
            Model::Cycling { alpha, omega, rabi, swapped } => Ok(CyclingParams { alpha, omega, rabi, swapped }),
            _ => Err(Error::Precondition("passage analytics need a cycling schedule".into())),
        }
    }

    pub fn detuning(&self, t: f64) -> f64 {
        self.alpha * (self.omega * t).cos()
    }
}

/// Zeros of δ₀(t) inside the schedule span, located by bisection.
pub fn find_crossings(spec: &ScheduleSpec) -> Result<Vec<f64>> {
    if spec.dressed_parts(spec.t_span().0).is_none() {
        return Err(Error::Precondition("crossings are defined for dressed-type two-level schedules".into()));
    }
    let delta = |t: f64| spec.dressed_parts(t).unwrap().0;
    let (t0, t1) = spec.t_span();
    let span = t1 - t0;
    let mut step = span / 64.0;
    if let Model::Cycling { omega, .. } = *spec.model() {
        step = step.min(PI / (4.0 * omega));
    }
    let n = (span / step).ceil() as usize;
    let mut out: Vec<f64> = Vec::new();
    let mut a = t0;
    let mut fa = delta(a);
    if fa == 0.0 {
        out.push(a);
    }
    for i in 1..=n {
        let b = if i == n { t1 } else { t0 + i as f64 * span / n as f64 };
        let fb = delta(b);
        if fb == 0.0 {
            out.push(b);
        } else if fa != 0.0 && (fa > 0.0) != (fb > 0.0) {
            out.push(bisect(&delta, a, b, fa));
        }
        a = b;
        fa = fb;
    }
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(1.0));
    Ok(out)
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Landau–Zener prediction for one passage.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LzPrediction {
    /// exp(−2πΩ₀² / (4αω)).
    pub p1: f64,
    /// exp(−π / (4 A⁽¹⁾(∞))), the same number written with the adiabaticity ratio.
    pub p1_from_a1: f64,
    /// A⁽¹⁾(∞) = αω / (2Ω₀²), equal to A⁽¹⁾ at the crossing.
    pub a1_inf: f64,
    /// α ≥ 10 Ω₀ and α ≥ 10 ω.
    pub regime_ok: bool,
}

pub fn lz_single(alpha: f64, omega: f64, rabi: f64) -> LzPrediction {
    let rate = (alpha * omega).abs();
    let a1_inf = rate / (2.0 * rabi * rabi);
    LzPrediction {
        p1: (-2.0 * PI * rabi * rabi / (4.0 * rate)).exp(),
        p1_from_a1: (-PI / (4.0 * a1_inf)).exp(),
        a1_inf,
        regime_ok: alpha.abs() >= 10.0 * rabi.abs() && alpha.abs() >= 10.0 * omega.abs(),
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StueckelbergPhase {
    /// α / ω.
    pub approx: f64,
    /// ½ ∫ √(δ₀² + Ω₀²) dt between the two crossings.
    pub numerical: f64,
}

fn half_splitting_integral(p: &CyclingParams, ta: f64, tb: f64) -> f64 {
    let f = |t: f64| {
        let d = p.detuning(t);
        (d * d + p.rabi * p.rabi).sqrt()
    };
    let n = 4000;
    let h = (tb - ta) / n as f64;
    let mut s = f(ta) + f(tb);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(ta + i as f64 * h);
    }
    0.5 * s * h / 3.0
}

/// Stückelberg phase between two consecutive crossings `ta < tb`.
pub fn stueckelberg_phase(spec: &ScheduleSpec, ta: f64, tb: f64) -> Result<StueckelbergPhase> {
    let p = CyclingParams::of(spec)?;
    let tol = 1e-9 * p.alpha.abs().max(1e-300);
    if !(tb > ta) || p.detuning(ta).abs() > tol || p.detuning(tb).abs() > tol {
        return Err(Error::Contract("Stückelberg phase needs two crossing times in increasing order".into()));
    }
    if ((tb - ta) * p.omega.abs() - PI).abs() > 1e-6 {
        return Err(Error::Contract("crossings are not consecutive".into()));
    }
    Ok(StueckelbergPhase { approx: p.alpha / p.omega, numerical: half_splitting_integral(&p, ta, tb) })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MultiPassage {
    pub p: f64,
    /// cos Θ ≈ 0: the M² p₁ limit was used.
    pub resonant_limit: bool,
    /// The raw value exceeded 1.
    pub clamped: bool,
}

/// Transition probability after `m` passages with alternating sweep
/// directions: p₁ sin²(MΘ)/cos²Θ for even M, p₁ cos²(MΘ)/cos²Θ for odd M.
pub fn multi_passage(p1: f64, theta: f64, m: usize) -> Result<MultiPassage> {
    if m == 0 {
        return Err(Error::Contract("at least one passage is required".into()));
    }
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::invalid("p1", "must lie in [0, 1]"));
    }
    if m == 1 {
        return Ok(MultiPassage { p: p1, resonant_limit: false, clamped: false });
    }
    let mf = m as f64;
    let cos2 = theta.cos().powi(2);
    let (raw, resonant_limit) = if cos2 < 1e-24 {
        (mf * mf * p1, true)
    } else if m % 2 == 0 {
        (p1 * (mf * theta).sin().powi(2) / cos2, false)
    } else {
        (p1 * (mf * theta).cos().powi(2) / cos2, false)
    };
    Ok(MultiPassage { p: raw.min(1.0), resonant_limit, clamped: raw > 1.0 })
}

/// ln Γ(z) for Re z > 0: upward recurrence to Re z ≥ 15, then Stirling.
fn ln_gamma(mut z: C64) -> C64 {
    let mut shift = c(0.0, 0.0);
    while z.re < 15.0 {
        shift -= z.ln();
        z += 1.0;
    }
    let z2 = z * z;
    let series = (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z;
    shift + (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series
}

/// Stokes phase φ_S = π/4 + δ(ln δ − 1) + arg Γ(1 − iδ) with δ = Ω₀²/(4|αω|).
/// Tends to π/4 in the sudden limit and to 0 in the adiabatic limit.
pub fn stokes_phase(alpha: f64, omega: f64, rabi: f64) -> f64 {
    let d = rabi * rabi / (4.0 * (alpha * omega).abs());
    if d == 0.0 {
        return PI / 4.0;
    }
    PI / 4.0 + d * (d.ln() - 1.0) + ln_gamma(c(1.0, -d)).im
}

/// Adiabatic-impulse transition probability after `m` crossings: each
/// crossing mixes the adiabatic levels with amplitude √p₁ and Stokes phase
/// `stokes`, consecutive crossings alternate sweep direction and accumulate
/// the relative phase 2Θ in between.
pub fn adiabatic_impulse(p1: f64, theta: f64, stokes: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Contract("at least one passage is required".into()));
    }
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::invalid("p1", "must lie in [0, 1]"));
    }
    let (a, b) = ((1.0 - p1).sqrt(), p1.sqrt());
    let crossing = |sign: f64| {
        nalgebra::Matrix2::new(C64::from_polar(a, -stokes), c(-sign * b, 0.0), c(sign * b, 0.0), C64::from_polar(a, stokes))
    };
    let between = nalgebra::Matrix2::new(C64::from_polar(1.0, -theta), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, theta));
    let mut s = crossing(1.0);
    for j in 1..m {
        let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
        s = crossing(sign) * between * s;
    }
    Ok(s[(1, 0)].norm_sqr())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Localization {
    pub ratio: f64,
    pub j0: f64,
    pub nearest_zero: f64,
    pub distance: f64,
    pub near_zero: bool,
}

/// J₀ at the drive ratio α/ω and the distance to the nearest J₀ zero.
pub fn localization_check(ratio: f64) -> Result<Localization> {
    if !(ratio >= 0.0) || !ratio.is_finite() {
        return Err(Error::invalid("alpha/omega", "must be a finite nonnegative number"));
    }
    let j0 = bessel::j0(ratio);
    let nearest_zero = bessel::nearest_j0_zero(ratio);
    Ok(Localization { ratio, j0, nearest_zero, distance: (ratio - nearest_zero).abs(), near_zero: j0.abs() < NEAR_ZERO })
}

/// Analytic predictions and the propagated result for M passages.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PassageReport {
    pub alpha: f64,
    pub omega: f64,
    pub rabi: f64,
    pub m: usize,
    /// Propagation window: δ₀ extrema around the M crossings.
    pub window: (f64, f64),
    pub crossings: Vec<f64>,
    pub lz: LzPrediction,
    pub theta: StueckelbergPhase,
    /// multi_passage(p₁ from LZ, numerical Θ, M).
    pub p_pred: MultiPassage,
    /// adiabatic_impulse(p₁ from LZ, numerical Θ, Stokes phase, M).
    pub p_impulse: f64,
    /// Population that left the initially occupied adiabatic level.
    pub p_num: f64,
    pub norm_drift: f64,
}

/// Propagates the full dynamics through `m` crossings, starting in the lower
/// adiabatic level at the δ₀ extremum preceding the first crossing.
pub fn passage_experiment(spec: &ScheduleSpec, m: usize, tol: f64, n_points: usize) -> Result<PassageReport> {
    let p = CyclingParams::of(spec)?;
    if m == 0 {
        return Err(Error::Contract("at least one passage is required".into()));
    }
    let crossings = find_crossings(spec)?;
    if crossings.len() < m {
        return Err(Error::Precondition(format!("{m} crossings requested but the span contains {}", crossings.len())));
    }
    let (t0, t1) = spec.t_span();
    let half = PI / p.omega.abs();
    let start = ((crossings[0] / half).floor() * half).max(t0);
    let end = ((crossings[m - 1] / half).ceil() * half).min(t1);
    let window = spec.with_span(start, end)?;
    let grid = build_grid(&window, n_points)?;
    let track = frame_track(&window, &grid, &SpectralOptions::default())?;
    let psi0 = track.frames[0].vector(0).into_owned();
    let traj = propagate(&window, &psi0, &grid, tol)?;
    let last = track.frames.last().unwrap();
    let survival = last.vector(0).dotc(traj.final_state()).norm_sqr();

    let first = crossings[0];
    let theta = match crossings.get(1) {
        Some(&second) => stueckelberg_phase(spec, first, second)?,
        None => StueckelbergPhase { approx: p.alpha / p.omega, numerical: half_splitting_integral(&p, first, first + half) },
    };
    let lz = lz_single(p.alpha, p.omega, p.rabi);
    Ok(PassageReport {
        alpha: p.alpha,
        omega: p.omega,
        rabi: p.rabi,
        m,
        window: (start, end),
        crossings: crossings[..m].to_vec(),
        lz,
        theta,
        p_pred: multi_passage(lz.p1, theta.numerical, m)?,
        p_impulse: adiabatic_impulse(lz.p1, theta.numerical, stokes_phase(p.alpha, p.omega, p.rabi), m)?,
        p_num: (1.0 - survival).clamp(0.0, 1.0),
        norm_drift: traj.norm_drift,
    })
}

/// Return probability of the initial diabatic state in the swapped cycling
/// model over the schedule span.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub check: Localization,
    pub horizon: f64,
    pub return_probability: f64,
    /// sin²(Ω₀ J₀(α/ω) T / 2), the effective-tunneling estimate of the loss.
    pub predicted_loss: f64,
}

pub fn localization_experiment(spec: &ScheduleSpec, tol: f64, n_points: usize) -> Result<LocalizationReport> {
    let p = CyclingParams::of(spec)?;
    let check = localization_check((p.alpha / p.omega).abs())?;
    let psi0 = spec.diabatic_state(0);
    let grid = build_grid(spec, n_points)?;
    let traj = propagate(spec, &psi0, &grid, tol)?;
    let horizon = spec.duration();
    Ok(LocalizationReport {
        check,
        horizon,
        return_probability: psi0.dotc(traj.final_state()).norm_sqr(),
        predicted_loss: (0.5 * p.rabi * check.j0 * horizon).sin().powi(2),
    })
}
