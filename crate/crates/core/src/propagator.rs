//! Time-dependent Schrödinger integration, the analytic Schwinger propagator,
//! and conversion to adiabatic-frame amplitudes b_m(t).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::criteria;
use crate::ode::{self, Dopri5Options, Stats};
use crate::schedules::{ScheduleSpec, TimeGrid};
use crate::spectral::FrameTrack;
use crate::{c, CMatrix, CVector, Error, Result, C64};

/// Constant parameters of the rotating-field spin-1/2 model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchwingerParams {
    pub omega0: f64,
    pub theta: f64,
    pub omega_l: f64,
}

impl SchwingerParams {
    pub fn new(omega0: f64, theta: f64, omega_l: f64) -> Self {
        SchwingerParams { omega0, theta, omega_l }
    }

    /// Ω_L = ω_L sinθ (θ is constant).
    pub fn coupling(&self) -> f64 {
        self.omega_l * self.theta.sin()
    }

    /// δ_L = ω_L cosθ − ω₀.
    pub fn detuning(&self) -> f64 {
        self.omega_l * self.theta.cos() - self.omega0
    }

    /// Ω_R = √(Ω_L² + δ_L²).
    pub fn rabi(&self) -> f64 {
        self.coupling().hypot(self.detuning())
    }

    /// First-order phases θ∓(t) = ±(1/2)(ω₀ − ω_L cosθ) t, returned as (θ₋, θ₊).
    pub fn first_order_phases(&self, t: f64) -> (f64, f64) {
        let rate = 0.5 * (self.omega0 - self.omega_l * self.theta.cos());
        (rate * t, -rate * t)
    }
}

/// Ũ(t, 0) in the adiabatic (|−⟩, |+⟩) basis with first-order phases.
pub fn schwinger_exact(p: &SchwingerParams, t: f64) -> CMatrix {
    let omega_r = p.rabi();
    if !(omega_r > 0.0) {
        return CMatrix::identity(2, 2);
    }
    let d = p.detuning();
    let (s, co) = (0.5 * omega_r * t).sin_cos();
    let ratio = d / omega_r;
    let plus = C64::from_polar(1.0, 0.5 * d * t);
    let minus = plus.conj();
    let off = c(0.0, p.coupling() / omega_r * s);
    DMatrix::from_row_slice(
        2,
        2,
        &[c(co, -ratio * s) * plus, off * plus, off * minus, c(co, ratio * s) * minus],
    )
}

/// R_θ(t): columns are e^{iθ∓}|∓⟩ in the canonical basis.
pub fn schwinger_rotation(p: &SchwingerParams, t: f64) -> CMatrix {
    let phi = -p.omega_l * t;
    let (th_minus, th_plus) = p.first_order_phases(t);
    let (sh, ch) = (0.5 * p.theta).sin_cos();
    let e_minus = C64::from_polar(1.0, -0.5 * phi);
    let e_plus = e_minus.conj();
    let ph_m = C64::from_polar(1.0, th_minus);
    let ph_p = C64::from_polar(1.0, th_plus);
    DMatrix::from_row_slice(
        2,
        2,
        &[e_minus * ch * ph_m, -e_minus * sh * ph_p, e_plus * sh * ph_m, e_plus * ch * ph_p],
    )
}

/// U(t, 0) = R_θ(t) Ũ(t, 0) R_θ†(0) in the canonical basis.
pub fn schwinger_diabatic(p: &SchwingerParams, t: f64) -> CMatrix {
    schwinger_rotation(p, t) * schwinger_exact(p, t) * schwinger_rotation(p, 0.0).adjoint()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseChoice {
    /// θ⁽¹⁾: geometric plus dynamical phase.
    Theta1,
    /// θ⁽²⁾: θ⁽¹⁾ plus the second-order correction.
    Theta2,
}

#[derive(Clone, Debug)]
pub struct StateTrajectory {
    pub grid: TimeGrid,
    /// ψ(t_i) in the canonical basis.
    pub diabatic: Vec<CVector>,
    /// b_m(t_i), filled by [`adiabatic_amplitudes`].
    pub adiabatic_b: Option<Vec<CVector>>,
    pub phase_choice: Option<PhaseChoice>,
    /// −∫E_m dt per time (outer) and level (inner).
    pub dynamical_phase: Vec<Vec<f64>>,
    /// ∫ i⟨m|ṁ⟩ dt per time and level.
    pub geometric_phase: Vec<Vec<f64>>,
    /// Additional θ⁽²⁾ − θ⁽¹⁾ phase per time and level (zero for θ⁽¹⁾).
    pub correction_phase: Vec<Vec<f64>>,
    pub norm_drift: f64,
    pub stats: Stats,
}

impl StateTrajectory {
    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn dim(&self) -> usize {
        self.diabatic[0].len()
    }

    pub fn final_state(&self) -> &CVector {
        self.diabatic.last().unwrap()
    }

    fn amplitudes(&self) -> Result<&[CVector]> {
        self.adiabatic_b
            .as_deref()
            .ok_or_else(|| Error::Contract("adiabatic amplitudes have not been computed".into()))
    }

    /// |b_n(t_i)|² for every grid time.
    pub fn population(&self, n: usize) -> Result<Vec<f64>> {
        Ok(self.amplitudes()?.iter().map(|b| b[n].norm_sqr()).collect())
    }

    /// min_t |b_n(t)|.
    pub fn min_amplitude(&self, n: usize) -> Result<f64> {
        Ok(self.amplitudes()?.iter().map(|b| b[n].norm()).fold(f64::INFINITY, f64::min))
    }
}

/// Integrates iψ̇ = H(t)ψ with an adaptive 5(4) pair and samples ψ on `grid`.
/// The state is never renormalized; `norm_drift` reports max |‖ψ‖ − 1|.
pub fn propagate(spec: &ScheduleSpec, psi0: &CVector, grid: &TimeGrid, tol: f64) -> Result<StateTrajectory> {
    if psi0.len() != spec.dim() {
        return Err(Error::invalid("initial", format!("state has {} components, expected {}", psi0.len(), spec.dim())));
    }
    if (psi0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("initial", "state must be normalized to 1e-12"));
    }
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::invalid("tol", "must lie in [1e-13, 1e-6]"));
    }
    let (t0, t1) = spec.t_span();
    let slack = 1e-12 * (t1 - t0);
    if grid.start() < t0 - slack || grid.end() > t1 + slack {
        return Err(Error::Contract("grid extends beyond the schedule span".into()));
    }
    let minus_i = c(0.0, -1.0);
    let rhs = |t: f64, y: &CVector| (spec.h_unchecked(t) * y) * minus_i;
    // Drift allowance of 10·tol: 5·tol spread over the span for the step end
    // points, 4·tol for dense-output samples between them.
    let opts = Dopri5Options {
        norm_rate: Some(5.0 * tol / (grid.end() - grid.start()).max(f64::MIN_POSITIVE)),
        dense_norm_tol: Some(4.0 * tol),
        ..Dopri5Options::with_tol(tol)
    };
    let (diabatic, stats) = ode::integrate(rhs, psi0, grid.times(), &opts)?;
    let norm_drift = diabatic.iter().map(|y| (y.norm() - 1.0).abs()).fold(0.0, f64::max);
    let n = spec.dim();
    let zeros = vec![vec![0.0; n]; grid.len()];
    Ok(StateTrajectory {
        grid: grid.clone(),
        diabatic,
        adiabatic_b: None,
        phase_choice: None,
        dynamical_phase: zeros.clone(),
        geometric_phase: zeros.clone(),
        correction_phase: zeros,
        norm_drift,
        stats,
    })
}

fn cumulative_trapezoid(times: &[f64], rates: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; times.len()];
    for i in 1..times.len() {
        acc[i] = acc[i - 1] + 0.5 * (times[i] - times[i - 1]) * (rates[i] + rates[i - 1]);
    }
    acc
}

/// Projects the trajectory on the tracked eigenframes:
/// b_m(t) = e^{−iθ_m(t)} ⟨m(t)|ψ(t)⟩ with θ_m from trapezoidal quadrature.
pub fn adiabatic_amplitudes(traj: &StateTrajectory, track: &FrameTrack, choice: PhaseChoice) -> Result<StateTrajectory> {
    let times = traj.times();
    if track.len() != times.len() || track.times().iter().zip(times).any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0))
    {
        return Err(Error::Contract("frames do not cover the trajectory grid with matching labels".into()));
    }
    let n = traj.dim();
    if track.dim() != n {
        return Err(Error::Contract("frame dimension differs from state dimension".into()));
    }
    let mut dynamical = vec![vec![0.0; n]; times.len()];
    let mut geometric = vec![vec![0.0; n]; times.len()];
    let mut correction = vec![vec![0.0; n]; times.len()];

    let second_order = match choice {
        PhaseChoice::Theta1 => None,
        PhaseChoice::Theta2 => Some(criteria::second_order_corrections(track)?),
    };

    for m in 0..n {
        let energy: Vec<f64> = track.frames.iter().map(|f| -f.energies[m]).collect();
        let geo: Vec<f64> = track.couplings.iter().map(|cm| -cm.c[(m, m)].im).collect();
        let dyn_acc = cumulative_trapezoid(times, &energy);
        let geo_acc = cumulative_trapezoid(times, &geo);
        let corr_acc = match &second_order {
            Some(rates) => cumulative_trapezoid(times, &rates.iter().map(|r| r[m]).collect::<Vec<_>>()),
            None => vec![0.0; times.len()],
        };
        for i in 0..times.len() {
            dynamical[i][m] = dyn_acc[i];
            geometric[i][m] = geo_acc[i];
            correction[i][m] = corr_acc[i];
        }
    }

    let b = (0..times.len())
        .map(|i| {
            let frame = &track.frames[i];
            let psi = &traj.diabatic[i];
            CVector::from_fn(n, |m, _| {
                let theta = dynamical[i][m] + geometric[i][m] + correction[i][m];
                C64::from_polar(1.0, -theta) * frame.vector(m).dotc(psi)
            })
        })
        .collect();

    Ok(StateTrajectory {
        adiabatic_b: Some(b),
        phase_choice: Some(choice),
        dynamical_phase: dynamical,
        geometric_phase: geometric,
        correction_phase: correction,
        ..traj.clone()
    })
}

/// Adiabaticity defects at the final time: (1 − |b_n(T)|, √(1 − |b_n(T)|²)).
pub fn infidelity(traj: &StateTrajectory, n: usize) -> Result<(f64, f64)> {
    let b = traj.amplitudes()?;
    if n >= traj.dim() {
        return Err(Error::invalid("level", format!("index {n} out of range for dimension {}", traj.dim())));
    }
    Ok(defects(b.last().unwrap()[n].norm()))
}

pub(crate) fn defects(bn: f64) -> (f64, f64) {
    (1.0 - bn, (1.0 - bn * bn).max(0.0).sqrt())
}
