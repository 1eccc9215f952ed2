//! Parametric time-dependent Hamiltonians H(t) and their derivatives.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{c, CMatrix, CVector, Error, Result, C64};

/// Model family of a schedule. Parameters are angular frequencies (ħ = 1).
#[derive(Clone, Debug)]
pub enum Model {
    /// Spin-1/2 in a field of polar angle `theta` rotating at `-omega_l`.
    Schwinger { omega0: f64, theta: f64, omega_l: f64 },
    /// Rotating-wave two-level form with detuning `delta0` and Rabi frequency `rabi`.
    RwaTwoLevel { delta0: f64, rabi: f64, omega_l: f64 },
    /// Dressed-state Hamiltonian with constant detuning and Rabi frequency.
    DressedTwoLevel { delta0: f64, rabi: f64 },
    /// Dressed-state Hamiltonian with detuning `alpha * cos(omega t)`.
    Cycling { alpha: f64, omega: f64, rabi: f64, swapped: bool },
    /// Dressed-state Hamiltonian with detuning `beta * (t - t_center)`.
    LinearChirp { beta: f64, rabi: f64, t_center: f64 },
    TableDriven(Table),
    RandomSmooth(RandomPair),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Schwinger,
    RwaTwoLevel,
    DressedTwoLevel,
    Cycling,
    LinearChirp,
    TableDriven,
    RandomSmooth,
}

/// Sampled Hamiltonian, interpolated with local cubic Lagrange polynomials.
#[derive(Clone, Debug)]
pub struct Table {
    times: Vec<f64>,
    matrices: Vec<CMatrix>,
}

impl Table {
    pub fn new(times: Vec<f64>, matrices: Vec<CMatrix>) -> Result<Self> {
        if times.len() < 4 {
            return Err(Error::invalid("table", "at least 4 rows are required"));
        }
        if times.len() != matrices.len() {
            return Err(Error::invalid("table", "row count mismatch"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("table.t", "times must be strictly increasing"));
        }
        let n = matrices[0].nrows();
        if n < 2 {
            return Err(Error::invalid("dim", "dim must be ≥ 2"));
        }
        let mut sym = Vec::with_capacity(matrices.len());
        for (row, m) in matrices.into_iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::invalid("table", format!("row {row}: inconsistent dimension")));
            }
            let skew = (&m - m.adjoint()).norm();
            if skew > 1e-9 * m.norm().max(1.0) {
                return Err(Error::invalid("table", format!("row {row}: matrix is not Hermitian")));
            }
            sym.push((&m + m.adjoint()) * c(0.5, 0.0));
        }
        Ok(Table { times, matrices: sym })
    }

    /// Reads rows `t, re_00, im_00, re_01, im_01, ...` (row-major flattening).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut times = Vec::new();
        let mut matrices = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let values: Vec<f64> = record
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::invalid("table", format!("row {row}: {e}")))?;
            let pairs = values.len().saturating_sub(1) / 2;
            let n = (pairs as f64).sqrt().round() as usize;
            if values.len() != 1 + 2 * n * n || n < 2 {
                return Err(Error::invalid(
                    "table",
                    format!("row {row}: expected 1 + 2·N² columns with N ≥ 2, got {}", values.len()),
                ));
            }
            times.push(values[0]);
            matrices.push(DMatrix::from_fn(n, n, |i, j| {
                let k = 1 + 2 * (i * n + j);
                c(values[k], values[k + 1])
            }));
        }
        Table::new(times, matrices)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    fn interpolate(&self, t: f64) -> CMatrix {
        let n = self.times.len();
        let idx = self.times.partition_point(|&x| x <= t);
        let start = idx.saturating_sub(2).min(n - 4);
        let nodes = &self.times[start..start + 4];
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for (a, &ta) in nodes.iter().enumerate() {
            let mut w = 1.0;
            for (b, &tb) in nodes.iter().enumerate() {
                if a != b {
                    w *= (t - tb) / (ta - tb);
                }
            }
            out += &self.matrices[start + a] * c(w, 0.0);
        }
        out
    }
}

/// Pair of seeded random Hermitian matrices for `H_a + s(t) H_b`.
#[derive(Clone, Debug)]
pub struct RandomPair {
    pub seed: u64,
    pub real: bool,
    h_a: CMatrix,
    h_b: CMatrix,
}

impl RandomPair {
    pub fn generate(dim: usize, seed: u64, real: bool, scale_a: f64, scale_b: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |scale: f64| {
            let g = DMatrix::from_fn(dim, dim, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = if real { 0.0 } else { StandardNormal.sample(&mut rng) };
                c(re, im)
            });
            (&g + g.adjoint()) * c(0.5 * scale, 0.0)
        };
        let h_a = draw(scale_a);
        let h_b = draw(scale_b);
        RandomPair { seed, real, h_a, h_b }
    }

    pub fn h_a(&self) -> &CMatrix {
        &self.h_a
    }

    pub fn h_b(&self) -> &CMatrix {
        &self.h_b
    }
}

/// Derivative together with how it was obtained.
#[derive(Clone, Debug)]
pub struct Derivative {
    pub value: CMatrix,
    /// A one-sided difference was used because `t` sits at a span boundary.
    pub one_sided: bool,
}

/// An immutable time-dependent Hamiltonian over `[t0, t1]`.
#[derive(Clone, Debug)]
pub struct ScheduleSpec {
    model: Model,
    t0: f64,
    t1: f64,
}

fn pauli_combo(z: f64, x: f64) -> CMatrix {
    // -(1/2)(z σ_z + x σ_x)
    DMatrix::from_row_slice(2, 2, &[c(-0.5 * z, 0.0), c(-0.5 * x, 0.0), c(-0.5 * x, 0.0), c(0.5 * z, 0.0)])
}

impl ScheduleSpec {
    pub fn new(model: Model, t0: f64, t1: f64) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(Error::invalid("t_span", "t0 < t1 required"));
        }
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite"))
            }
        };
        match &model {
            Model::Schwinger { omega0, theta, omega_l } => {
                finite("omega_l", *omega_l)?;
                if !(*omega0 > 0.0) {
                    return Err(Error::invalid("omega0", "must be > 0"));
                }
                if !(*theta > 0.0 && *theta < PI) {
                    return Err(Error::invalid("theta", "must lie in (0, π)"));
                }
            }
            Model::RwaTwoLevel { delta0, rabi, omega_l } => {
                finite("delta0", *delta0)?;
                finite("rabi", *rabi)?;
                finite("omega_l", *omega_l)?;
            }
            Model::DressedTwoLevel { delta0, rabi } => {
                finite("delta0", *delta0)?;
                finite("rabi", *rabi)?;
            }
            Model::Cycling { alpha, omega, rabi, .. } => {
                for (name, v) in [("alpha", alpha), ("omega", omega)] {
                    if !(*v > 0.0 && v.is_finite()) {
                        return Err(Error::invalid(name, "must be > 0"));
                    }
                }
                if !(*rabi >= 0.0 && rabi.is_finite()) {
                    return Err(Error::invalid("rabi", "must be ≥ 0"));
                }
            }
            Model::LinearChirp { beta, rabi, t_center } => {
                finite("beta", *beta)?;
                finite("rabi", *rabi)?;
                finite("t_center", *t_center)?;
            }
            Model::TableDriven(table) => {
                let (a, b) = (table.times[0], *table.times.last().unwrap());
                if t0 < a || t1 > b {
                    return Err(Error::invalid("t_span", format!("must lie within table range [{a}, {b}]")));
                }
            }
            Model::RandomSmooth(pair) => {
                if pair.h_a.nrows() < 2 {
                    return Err(Error::invalid("dim", "dim must be ≥ 2"));
                }
            }
        }
        Ok(ScheduleSpec { model, t0, t1 })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn t_span(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Same model on a different time span.
    pub fn with_span(&self, t0: f64, t1: f64) -> Result<Self> {
        ScheduleSpec::new(self.model.clone(), t0, t1)
    }

    pub fn kind(&self) -> ScheduleKind {
        match self.model {
            Model::Schwinger { .. } => ScheduleKind::Schwinger,
            Model::RwaTwoLevel { .. } => ScheduleKind::RwaTwoLevel,
            Model::DressedTwoLevel { .. } => ScheduleKind::DressedTwoLevel,
            Model::Cycling { .. } => ScheduleKind::Cycling,
            Model::LinearChirp { .. } => ScheduleKind::LinearChirp,
            Model::TableDriven(_) => ScheduleKind::TableDriven,
            Model::RandomSmooth(_) => ScheduleKind::RandomSmooth,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            Model::TableDriven(t) => t.dim(),
            Model::RandomSmooth(p) => p.h_a.nrows(),
            _ => 2,
        }
    }

    /// True when H(t) is real symmetric in the canonical basis for every t.
    pub fn is_real(&self) -> bool {
        match &self.model {
            Model::Schwinger { omega_l, .. } | Model::RwaTwoLevel { omega_l, .. } => *omega_l == 0.0,
            Model::DressedTwoLevel { .. } | Model::Cycling { .. } | Model::LinearChirp { .. } => true,
            Model::TableDriven(t) => t.matrices.iter().all(|m| m.iter().all(|z| z.im == 0.0)),
            Model::RandomSmooth(p) => p.real,
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.duration().max(self.t0.abs()).max(self.t1.abs());
        if !(t >= self.t0 - slack && t <= self.t1 + slack) {
            return Err(Error::OutOfRange { t, t0: self.t0, t1: self.t1 });
        }
        Ok(())
    }

    /// (δ₀, dδ₀/dt, Ω₀) for dressed-type real two-level schedules.
    pub fn dressed_parts(&self, t: f64) -> Option<(f64, f64, f64)> {
        match self.model {
            Model::DressedTwoLevel { delta0, rabi } => Some((delta0, 0.0, rabi)),
            Model::Cycling { alpha, omega, rabi, .. } => {
                Some((alpha * (omega * t).cos(), -alpha * omega * (omega * t).sin(), rabi))
            }
            Model::LinearChirp { beta, rabi, t_center } => Some((beta * (t - t_center), beta, rabi)),
            _ => None,
        }
    }

    /// Canonical ("diabatic") basis state `i`; for the swapped cycling model
    /// this is the rotated state `R_y e_i` with `R_y = exp(iπσ_y/4)`.
    pub fn diabatic_state(&self, i: usize) -> CVector {
        let n = self.dim();
        let mut v = CVector::zeros(n);
        match self.model {
            Model::Cycling { swapped: true, .. } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                if i == 0 {
                    v[0] = c(s, 0.0);
                    v[1] = c(-s, 0.0);
                } else {
                    v[0] = c(s, 0.0);
                    v[1] = c(s, 0.0);
                }
            }
            _ => v[i] = c(1.0, 0.0),
        }
        v
    }

    /// H(t).
    pub fn h(&self, t: f64) -> Result<CMatrix> {
        self.check_time(t)?;
        Ok(self.h_unchecked(t))
    }

    pub(crate) fn h_unchecked(&self, t: f64) -> CMatrix {
        match &self.model {
            Model::Schwinger { omega0, theta, omega_l } => {
                let (s, co) = theta.sin_cos();
                // φ = -ω_L t, so e^{-iφ} = e^{iω_L t}
                let off = C64::from_polar(-0.5 * omega0 * s, omega_l * t);
                DMatrix::from_row_slice(2, 2, &[c(-0.5 * omega0 * co, 0.0), off, off.conj(), c(0.5 * omega0 * co, 0.0)])
            }
            Model::RwaTwoLevel { delta0, rabi, omega_l } => {
                let d = delta0 + omega_l;
                let off = C64::from_polar(-0.5 * rabi, omega_l * t);
                DMatrix::from_row_slice(2, 2, &[c(-0.5 * d, 0.0), off, off.conj(), c(0.5 * d, 0.0)])
            }
            Model::DressedTwoLevel { delta0, rabi } => pauli_combo(*delta0, *rabi),
            Model::Cycling { alpha, omega, rabi, swapped } => {
                let d = alpha * (omega * t).cos();
                if *swapped {
                    // R_y H R_y†: σ_z → -σ_x, σ_x → σ_z
                    pauli_combo(*rabi, -d)
                } else {
                    pauli_combo(d, *rabi)
                }
            }
            Model::LinearChirp { beta, rabi, t_center } => pauli_combo(beta * (t - t_center), *rabi),
            Model::TableDriven(table) => table.interpolate(t),
            Model::RandomSmooth(pair) => {
                let s = (0.5 * PI * (t - self.t0) / self.duration()).sin().powi(2);
                &pair.h_a + &pair.h_b * c(s, 0.0)
            }
        }
    }

    /// dH/dt, analytic where available.
    pub fn hdot(&self, t: f64) -> Result<CMatrix> {
        self.hdot_flagged(t).map(|d| d.value)
    }

    pub fn hdot_flagged(&self, t: f64) -> Result<Derivative> {
        self.check_time(t)?;
        let value = match &self.model {
            Model::Schwinger { omega0, theta, omega_l } => {
                let off = C64::from_polar(0.5 * omega0 * theta.sin() * omega_l, omega_l * t) * c(0.0, -1.0);
                DMatrix::from_row_slice(2, 2, &[C64::default(), off, off.conj(), C64::default()])
            }
            Model::RwaTwoLevel { rabi, omega_l, .. } => {
                let off = C64::from_polar(0.5 * rabi * omega_l, omega_l * t) * c(0.0, -1.0);
                DMatrix::from_row_slice(2, 2, &[C64::default(), off, off.conj(), C64::default()])
            }
            Model::DressedTwoLevel { .. } => CMatrix::zeros(2, 2),
            Model::Cycling { alpha, omega, swapped, .. } => {
                let dd = -alpha * omega * (omega * t).sin();
                if *swapped {
                    pauli_combo(0.0, -dd)
                } else {
                    pauli_combo(dd, 0.0)
                }
            }
            Model::LinearChirp { beta, .. } => pauli_combo(*beta, 0.0),
            Model::TableDriven(_) => return Ok(self.finite_difference(t)),
            Model::RandomSmooth(pair) => {
                let arg = PI * (t - self.t0) / self.duration();
                let ds = 0.5 * PI / self.duration() * arg.sin();
                &pair.h_b * c(ds, 0.0)
            }
        };
        Ok(Derivative { value, one_sided: false })
    }

    /// Central difference with one Richardson extrapolation; second-order
    /// one-sided stencils within `h` of the span boundaries.
    pub fn finite_difference(&self, t: f64) -> Derivative {
        let h = (1e-8 * self.duration()).max(1e-6);
        let f = |x: f64| self.h_unchecked(x);
        let (stencil, one_sided): (Box<dyn Fn(f64) -> CMatrix>, bool) = if t - h >= self.t0 && t + h <= self.t1 {
            (Box::new(|s: f64| (f(t + s) - f(t - s)) * c(0.5 / s, 0.0)), false)
        } else if t + 2.0 * h <= self.t1 {
            (
                Box::new(|s: f64| (f(t) * c(-3.0, 0.0) + f(t + s) * c(4.0, 0.0) - f(t + 2.0 * s)) * c(0.5 / s, 0.0)),
                true,
            )
        } else {
            (
                Box::new(|s: f64| (f(t) * c(3.0, 0.0) - f(t - s) * c(4.0, 0.0) + f(t - 2.0 * s)) * c(0.5 / s, 0.0)),
                true,
            )
        };
        let coarse = stencil(h);
        let fine = stencil(0.5 * h);
        Derivative { value: (fine * c(4.0, 0.0) - coarse) * c(1.0 / 3.0, 0.0), one_sided }
    }

    /// Shortest time scale on which H(t) changes appreciably, as a period.
    fn shortest_period(&self) -> Option<f64> {
        let positive = |x: f64| if x > 0.0 && x.is_finite() { Some(x) } else { None };
        match &self.model {
            Model::Schwinger { omega_l, .. } | Model::RwaTwoLevel { omega_l, .. } => {
                positive(omega_l.abs()).map(|w| 2.0 * PI / w)
            }
            Model::DressedTwoLevel { .. } => None,
            Model::Cycling { alpha, omega, rabi, .. } => {
                let drive = 2.0 * PI / omega;
                // width of an avoided crossing, resolved with ~10 points
                let crossing = 4.0 * rabi / (alpha * omega);
                Some(if crossing > 0.0 { drive.min(crossing) } else { drive })
            }
            Model::LinearChirp { beta, rabi, .. } => positive(beta.abs()).map(|b| {
                if *rabi > 0.0 {
                    4.0 * rabi.abs() / b
                } else {
                    self.duration()
                }
            }),
            Model::TableDriven(table) => {
                let inside = table.times.iter().filter(|&&x| x >= self.t0 && x <= self.t1).count();
                positive(inside as f64).map(|k| 40.0 * self.duration() / k)
            }
            Model::RandomSmooth(_) => Some(2.0 * self.duration()),
        }
    }
}

/// Point spacing policy of a [`TimeGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepPolicy {
    Uniform,
    AdaptiveRefined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    policy: StepPolicy,
}

const MAX_GRID_POINTS: usize = 2_000_000;

impl TimeGrid {
    pub fn uniform(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if n < 2 || !(t0 < t1) {
            return Err(Error::invalid("grid", "need n ≥ 2 and t0 < t1"));
        }
        let step = (t1 - t0) / (n - 1) as f64;
        let mut times: Vec<f64> = (0..n).map(|i| t0 + step * i as f64).collect();
        times[n - 1] = t1;
        Ok(TimeGrid { times, policy: StepPolicy::Uniform })
    }

    pub fn from_times(times: Vec<f64>, policy: StepPolicy) -> Result<Self> {
        if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "times must be strictly increasing with at least 2 points"));
        }
        Ok(TimeGrid { times, policy })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn policy(&self) -> StepPolicy {
        self.policy
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Uniform grid with at least `n_min` points and at least 40 points per
/// shortest characteristic period of the schedule.
pub fn build_grid(spec: &ScheduleSpec, n_min: usize) -> Result<TimeGrid> {
    if n_min < 2 {
        return Err(Error::invalid("grid.n_min", "must be ≥ 2"));
    }
    let mut n = n_min;
    if let Some(period) = spec.shortest_period() {
        let needed = (40.0 * spec.duration() / period).ceil() as usize + 1;
        n = n.max(needed.min(MAX_GRID_POINTS));
    }
    TimeGrid::uniform(spec.t0, spec.t1, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sx() -> CMatrix {
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn sz() -> CMatrix {
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn schwinger_at_origin_is_minus_half_sigma_x() {
        let s = ScheduleSpec::new(Model::Schwinger { omega0: 1.0, theta: PI / 2.0, omega_l: 0.2 }, 0.0, 10.0).unwrap();
        assert!(close(&s.h(0.0).unwrap(), &(sx() * c(-0.5, 0.0)), 1e-15));
    }

    #[test]
    fn dressed_with_zero_couplings_is_zero() {
        let s = ScheduleSpec::new(Model::DressedTwoLevel { delta0: 0.0, rabi: 0.0 }, 0.0, 1.0).unwrap();
        assert!(close(&s.h(0.4).unwrap(), &CMatrix::zeros(2, 2), 0.0));
        assert!(close(&s.hdot(0.4).unwrap(), &CMatrix::zeros(2, 2), 0.0));
    }

    #[test]
    fn cycling_at_origin() {
        let s = ScheduleSpec::new(Model::Cycling { alpha: 100.0, omega: 0.5, rabi: 3.0, swapped: false }, 0.0, 1.0)
            .unwrap();
        let expected = (sz() * c(100.0, 0.0) + sx() * c(3.0, 0.0)) * c(-0.5, 0.0);
        assert!(close(&s.h(0.0).unwrap(), &expected, 1e-13));
        let t = 0.7;
        let hd = s.hdot(t).unwrap();
        let expected = sz() * c(-0.5 * (-100.0 * 0.5 * (0.5 * t).sin()), 0.0);
        assert!(close(&hd, &expected, 1e-13));
    }

    #[test]
    fn out_of_span_is_range_error() {
        let s = ScheduleSpec::new(Model::DressedTwoLevel { delta0: 1.0, rabi: 1.0 }, 0.0, 1.0).unwrap();
        assert!(matches!(s.h(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.hdot(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ScheduleSpec::new(Model::Schwinger { omega0: 1.0, theta: 0.0, omega_l: 0.1 }, 0.0, 1.0).is_err());
        assert!(ScheduleSpec::new(Model::Schwinger { omega0: -1.0, theta: 1.0, omega_l: 0.1 }, 0.0, 1.0).is_err());
        assert!(ScheduleSpec::new(Model::DressedTwoLevel { delta0: 1.0, rabi: 1.0 }, 1.0, 1.0).is_err());
    }

    #[test]
    fn table_derivative_matches_analytic_cycling() {
        let truth = ScheduleSpec::new(Model::Cycling { alpha: 1.0, omega: 1.0, rabi: 1.0, swapped: false }, -1.0, 1.0)
            .unwrap();
        let times: Vec<f64> = (0..=2000).map(|i| -1.0 + i as f64 * 1e-3).collect();
        let mats = times.iter().map(|&t| truth.h(t).unwrap()).collect();
        let table = ScheduleSpec::new(Model::TableDriven(Table::new(times, mats).unwrap()), -1.0, 1.0).unwrap();
        let fd = table.hdot_flagged(0.0).unwrap();
        assert!(!fd.one_sided);
        assert!(close(&fd.value, &truth.hdot(0.0).unwrap(), 1e-6));
        let edge = table.hdot_flagged(1.0).unwrap();
        assert!(edge.one_sided);
        assert!(close(&edge.value, &truth.hdot(1.0).unwrap(), 1e-5));
    }

    #[test]
    fn grid_examples() {
        let slow = ScheduleSpec::new(Model::DressedTwoLevel { delta0: 1.0, rabi: 1.0 }, 0.0, 1.0).unwrap();
        assert_eq!(build_grid(&slow, 11).unwrap().len(), 11);
        let cyc = ScheduleSpec::new(Model::Cycling { alpha: 0.1, omega: 2.0 * PI, rabi: 1.0, swapped: false }, 0.0, 1.0)
            .unwrap();
        assert!(build_grid(&cyc, 2).unwrap().len() >= 40);
        let sw = ScheduleSpec::new(Model::Schwinger { omega0: 1.0, theta: 1.0, omega_l: 0.0 }, 0.0, 100.0).unwrap();
        let g = build_grid(&sw, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.start(), 0.0);
        assert_eq!(g.end(), 100.0);
        assert!(build_grid(&sw, 1).is_err());
    }

    #[test]
    fn swapped_cycling_is_rotated_unswapped() {
        let (a, w, r) = (3.0, 1.3, 0.7);
        let plain = ScheduleSpec::new(Model::Cycling { alpha: a, omega: w, rabi: r, swapped: false }, 0.0, 5.0).unwrap();
        let swapped = ScheduleSpec::new(Model::Cycling { alpha: a, omega: w, rabi: r, swapped: true }, 0.0, 5.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ry = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(-s, 0.0), c(s, 0.0)]);
        for t in [0.0, 0.9, 2.5] {
            let rotated = &ry * plain.h(t).unwrap() * ry.adjoint();
            assert!(close(&rotated, &swapped.h(t).unwrap(), 1e-14));
        }
        let psi = swapped.diabatic_state(0);
        let expected = &ry * plain.diabatic_state(0);
        assert!((psi - expected).norm() < 1e-15);
    }
}
