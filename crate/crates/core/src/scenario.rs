//! Scenario documents: strict JSON parsing, validation, task orchestration,
//! built-in presets and parameter sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, Condition, CriteriaOptions, CriteriaReport, Verdict};
use crate::passages::{self, LocalizationReport, PassageReport};
use crate::propagator::{adiabatic_amplitudes, propagate, PhaseChoice, StateTrajectory};
use crate::report::{self, Format, Table};
use crate::schedules::{build_grid, Model, RandomPair, ScheduleSpec, Table as HamiltonianTable};
use crate::spectral::{eigenframe, frame_track, EigenFrame, FrameTrack, SpectralOptions};
use crate::{c, CVector, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Schwinger {
        omega0: f64,
        theta: f64,
        omega_l: f64,
    },
    RwaTwoLevel {
        delta0: f64,
        rabi: f64,
        omega_l: f64,
    },
    DressedTwoLevel {
        delta0: f64,
        rabi: f64,
    },
    Cycling {
        alpha: f64,
        omega: f64,
        rabi: f64,
        #[serde(default)]
        swapped: bool,
    },
    LinearChirp {
        beta: f64,
        rabi: f64,
        #[serde(default)]
        t_center: f64,
    },
    /// CSV with columns t, then Re/Im of every matrix entry in row-major order.
    TableDriven {
        path: PathBuf,
    },
    RandomSmooth {
        dim: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        real: bool,
        #[serde(default = "one")]
        scale_a: f64,
        #[serde(default = "one")]
        scale_b: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub t_span: [f64; 2],
    pub model: ModelConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Instantaneous eigenstate (ascending energy at t₀).
    Level(usize),
    /// Explicit state in the canonical basis as `[re, im]` pairs.
    Vector(Vec<[f64; 2]>),
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Level(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_min: usize,
    pub overlap_threshold: f64,
    pub max_bisections: u32,
    /// Refine the grid (doubling) until ∫|A′| is stable to 1%.
    pub refine_tv: bool,
    pub max_refinements: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_min: 2001, overlap_threshold: 0.99, max_bisections: 8, refine_tv: true, max_refinements: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Simulate,
    Criteria,
    Bounds,
    Passages,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Criteria => "criteria",
            Task::Bounds => "bounds",
            Task::Passages => "passages",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol: f64,
    pub margin: f64,
    pub noise_tol: f64,
    pub gap_floor_rel: f64,
    pub subdivide: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol: 1e-10,
            margin: criteria::DEFAULT_MARGIN,
            noise_tol: criteria::DEFAULT_NOISE_TOL,
            gap_floor_rel: 1e-10,
            subdivide: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassagesConfig {
    /// Number of crossings to propagate through; all crossings in the span by default.
    pub m: Option<usize>,
    pub points: usize,
}

impl Default for PassagesConfig {
    fn default() -> Self {
        PassagesConfig { m: None, points: passages::DEFAULT_POINTS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub passages: PassagesConfig,
    /// Directory that relative paths inside the document resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn json_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    let inner = e.inner();
    let field = if path.is_empty() || path == "." { "document".to_string() } else { path };
    Error::invalid(field, format!("{} (line {}, column {})", strip_position(&inner.to_string()), inner.line(), inner.column()))
}

fn strip_position(msg: &str) -> &str {
    msg.find(" at line ").map_or(msg, |i| &msg[..i])
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(json_error)
}

fn prefixed(e: Error, prefix: &str) -> Error {
    match e {
        Error::Invalid { field, reason } => Error::Invalid { field: format!("{prefix}.{field}"), reason },
        other => other,
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = parse_json(text)?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { context: path.display().to_string(), source })?;
    let mut scenario: Scenario = parse_json(&text)?;
    scenario.base_dir = path.parent().map(Path::to_path_buf);
    if scenario.name.is_none() {
        scenario.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "scenario".into())
    }

    /// Builds the schedule described by the document.
    pub fn spec(&self) -> Result<ScheduleSpec> {
        let [t0, t1] = self.schedule.t_span;
        let model = match &self.schedule.model {
            ModelConfig::Schwinger { omega0, theta, omega_l } => {
                Model::Schwinger { omega0: *omega0, theta: *theta, omega_l: *omega_l }
            }
            ModelConfig::RwaTwoLevel { delta0, rabi, omega_l } => {
                Model::RwaTwoLevel { delta0: *delta0, rabi: *rabi, omega_l: *omega_l }
            }
            ModelConfig::DressedTwoLevel { delta0, rabi } => Model::DressedTwoLevel { delta0: *delta0, rabi: *rabi },
            ModelConfig::Cycling { alpha, omega, rabi, swapped } => {
                Model::Cycling { alpha: *alpha, omega: *omega, rabi: *rabi, swapped: *swapped }
            }
            ModelConfig::LinearChirp { beta, rabi, t_center } => {
                Model::LinearChirp { beta: *beta, rabi: *rabi, t_center: *t_center }
            }
            ModelConfig::TableDriven { path } => {
                let full = match &self.base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                Model::TableDriven(HamiltonianTable::from_csv(&full).map_err(|e| prefixed(e, "schedule.model"))?)
            }
            ModelConfig::RandomSmooth { dim, seed, real, scale_a, scale_b } => {
                if *dim < 2 {
                    return Err(Error::invalid("schedule.model.dim", "dim must be ≥ 2"));
                }
                Model::RandomSmooth(RandomPair::generate(*dim, *seed, *real, *scale_a, *scale_b))
            }
        };
        ScheduleSpec::new(model, t0, t1).map_err(|e| prefixed(e, "schedule.model"))
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        if self.tasks.is_empty() {
            return Err(Error::invalid("tasks", "at least one task is required"));
        }
        match &self.initial {
            InitialConfig::Level(n) if *n >= spec.dim() => {
                return Err(Error::invalid("initial.level", format!("level {n} ≥ dimension {}", spec.dim())))
            }
            InitialConfig::Vector(v) if v.len() != spec.dim() => {
                return Err(Error::invalid("initial.vector", format!("{} components for dimension {}", v.len(), spec.dim())))
            }
            InitialConfig::Vector(v) if v.iter().all(|z| z[0] == 0.0 && z[1] == 0.0) => {
                return Err(Error::invalid("initial.vector", "zero vector"))
            }
            _ => {}
        }
        let t = &self.tolerances;
        if !(1e-13..=1e-6).contains(&t.tol) {
            return Err(Error::invalid("tolerances.tol", "must lie in [1e-13, 1e-6]"));
        }
        if !(t.margin > 0.0) {
            return Err(Error::invalid("tolerances.margin", "must be > 0"));
        }
        if !(t.noise_tol >= 0.0) {
            return Err(Error::invalid("tolerances.noise_tol", "must be ≥ 0"));
        }
        if !(t.gap_floor_rel > 0.0) {
            return Err(Error::invalid("tolerances.gap_floor_rel", "must be > 0"));
        }
        if self.grid.n_min < 2 {
            return Err(Error::invalid("grid.n_min", "must be ≥ 2"));
        }
        if !(self.grid.overlap_threshold > std::f64::consts::FRAC_1_SQRT_2 && self.grid.overlap_threshold <= 1.0) {
            return Err(Error::invalid("grid.overlap_threshold", "must lie in (1/√2, 1]"));
        }
        if self.passages.m == Some(0) {
            return Err(Error::invalid("passages.m", "must be ≥ 1"));
        }
        if self.tasks.contains(&Task::Passages) && !matches!(self.schedule.model, ModelConfig::Cycling { .. }) {
            return Err(Error::invalid("tasks", "the passages task needs a cycling schedule"));
        }
        Ok(())
    }

    /// Applies command-line overrides; the seed only affects random schedules.
    pub fn apply_overrides(&mut self, seed: Option<u64>, tol: Option<f64>, out: Option<PathBuf>, format: Option<Format>) {
        if let (Some(s), ModelConfig::RandomSmooth { seed, .. }) = (seed, &mut self.schedule.model) {
            *seed = s;
        }
        if let Some(t) = tol {
            self.tolerances.tol = t;
        }
        if out.is_some() {
            self.output.dir = out;
        }
        if let Some(f) = format {
            self.output.format = f;
        }
    }

    fn spectral_options(&self) -> SpectralOptions {
        SpectralOptions {
            gap_floor_rel: self.tolerances.gap_floor_rel,
            gap_scale: 0.0,
            overlap_threshold: self.grid.overlap_threshold,
            max_bisections: self.grid.max_bisections,
        }
    }

    fn criteria_options(&self) -> CriteriaOptions {
        CriteriaOptions {
            margin: self.tolerances.margin,
            noise_tol: self.tolerances.noise_tol,
            subdivide: self.tolerances.subdivide,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub level: usize,
    /// 1 − |b_n(T)|².
    pub infidelity: f64,
    /// max_t (1 − |b_n(t)|²).
    pub max_transfer: f64,
    pub norm_drift: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictRecord {
    pub condition: Condition,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Everything a run produced; the JSON view omits the bulky series.
#[derive(Clone, Debug, Serialize)]
pub struct ReportBundle {
    pub name: String,
    pub dim: usize,
    pub t_span: [f64; 2],
    pub tasks: Vec<Task>,
    pub grid_points: usize,
    pub tv_refinements: usize,
    pub simulation: Option<SimulationSummary>,
    pub criteria: Option<CriteriaReport>,
    pub verdicts: Vec<VerdictRecord>,
    pub real_two_level: Option<criteria::RealTwoLevel>,
    pub bounds: Option<criteria::BoundsReport>,
    pub passage: Option<PassageReport>,
    pub localization: Option<LocalizationReport>,
    #[serde(skip)]
    pub track: Option<FrameTrack>,
    #[serde(skip)]
    pub trajectory: Option<StateTrajectory>,
}

impl ReportBundle {
    pub fn verdict(&self, which: Condition) -> Option<Verdict> {
        self.verdicts.iter().find(|r| r.condition == which).map(|r| r.verdict)
    }

    /// Time-series tables keyed by file stem.
    pub fn tables(&self) -> Vec<(&'static str, Table)> {
        let mut out = Vec::new();
        if let Some(t) = &self.trajectory {
            out.push(("trajectory", report::trajectory_table(t)));
        }
        if let Some(t) = &self.track {
            out.push(("frames", report::frames_table(t)));
        }
        if let Some(r) = &self.criteria {
            out.push(("criteria", report::criteria_table(r)));
        }
        if let Some(p) = &self.passage {
            out.push(("passages", report::passages_table(std::slice::from_ref(p))));
        }
        out
    }
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    report: &'a ReportBundle,
    series: Vec<(&'static str, Table)>,
}

/// Writes the bundle: `report.json` plus CSV tables, or a single JSON
/// document carrying the tables. Returns the written paths.
pub fn write_outputs(bundle: &ReportBundle, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { context: dir.display().to_string(), source })?;
    let mut written = Vec::new();
    let report_path = dir.join("report.json");
    match format {
        Format::Csv => {
            report::write_json(&report_path, bundle)?;
            written.push(report_path);
            for (stem, table) in bundle.tables() {
                let path = dir.join(format!("{stem}.csv"));
                table.write_csv(&path)?;
                written.push(path);
            }
        }
        Format::Json => {
            report::write_json(&report_path, &JsonDocument { report: bundle, series: bundle.tables() })?;
            written.push(report_path);
        }
    }
    Ok(written)
}

fn initial_state(scenario: &Scenario, f0: &EigenFrame) -> (CVector, usize) {
    match &scenario.initial {
        InitialConfig::Level(n) => (f0.vector(*n).into_owned(), *n),
        InitialConfig::Vector(v) => {
            let mut psi = CVector::from_iterator(v.len(), v.iter().map(|z| c(z[0], z[1])));
            let norm = psi.norm();
            psi /= c(norm, 0.0);
            let weight = |m: usize| f0.vector(m).dotc(&psi).norm();
            let level = (0..f0.dim()).max_by(|&a, &b| weight(a).total_cmp(&weight(b))).unwrap_or(0);
            (psi, level)
        }
    }
}

/// Frames and criteria on a grid doubled until ∫|A′| is stable to 1%.
fn refined_criteria(
    scenario: &Scenario,
    spec: &ScheduleSpec,
    level: usize,
) -> Result<(FrameTrack, CriteriaReport, usize)> {
    let sopts = scenario.spectral_options();
    let copts = scenario.criteria_options();
    let mut n = scenario.grid.n_min;
    let mut track = frame_track(spec, &build_grid(spec, n)?, &sopts)?;
    let mut report = criteria::evaluate(spec, &track, level, &copts)?;
    let mut refinements = 0;
    if !scenario.grid.refine_tv {
        return Ok((track, report, 0));
    }
    while refinements < scenario.grid.max_refinements {
        let Some(tv) = report.tv else { break };
        n = 2 * track.len() - 1;
        let next_track = frame_track(spec, &build_grid(spec, n)?, &sopts)?;
        let next = criteria::evaluate(spec, &next_track, level, &copts)?;
        refinements += 1;
        let stable = match next.tv {
            // absolute floor: round-off level variation of a constant series
            Some(tv2) => (tv2 - tv).abs() <= 0.01 * tv2.abs() + 1e-6 * (1.0 + next.a_max),
            None => true,
        };
        track = next_track;
        report = next;
        if stable {
            break;
        }
    }
    Ok((track, report, refinements))
}

fn task_error(scenario: &Scenario, task: Task) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Task { scenario: scenario.display_name(), task: task.name().into(), source: Box::new(e) }
}

/// Executes the requested tasks in dependency order:
/// frames → criteria → trajectory → bounds, with passages independent.
pub fn run(scenario: &Scenario) -> Result<ReportBundle> {
    scenario.validate()?;
    let spec = scenario.spec()?;
    let mut tasks = scenario.tasks.clone();
    tasks.sort();
    tasks.dedup();
    let want = |t: Task| tasks.contains(&t);
    let need_criteria = want(Task::Criteria) || want(Task::Bounds);
    let need_simulation = want(Task::Simulate) || want(Task::Bounds);

    let mut bundle = ReportBundle {
        name: scenario.display_name(),
        dim: spec.dim(),
        t_span: scenario.schedule.t_span,
        tasks: tasks.clone(),
        grid_points: 0,
        tv_refinements: 0,
        simulation: None,
        criteria: None,
        verdicts: Vec::new(),
        real_two_level: None,
        bounds: None,
        passage: None,
        localization: None,
        track: None,
        trajectory: None,
    };

    if need_criteria || need_simulation {
        let first = if need_criteria { Task::Criteria } else { Task::Simulate };
        let sopts = scenario.spectral_options();
        let t0 = spec.t_span().0;
        let frame0 = eigenframe(&spec.h(t0)?, t0, None, &sopts).map_err(task_error(scenario, first))?;
        let (_, level) = initial_state(scenario, &frame0);

        let (track, crit) = if need_criteria {
            let (track, report, refinements) =
                refined_criteria(scenario, &spec, level).map_err(task_error(scenario, Task::Criteria))?;
            bundle.tv_refinements = refinements;
            let copts = scenario.criteria_options();
            bundle.verdicts = criteria::all_verdicts(&report, &copts)
                .map_err(task_error(scenario, Task::Criteria))?
                .into_iter()
                .map(|(condition, verdict)| VerdictRecord { condition, verdict })
                .collect();
            if spec.dim() == 2 && spec.dressed_parts(spec.t_span().0).is_some() {
                bundle.real_two_level = Some(
                    criteria::real_two_level_condition(&spec, &track).map_err(task_error(scenario, Task::Criteria))?,
                );
            }
            (track, Some(report))
        } else {
            let grid = build_grid(&spec, scenario.grid.n_min)?;
            (frame_track(&spec, &grid, &sopts).map_err(task_error(scenario, Task::Simulate))?, None)
        };
        bundle.grid_points = track.len();

        if need_simulation {
            let err = task_error(scenario, Task::Simulate);
            let (psi0, level) = initial_state(scenario, &track.frames[0]);
            let raw = propagate(&spec, &psi0, &track.grid, scenario.tolerances.tol).map_err(&err)?;
            let traj = adiabatic_amplitudes(&raw, &track, PhaseChoice::Theta1).map_err(&err)?;
            let pops = traj.population(level).map_err(&err)?;
            bundle.simulation = Some(SimulationSummary {
                level,
                infidelity: 1.0 - pops.last().copied().unwrap_or(1.0),
                max_transfer: pops.iter().map(|p| 1.0 - p).fold(0.0, f64::max),
                norm_drift: traj.norm_drift,
                accepted_steps: traj.stats.accepted,
                rejected_steps: traj.stats.rejected,
                rhs_evaluations: traj.stats.evaluations,
            });
            if want(Task::Bounds) {
                if let Some(report) = &crit {
                    bundle.bounds =
                        Some(criteria::evaluate_bounds(report, &traj).map_err(task_error(scenario, Task::Bounds))?);
                }
            }
            bundle.trajectory = Some(traj);
        }
        bundle.criteria = crit;
        bundle.track = Some(track);
    }

    if want(Task::Passages) {
        let err = task_error(scenario, Task::Passages);
        let tol = scenario.tolerances.tol;
        let points = scenario.passages.points;
        if matches!(scenario.schedule.model, ModelConfig::Cycling { swapped: true, .. }) {
            bundle.localization = Some(passages::localization_experiment(&spec, tol, points).map_err(&err)?);
        } else {
            let m = match scenario.passages.m {
                Some(m) => m,
                None => passages::find_crossings(&spec).map_err(&err)?.len().max(1),
            };
            bundle.passage = Some(passages::passage_experiment(&spec, m, tol, points).map_err(&err)?);
        }
    }
    Ok(bundle)
}

/// Names of the built-in scenarios.
pub const PRESET_NAMES: [&str; 8] = [
    "schwinger",
    "resonance-counterexample",
    "zeno-saturation",
    "rap-linear-chirp",
    "cycling-amplification",
    "cycling-localization",
    "random-n-level",
    "static",
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "schwinger" => include_str!("../presets/schwinger.json"),
        "resonance-counterexample" => include_str!("../presets/resonance-counterexample.json"),
        "zeno-saturation" => include_str!("../presets/zeno-saturation.json"),
        "rap-linear-chirp" => include_str!("../presets/rap-linear-chirp.json"),
        "cycling-amplification" => include_str!("../presets/cycling-amplification.json"),
        "cycling-localization" => include_str!("../presets/cycling-localization.json"),
        "random-n-level" => include_str!("../presets/random-n-level.json"),
        "static" => include_str!("../presets/static.json"),
        _ => return None,
    })
}

pub fn preset(name: &str) -> Result<Scenario> {
    let text = preset_text(name)
        .ok_or_else(|| Error::invalid("preset", format!("unknown preset `{name}`; known: {}", PRESET_NAMES.join(", "))))?;
    parse_scenario(text)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// A numeric field of the schedule model, or `t_start` / `t_end`.
    pub param: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn points(&self) -> Result<Vec<f64>> {
        let field = format!("axes.{}", self.param);
        match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) if n >= 1 => {
                if n == 1 {
                    return Ok(vec![a]);
                }
                match self.spacing {
                    Spacing::Linear => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
                    Spacing::Log => {
                        if !(a > 0.0 && b > 0.0) {
                            return Err(Error::invalid(field, "log spacing needs positive bounds"));
                        }
                        let (la, lb) = (a.ln(), b.ln());
                        Ok((0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect())
                    }
                }
            }
            _ => Err(Error::invalid(field, "give either a nonempty `values` list or `start`, `stop` and `count ≥ 1`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub base: Option<Scenario>,
    /// Built-in preset used as the base scenario.
    #[serde(default)]
    pub preset: Option<String>,
    pub axes: Vec<Axis>,
    /// Pair the axes element-wise instead of forming the cross product.
    #[serde(default)]
    pub zip: bool,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let sweep: SweepSpec = parse_json(text)?;
    sweep.base_scenario()?;
    if sweep.axes.is_empty() {
        return Err(Error::invalid("axes", "at least one axis is required"));
    }
    sweep.points()?;
    Ok(sweep)
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { context: path.display().to_string(), source })?;
    let mut sweep = parse_sweep(&text)?;
    if let Some(base) = &mut sweep.base {
        base.base_dir = path.parent().map(Path::to_path_buf);
    }
    Ok(sweep)
}

fn set_param(scenario: &Scenario, param: &str, value: f64) -> Result<Scenario> {
    let mut s = scenario.clone();
    match param {
        "t_start" => s.schedule.t_span[0] = value,
        "t_end" => s.schedule.t_span[1] = value,
        _ => {
            let mut model = serde_json::to_value(&s.schedule.model)
                .map_err(|e| Error::Contract(format!("model serialization failed: {e}")))?;
            let slot = model
                .get_mut(param)
                .filter(|v| v.is_number())
                .ok_or_else(|| Error::invalid(format!("axes.{param}"), "not a numeric parameter of the schedule model"))?;
            *slot = if slot.is_u64() {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::invalid(format!("axes.{param}"), "integer parameter needs integral values"));
                }
                serde_json::Value::from(value as u64)
            } else {
                serde_json::Value::from(value)
            };
            s.schedule.model = serde_json::from_value(model).map_err(|e| Error::invalid(format!("axes.{param}"), e.to_string()))?;
        }
    }
    Ok(s)
}

impl SweepSpec {
    pub fn base_scenario(&self) -> Result<Scenario> {
        match (&self.base, &self.preset) {
            (Some(b), None) => {
                b.validate()?;
                Ok(b.clone())
            }
            (None, Some(p)) => preset(p),
            _ => Err(Error::invalid("base", "give exactly one of `base` or `preset`")),
        }
    }

    /// Parameter tuples in lexicographic order of the axes.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        let axes = self.axes.iter().map(Axis::points).collect::<Result<Vec<_>>>()?;
        let mut points: Vec<Vec<f64>> = if self.zip {
            let len = axes[0].len();
            if axes.iter().any(|a| a.len() != len) {
                return Err(Error::invalid("zip", "zipped axes must have equal lengths"));
            }
            (0..len).map(|i| axes.iter().map(|a| a[i]).collect()).collect()
        } else {
            axes.iter().fold(vec![Vec::new()], |acc, axis| {
                acc.iter()
                    .flat_map(|prefix| {
                        axis.iter().map(move |&v| {
                            let mut p = prefix.clone();
                            p.push(v);
                            p
                        })
                    })
                    .collect()
            })
        };
        points.sort_by(|a, b| {
            a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(points)
    }
}

/// Scalar metrics collected per sweep point (missing ones stay empty).
pub const SWEEP_METRICS: [&str; 25] = [
    "usual_max",
    "a0_max",
    "a1_max",
    "a2_max",
    "omega",
    "omega_n",
    "tv",
    "min_gap",
    "m_count",
    "infidelity",
    "max_transfer",
    "norm_drift",
    "one_minus_bn",
    "zeno_bound",
    "one_minus_min_bn",
    "pointfix_bound",
    "M",
    "p1_pred",
    "theta_approx",
    "theta_num",
    "pM_pred",
    "pM_num",
    "pM_impulse",
    "return_probability",
    "j0",
];

fn metrics(b: &ReportBundle) -> Vec<Option<f64>> {
    let mut m: Vec<Option<f64>> = vec![None; SWEEP_METRICS.len()];
    let mut set = |name: &str, v: f64| {
        let j = SWEEP_METRICS.iter().position(|n| *n == name).unwrap();
        m[j] = Some(v);
    };
    if let Some(r) = &b.criteria {
        set("usual_max", r.usual.max_abs);
        set("a0_max", r.a0.iter().map(|p| p.series.max_abs).fold(0.0, f64::max));
        set("a1_max", if r.a_has_pole { f64::INFINITY } else { r.a_max });
        if let Some(a2) = &r.a2 {
            set("a2_max", a2.iter().map(|p| p.series.max_abs).fold(0.0, f64::max));
        }
        set("omega", r.omega);
        set("omega_n", r.omega_n);
        if let Some(tv) = r.tv {
            set("tv", tv);
        }
        set("min_gap", r.min_gap);
        set("m_count", r.max_m_count() as f64);
    }
    if let Some(s) = &b.simulation {
        set("infidelity", s.infidelity);
        set("max_transfer", s.max_transfer);
        set("norm_drift", s.norm_drift);
    }
    if let Some(x) = &b.bounds {
        set("one_minus_bn", x.one_minus_bn);
        set("zeno_bound", x.zeno.cosine);
        set("one_minus_min_bn", x.one_minus_min_bn);
        set("pointfix_bound", x.pointfix.one_minus_b_plus);
    }
    if let Some(p) = &b.passage {
        set("M", p.m as f64);
        set("p1_pred", p.lz.p1);
        set("theta_approx", p.theta.approx);
        set("theta_num", p.theta.numerical);
        set("pM_pred", p.p_pred.p);
        set("pM_num", p.p_num);
        set("pM_impulse", p.p_impulse);
    }
    if let Some(l) = &b.localization {
        set("return_probability", l.return_probability);
        set("j0", l.check.j0);
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub params: Vec<f64>,
    /// `None` when the point succeeded.
    pub error: Option<String>,
    pub metrics: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub metric_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn metric(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.metric_names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r.metrics[j]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = self.axes.clone();
        header.extend(self.metric_names.iter().cloned());
        header.push("error".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.params.iter().map(|&v| report::format_value(v)).collect();
            rec.extend(row.metrics.iter().map(|m| m.map(report::format_value).unwrap_or_default()));
            rec.push(row.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| Error::Io { context: path.display().to_string(), source })
    }
}

/// Runs every sweep point (concurrently up to `workers`); failures are
/// recorded per row. Metric columns that no row filled are dropped.
pub fn sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepTable> {
    let base = spec.base_scenario()?;
    let points = spec.points()?;
    let names: Vec<String> = spec.axes.iter().map(|a| a.param.clone()).collect();
    let eval = |p: &Vec<f64>| -> SweepRow {
        let result = names
            .iter()
            .zip(p)
            .try_fold(base.clone(), |s, (name, &v)| set_param(&s, name, v))
            .and_then(|s| run(&s));
        match result {
            Ok(b) => SweepRow { params: p.clone(), error: None, metrics: metrics(&b) },
            Err(e) => SweepRow { params: p.clone(), error: Some(e.to_string()), metrics: vec![None; SWEEP_METRICS.len()] },
        }
    };
    let threads = workers.or(spec.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Contract(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| points.par_iter().map(eval).collect());

    let keep: Vec<usize> = (0..SWEEP_METRICS.len()).filter(|&j| rows.iter().any(|r| r.metrics[j].is_some())).collect();
    let rows = rows
        .into_iter()
        .map(|r| SweepRow { metrics: keep.iter().map(|&j| r.metrics[j]).collect(), ..r })
        .collect();
    Ok(SweepTable { axes: names, metric_names: keep.iter().map(|&j| SWEEP_METRICS[j].to_string()).collect(), rows })
}
