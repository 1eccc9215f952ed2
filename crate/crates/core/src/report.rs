//! Flat tables for CSV/JSON emission.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::criteria::CriteriaReport;
use crate::passages::PassageReport;
use crate::propagator::StateTrajectory;
use crate::spectral::FrameTrack;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invalid("format", format!("expected `csv` or `json`, got `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Column-named numeric table.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_value(v)))?;
        }
        w.flush().map_err(|source| Error::Io { context: path.display().to_string(), source })
    }
}

/// Shortest round-trip text; scientific notation outside [1e-4, 1e15).
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// t, Re/Im ψ_i, |b_i|² (when available) and |‖ψ‖ − 1| per grid time.
pub fn trajectory_table(traj: &StateTrajectory) -> Table {
    let n = traj.dim();
    let mut cols = vec!["t".to_string()];
    for i in 0..n {
        cols.push(format!("psi{i}_re"));
        cols.push(format!("psi{i}_im"));
    }
    if traj.adiabatic_b.is_some() {
        cols.extend((0..n).map(|i| format!("b{i}_abs2")));
    }
    cols.push("norm_drift".into());
    let mut table = Table::new(cols);
    for (i, (&t, psi)) in traj.times().iter().zip(&traj.diabatic).enumerate() {
        let mut row = vec![t];
        for z in psi.iter() {
            row.push(z.re);
            row.push(z.im);
        }
        if let Some(b) = &traj.adiabatic_b {
            row.extend(b[i].iter().map(|z| z.norm_sqr()));
        }
        row.push((psi.norm() - 1.0).abs());
        table.push(row);
    }
    table
}

/// t, energies, minimum gap and |⟨m|k̇⟩| for every pair k < m.
pub fn frames_table(track: &FrameTrack) -> Table {
    let n = track.dim();
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("E{i}")));
    cols.push("gap".into());
    for k in 0..n {
        for m in k + 1..n {
            cols.push(format!("coupling_{k}_{m}"));
        }
    }
    let mut table = Table::new(cols);
    for (f, cm) in track.frames.iter().zip(&track.couplings) {
        let mut row = vec![f.t];
        row.extend(f.energies.iter().copied());
        row.push(f.gap);
        for k in 0..n {
            for m in k + 1..n {
                row.push(cm.c[(m, k)].norm());
            }
        }
        table.push(row);
    }
    table
}

/// t, usual-condition LHS and every A-functional pair series.
pub fn criteria_table(report: &CriteriaReport) -> Table {
    let mut cols = vec!["t".to_string(), "usual".to_string()];
    let mut series: Vec<&[f64]> = vec![&report.usual.values];
    let groups = [("a0", Some(&report.a0)), ("a1", Some(&report.a1)), ("a2", report.a2.as_ref())];
    for (name, group) in groups {
        for p in group.into_iter().flatten() {
            cols.push(format!("{name}_{}_{}", p.k, p.m));
            series.push(&p.series.values);
        }
    }
    let mut table = Table::new(cols);
    for (i, &t) in report.times.iter().enumerate() {
        let mut row = vec![t];
        row.extend(series.iter().map(|s| s[i]));
        table.push(row);
    }
    table
}

pub const PASSAGE_COLUMNS: [&str; 9] =
    ["alpha", "omega", "omega0", "M", "p1_pred", "theta_approx", "theta_num", "pM_pred", "pM_num"];

pub fn passage_row(r: &PassageReport) -> Vec<f64> {
    vec![r.alpha, r.omega, r.rabi, r.m as f64, r.lz.p1, r.theta.approx, r.theta.numerical, r.p_pred.p, r.p_num]
}

pub fn passages_table(reports: &[PassageReport]) -> Table {
    let mut table = Table::new(PASSAGE_COLUMNS.iter().map(|s| s.to_string()).collect());
    for r in reports {
        table.push(passage_row(r));
    }
    table
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Contract(format!("report serialization failed: {e}")))?;
    fs::write(path, text + "\n").map_err(|source| Error::Io { context: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_round_trip() {
        for f in [Format::Csv, Format::Json] {
            assert_eq!(f.to_string().parse::<Format>().unwrap(), f);
        }
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn table_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.push(vec![0.1, 1e-300]);
        t.push(vec![-2.5, f64::INFINITY]);
        let path = dir.path().join("t.csv");
        t.write_csv(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n0.1,1e-300\n-2.5,inf\n");
        assert_eq!(t.column("b").unwrap()[0], 1e-300);
    }
}
