use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use adiabat::report::Format;
use adiabat::scenario::{self, Scenario, Task};
use adiabat::Error;

#[derive(Parser)]
#[command(name = "adiabat", version, about = "Adiabaticity criteria and exact bounds for time-dependent Hamiltonians")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory (overrides the document's output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random schedules.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integrator tolerance (relative and absolute).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the state and report adiabatic populations.
    Simulate { config: PathBuf },
    /// Evaluate adiabaticity functionals and condition verdicts.
    Criteria { config: PathBuf },
    /// Compare propagated defects with the exact bounds.
    Bounds { config: PathBuf },
    /// Landau-Zener-Stueckelberg analysis of a cycling schedule.
    Passages { config: PathBuf },
    /// Run every task listed in the document.
    Run { config: PathBuf },
    /// Run a parameter sweep document.
    Sweep { config: PathBuf },
    /// Run a built-in scenario by name.
    Preset {
        /// Preset name; omit with --list.
        name: Option<String>,
        /// List the available presets.
        #[arg(long)]
        list: bool,
        /// Print the preset document instead of running it.
        #[arg(long)]
        show: bool,
    },
}

fn format_of(common: &Common) -> Option<Format> {
    common.format.as_deref().map(|f| f.parse().expect("restricted by clap"))
}

fn execute(mut scenario: Scenario, tasks: Option<Vec<Task>>, common: &Common) -> anyhow::Result<()> {
    scenario.apply_overrides(common.seed, common.tol, common.out.clone(), format_of(common));
    if let Some(t) = tasks {
        scenario.tasks = t;
    }
    let bundle = scenario::run(&scenario)?;
    println!("{}", serde_json::to_string_pretty(&bundle)?);
    if let Some(dir) = &scenario.output.dir {
        let dir = match &scenario.base_dir {
            Some(base) if dir.is_relative() && common.out.is_none() => base.join(dir),
            _ => dir.clone(),
        };
        for path in scenario::write_outputs(&bundle, &dir, scenario.output.format)? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run_sweep(path: &Path, common: &Common) -> anyhow::Result<()> {
    let mut sweep = scenario::load_sweep(path)?;
    if let Some(base) = &mut sweep.base {
        base.apply_overrides(common.seed, common.tol, None, None);
    } else if common.seed.is_some() || common.tol.is_some() {
        let mut base = sweep.base_scenario()?;
        base.apply_overrides(common.seed, common.tol, None, None);
        sweep.base = Some(base);
        sweep.preset = None;
    }
    let table = scenario::sweep(&sweep, common.workers)?;
    let dir = common.out.clone().or_else(|| sweep.output.dir.clone());
    let format = format_of(common).unwrap_or(sweep.output.format);
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = match format {
                Format::Csv => {
                    let p = dir.join("sweep.csv");
                    table.write_csv(&p)?;
                    p
                }
                Format::Json => {
                    let p = dir.join("sweep.json");
                    adiabat::report::write_json(&p, &table)?;
                    p
                }
            };
            eprintln!("wrote {}", path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&table)?),
    }
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} sweep points failed", table.rows.len());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let common = &cli.common;
    let single = |config: &Path, task: Task| -> anyhow::Result<()> {
        execute(scenario::load_scenario(config)?, Some(vec![task]), common)
    };
    match cli.command {
        Command::Simulate { config } => single(&config, Task::Simulate),
        Command::Criteria { config } => single(&config, Task::Criteria),
        Command::Bounds { config } => single(&config, Task::Bounds),
        Command::Passages { config } => single(&config, Task::Passages),
        Command::Run { config } => execute(scenario::load_scenario(&config)?, None, common),
        Command::Sweep { config } => run_sweep(&config, common),
        Command::Preset { list: true, .. } | Command::Preset { name: None, .. } => {
            for name in scenario::PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Preset { name: Some(name), show, .. } => {
            if show {
                let text = scenario::preset_text(&name).ok_or_else(|| scenario::preset(&name).unwrap_err())?;
                print!("{text}");
                Ok(())
            } else {
                execute(scenario::preset(&name)?, None, common)
            }
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
