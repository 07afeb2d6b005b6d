//! Command-line interface for the `evacsim` binary.
//!
//! Exit codes: 0 success, 1 validation failure, 2 run incomplete at t_max,
//! 3 I/O error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::experiment::{Experiment, ExperimentError};
use crate::output;
use crate::scenario::{Scenario, ScenarioError, ScheduleModeSpec};
use crate::scheduler::ScheduleMode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INCOMPLETE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser)]
#[command(
    name = "evacsim",
    about = "Agent-based skyscraper evacuation simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario in one or both schedule modes and write CSV traces.
    Run(RunArgs),
    /// Export a region's flow field as CSV.
    Field(FieldArgs),
    /// Validate a scenario file and print diagnostics.
    Validate(ValidateArgs),
    /// Write a gnuplot script that plots the exported traces.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Staggered,
    Simultaneous,
    Both,
}

impl ModeArg {
    fn spec(self) -> ScheduleModeSpec {
        match self {
            ModeArg::Staggered => ScheduleModeSpec::Staggered,
            ModeArg::Simultaneous => ScheduleModeSpec::Simultaneous,
            ModeArg::Both => ScheduleModeSpec::Both,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    seed: u64,
    /// Integrator step in seconds (overrides the scenario).
    #[arg(long)]
    dt: Option<f64>,
    /// Simulation time budget in seconds (overrides the scenario).
    #[arg(long)]
    tmax: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegionArg {
    Upper,
    Lower,
    Stair,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Which region's field to export.
    #[arg(long, value_enum, default_value = "lower")]
    region: RegionArg,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory holding staggered.csv / simultaneous.csv.
    #[arg(long)]
    dir: PathBuf,
}

/// Parse arguments from the process environment and execute; returns the
/// exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Field(args) => cmd_field(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

fn scenario_exit_code(err: &ScenarioError) -> i32 {
    match err {
        ScenarioError::Io { .. } => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

fn experiment_exit_code(err: &ExperimentError) -> i32 {
    match err {
        ExperimentError::Scenario(e) => scenario_exit_code(e),
        ExperimentError::FieldOverride(output::OutputError::Io { .. }) => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

fn load(path: &Path) -> Result<Scenario, i32> {
    Scenario::load(path).map_err(|e| {
        eprintln!("error: {e}");
        scenario_exit_code(&e)
    })
}

fn cmd_run(args: RunArgs) -> i32 {
    let mut scenario = match load(&args.scenario) {
        Ok(s) => s,
        Err(code) => return code,
    };
    scenario.seed = args.seed;
    if let Some(dt) = args.dt {
        scenario.dynamics.dt_s = dt;
    }
    if let Some(tmax) = args.tmax {
        scenario.dynamics.t_max_s = tmax;
    }
    if let Err(e) = scenario.check_fields() {
        eprintln!("error: {e}");
        return EXIT_VALIDATION;
    }

    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: {}: {e}", args.out.display());
        return EXIT_IO;
    }

    let experiment = match Experiment::prepare(scenario) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return experiment_exit_code(&e);
        }
    };
    let modes = args.mode.spec().modes();
    let report = match experiment.run(&modes) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return experiment_exit_code(&e);
        }
    };

    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }

    for run in &report.runs {
        let name = run.mode.to_string();
        let csv_path = args.out.join(format!("{name}.csv"));
        if let Err(e) = output::export_trace_csv(&run.trace, &csv_path) {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
        let report_text = output::summary_report(
            &name,
            &run.schedule,
            run.calibration.as_ref(),
            &run.summary,
            &report.warnings,
        );
        if let Err(e) = output::write_text(&args.out.join(format!("{name}_summary.txt")), &report_text)
        {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
        println!(
            "{name}: total_time={:.3}s peak_avg_force={:.3}N completed={}",
            run.summary.total_evacuation_time, run.summary.peak_avg_force, run.summary.completed
        );
    }

    if let Some(comparison) = &report.comparison {
        let stag = report.run(ScheduleMode::Staggered).unwrap();
        let sim = report.run(ScheduleMode::Simultaneous).unwrap();
        let text = output::comparison_report(comparison, &stag.summary, &sim.summary);
        if let Err(e) = output::write_text(&args.out.join("comparison.txt"), &text) {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
        println!(
            "comparison: pattern={} delta_time={:.3}s force_reduction={:.3}",
            comparison.pattern, comparison.delta_total_time, comparison.force_reduction_ratio
        );
    } else if modes.len() == 2 {
        eprintln!("comparison skipped: at least one run did not complete");
    }

    if report.all_completed() {
        EXIT_OK
    } else {
        eprintln!("incomplete: agents remained at t_max in at least one mode");
        EXIT_INCOMPLETE
    }
}

fn cmd_field(args: FieldArgs) -> i32 {
    let scenario = match load(&args.scenario) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let experiment = match Experiment::prepare(scenario) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return experiment_exit_code(&e);
        }
    };
    let field = match args.region {
        RegionArg::Upper => &experiment.fields.upper,
        RegionArg::Lower => &experiment.fields.lower,
        RegionArg::Stair => &experiment.fields.stair,
    };
    match output::export_field_csv(field, &args.out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
    }
}

fn cmd_validate(args: ValidateArgs) -> i32 {
    match Scenario::load(&args.scenario) {
        Ok(scenario) => {
            println!(
                "ok: {}",
                scenario.name.as_deref().unwrap_or("unnamed scenario")
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            scenario_exit_code(&e)
        }
    }
}

fn cmd_plot(args: PlotArgs) -> i32 {
    match output::write_gnuplot_script(&args.dir.join("plot.gp")) {
        Ok(()) => {
            println!("wrote {}", args.dir.join("plot.gp").display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
    }
}
