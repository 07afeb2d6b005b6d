//! File outputs: trace CSV, flow-field CSV (export and override import),
//! run summaries, the comparison report, and a gnuplot helper script.
//!
//! All writers format deterministically: identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::building::CellGrid;
use crate::flowfield::FlowField;
use crate::metrics::{Comparison, ForceTrace, RunSummary};
use crate::scheduler::{FloorCalibration, Schedule};
use crate::vec2::Vec2;

#[derive(Debug)]
pub enum OutputError {
    Io { path: PathBuf, source: std::io::Error },
    FieldFormat { path: PathBuf, message: String },
}

impl fmt::Display for OutputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            OutputError::FieldFormat { path, message } => {
                write!(f, "{}: {message}", path.display())
            }
        }
    }
}

impl std::error::Error for OutputError {}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    std::fs::write(path, contents).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Trace CSV: `time_s,active,avg_force_N,peak_force_N,evacuated`.
pub fn trace_csv(trace: &ForceTrace) -> String {
    let mut out = String::from("time_s,active,avg_force_N,peak_force_N,evacuated\n");
    for s in &trace.samples {
        let _ = writeln!(
            out,
            "{:.3},{},{:.6},{:.6},{}",
            s.time, s.active, s.avg_force, s.peak_force, s.evacuated
        );
    }
    out
}

pub fn export_trace_csv(trace: &ForceTrace, path: &Path) -> Result<(), OutputError> {
    write_file(path, &trace_csv(trace))
}

/// Field CSV: `x,y,vx,vy,distance`, one row per cell in row-major order.
/// Floats use shortest round-trip formatting so an exported field reimports
/// bit-exactly; unreachable cells carry `inf`.
pub fn field_csv(field: &FlowField) -> String {
    let mut out = String::from("x,y,vx,vy,distance\n");
    for y in 0..field.height() {
        for x in 0..field.width() {
            let v = field.vector(x, y);
            let _ = writeln!(out, "{x},{y},{},{},{}", v.x, v.y, field.distance(x, y));
        }
    }
    out
}

pub fn export_field_csv(field: &FlowField, path: &Path) -> Result<(), OutputError> {
    write_file(path, &field_csv(field))
}

/// Load an externally supplied guidance field for `grid`. Vectors are
/// normalized on load; the row count and coordinates must match the grid
/// exactly.
pub fn import_field_csv(path: &Path, grid: &CellGrid) -> Result<FlowField, OutputError> {
    let text = std::fs::read_to_string(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |message: String| OutputError::FieldFormat {
        path: path.to_path_buf(),
        message,
    };

    let mut lines = text.lines();
    match lines.next() {
        Some("x,y,vx,vy,distance") => {}
        other => {
            return Err(bad(format!(
                "expected header x,y,vx,vy,distance, got {other:?}"
            )))
        }
    }

    let (w, h) = (grid.width(), grid.height());
    let mut vectors = vec![Vec2::default(); w * h];
    let mut distance = vec![f64::INFINITY; w * h];
    let mut seen = 0usize;
    for (line_no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(format!("line {}: expected 5 fields", line_no + 2)));
        }
        let parse_usize = |s: &str| s.trim().parse::<usize>();
        let parse_f64 = |s: &str| s.trim().parse::<f64>();
        let (x, y) = match (parse_usize(fields[0]), parse_usize(fields[1])) {
            (Ok(x), Ok(y)) if x < w && y < h => (x, y),
            _ => return Err(bad(format!("line {}: bad cell coordinates", line_no + 2))),
        };
        let (vx, vy, d) = match (parse_f64(fields[2]), parse_f64(fields[3]), parse_f64(fields[4]))
        {
            (Ok(vx), Ok(vy), Ok(d)) => (vx, vy, d),
            _ => return Err(bad(format!("line {}: bad numbers", line_no + 2))),
        };
        if d < 0.0 && d.is_finite() {
            return Err(bad(format!("line {}: negative distance", line_no + 2)));
        }
        vectors[y * w + x] = Vec2::new(vx, vy).normalized();
        distance[y * w + x] = d;
        seen += 1;
    }
    if seen != w * h {
        return Err(bad(format!(
            "expected {} cell rows for a {w}x{h} grid, got {seen}",
            w * h
        )));
    }
    Ok(FlowField::from_parts(w, h, grid.cell_size(), vectors, distance))
}

/// Human- and machine-readable run report: schedule, calibration, summary,
/// anomalies, one `key: value` per line.
pub fn summary_report(
    mode_name: &str,
    schedule: &Schedule,
    calibration: Option<&FloorCalibration>,
    summary: &RunSummary,
    warnings: &[String],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode: {mode_name}");
    let _ = writeln!(out, "completed: {}", summary.completed);
    let _ = writeln!(out, "total_evacuation_time_s: {:.3}", summary.total_evacuation_time);
    let _ = writeln!(out, "peak_avg_force_N: {:.6}", summary.peak_avg_force);
    let _ = writeln!(out, "time_of_peak_s: {:.3}", summary.time_of_peak);
    let _ = writeln!(out, "delta_t_s: {:.6}", schedule.delta_t);
    let _ = writeln!(out, "delta_t_clamped: {}", schedule.clamped);
    let starts: Vec<String> = schedule
        .floor_start_times
        .iter()
        .map(|t| format!("{t:.3}"))
        .collect();
    let _ = writeln!(out, "floor_start_times_s: [{}]", starts.join(", "));
    if let Some(cal) = calibration {
        let _ = writeln!(out, "calibrated_t_f_s: {:.3}", cal.t_f);
        let _ = writeln!(out, "calibrated_v_f_mps: {:.6}", cal.v_f);
        let _ = writeln!(out, "calibration_no_samples: {}", cal.no_samples);
    }
    for (kind, count) in &summary.anomaly_counts {
        let _ = writeln!(out, "anomaly_{kind}: {count}");
    }
    for w in warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

/// Comparison report for a staggered-vs-simultaneous pair.
pub fn comparison_report(
    comparison: &Comparison,
    staggered: &RunSummary,
    simultaneous: &RunSummary,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pattern: {}", comparison.pattern);
    let _ = writeln!(out, "delta_total_time_s: {:.3}", comparison.delta_total_time);
    let _ = writeln!(out, "delta_peak_force_N: {:.6}", comparison.delta_peak_force);
    let _ = writeln!(
        out,
        "force_reduction_ratio: {:.6}",
        comparison.force_reduction_ratio
    );
    let _ = writeln!(
        out,
        "staggered_total_time_s: {:.3}",
        staggered.total_evacuation_time
    );
    let _ = writeln!(out, "staggered_peak_avg_force_N: {:.6}", staggered.peak_avg_force);
    let _ = writeln!(
        out,
        "simultaneous_total_time_s: {:.3}",
        simultaneous.total_evacuation_time
    );
    let _ = writeln!(
        out,
        "simultaneous_peak_avg_force_N: {:.6}",
        simultaneous.peak_avg_force
    );
    out
}

/// A gnuplot script plotting the avg-force curves found in `dir`.
pub fn gnuplot_script() -> String {
    concat!(
        "set datafile separator ','\n",
        "set xlabel 'evacuation time (s)'\n",
        "set ylabel 'average force per pedestrian (N)'\n",
        "set key top right\n",
        "set term pngcairo size 960,600\n",
        "set output 'avg_force.png'\n",
        "plot 'staggered.csv' using 1:3 with lines title 'staggered', \\\n",
        "     'simultaneous.csv' using 1:3 with lines title 'simultaneous'\n",
    )
    .to_string()
}

pub fn write_gnuplot_script(path: &Path) -> Result<(), OutputError> {
    write_file(path, &gnuplot_script())
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), OutputError> {
    write_file(path, contents)
}
