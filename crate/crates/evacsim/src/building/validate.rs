//! Scenario validation: pure structural checks that never abort.

use std::fmt;

use crate::building::staircase::LENGTH_TOLERANCE;
use crate::building::{Building, CellGrid, CellKind};
use crate::flowfield::compute_distance_field;

/// Physical agent parameters relevant to validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    pub radius: f64,
    pub mass: f64,
    pub desired_speed: f64,
    pub relaxation_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticCode {
    BadAgentParams,
    OpenBoundary,
    MissingExit,
    MissingArrivalBand,
    UnreachableFreeCells,
    ExitWidthMismatch,
    ChannelWidthMismatch,
    ChannelLengthMismatch,
    OvercrowdedPlacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

fn diag(code: DiagnosticCode, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        code,
        message: message.into(),
    }
}

/// Check every structural invariant of a building plus agent feasibility.
/// Returns an empty list iff the scenario is sound; never panics.
pub fn validate_scenario(building: &Building, agents: &AgentParams) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if !(agents.radius > 0.0
        && agents.mass > 0.0
        && agents.desired_speed >= 0.0
        && agents.relaxation_time > 0.0)
    {
        out.push(diag(
            DiagnosticCode::BadAgentParams,
            format!(
                "agent parameters must be positive (radius {}, mass {}, v0 {}, tau {})",
                agents.radius, agents.mass, agents.desired_speed, agents.relaxation_time
            ),
        ));
    }

    check_grid(&building.lower.grid, "lower floor", &mut out);
    check_grid(&building.upper.grid, "upper floor", &mut out);
    check_grid(&building.staircase.unfolded, "staircase", &mut out);

    check_exit_width(building, &mut out);
    check_arrival_bands(building, &mut out);
    check_staircase_channel(building, &mut out);
    check_crowding(building, agents, &mut out);

    out
}

fn check_grid(grid: &CellGrid, name: &str, out: &mut Vec<Diagnostic>) {
    let open = grid.open_boundary_cells();
    if !open.is_empty() {
        out.push(diag(
            DiagnosticCode::OpenBoundary,
            format!("{name}: {} boundary cells are not closed", open.len()),
        ));
    }

    let goals = grid.count_of_kind(CellKind::Exit) + grid.count_of_kind(CellKind::StairEntry);
    if goals == 0 {
        out.push(diag(
            DiagnosticCode::MissingExit,
            format!("{name}: no Exit or StairEntry cell"),
        ));
        return;
    }

    let dist = compute_distance_field(grid);
    let stuck = (0..grid.height())
        .flat_map(|y| (0..grid.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| {
            grid.kind(x, y).is_walkable() && !dist[y * grid.width() + x].is_finite()
        })
        .count();
    if stuck > 0 {
        out.push(diag(
            DiagnosticCode::UnreachableFreeCells,
            format!("{name}: unreachable free cells ({stuck} cells cannot reach an exit)"),
        ));
    }
}

fn check_exit_width(building: &Building, out: &mut Vec<Diagnostic>) {
    for (plan, name) in [(&building.lower, "lower floor"), (&building.upper, "upper floor")] {
        let grid = &plan.grid;
        let band = grid.count_of_kind(CellKind::Exit) + grid.count_of_kind(CellKind::StairEntry);
        let measured = band as f64 * grid.cell_size();
        if (measured - plan.exit_width_cf).abs() > grid.cell_size() {
            out.push(diag(
                DiagnosticCode::ExitWidthMismatch,
                format!(
                    "{name}: exit band measures {measured:.2} m but c_f = {:.2} m",
                    plan.exit_width_cf
                ),
            ));
        }
    }
}

fn check_arrival_bands(building: &Building, out: &mut Vec<Diagnostic>) {
    if building.lower.arrival_portal().is_none() {
        out.push(diag(
            DiagnosticCode::MissingArrivalBand,
            "lower floor: no StairExit band to receive agents from the staircase",
        ));
    }
    if building.floor_count > 2 && building.upper.arrival_portal().is_none() {
        out.push(diag(
            DiagnosticCode::MissingArrivalBand,
            "upper floor: stacked floors need a StairExit arrival band",
        ));
    }
    if building.staircase.entry_portal().is_none() {
        out.push(diag(
            DiagnosticCode::MissingArrivalBand,
            "staircase: no StairExit entry band",
        ));
    }
}

fn check_staircase_channel(building: &Building, out: &mut Vec<Diagnostic>) {
    let stair = &building.staircase;
    let m = stair.measure();
    let cell = stair.unfolded.cell_size();
    if (m.width_m - stair.width_cs).abs() > cell {
        out.push(diag(
            DiagnosticCode::ChannelWidthMismatch,
            format!(
                "staircase channel width {:.2} m differs from c_s = {:.2} m by more than one cell",
                m.width_m, stair.width_cs
            ),
        ));
    }
    if (m.centerline_m - stair.length_ls).abs() > LENGTH_TOLERANCE * stair.length_ls {
        out.push(diag(
            DiagnosticCode::ChannelLengthMismatch,
            format!(
                "staircase centerline {:.2} m differs from l_s = {:.2} m by more than 5%",
                m.centerline_m, stair.length_ls
            ),
        ));
    }
}

fn check_crowding(building: &Building, agents: &AgentParams, out: &mut Vec<Diagnostic>) {
    for floor in 0..building.floor_count {
        let plan = building.floor_plan(floor);
        let free_area =
            plan.grid.walkable_count() as f64 * plan.grid.cell_size() * plan.grid.cell_size();
        let required =
            plan.initial_agent_count as f64 * std::f64::consts::PI * agents.radius * agents.radius;
        if required > free_area {
            out.push(diag(
                DiagnosticCode::OvercrowdedPlacement,
                format!(
                    "floor {floor}: overcrowded initial placement \
                     ({} agents need {required:.1} m2, free area {free_area:.1} m2)",
                    plan.initial_agent_count
                ),
            ));
            break; // identical floors would repeat the same diagnostic
        }
    }
}
