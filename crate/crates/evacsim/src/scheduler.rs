//! Staggered-start scheduling from the pedestrian continuity equation.
//!
//! At the junction between a floor exit and its staircase, flux
//! conservation ties the speeds and channel widths together:
//!
//! ```text
//! v_f * c_f = v_s * c_s          staircase speed   v_s = v_f * c_f / c_s
//! t_s = l_s / v_s                staircase transit time
//! dt  = t_f - t_s                inter-floor start-time shift
//! ```
//!
//! where `t_f` is the time one floor takes to clear and `c_f`, `c_s` are
//! the exit and staircase widths. Starting floor `n` at `n * dt` keeps the
//! staircase density constant: each floor's crowd enters as the previous
//! one clears. `t_f` and `v_f` are measured by simulating a single floor.

use std::fmt;
use std::sync::Arc;

use crate::building::FloorPlan;
use crate::dynamics::{build_single_floor_world, SpawnError, WorldConfig};
use crate::flowfield::FlowField;

/// Everything the continuity relations need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityInputs {
    /// Floor clear time (s).
    pub t_f: f64,
    /// Staircase length (m).
    pub l_s: f64,
    /// Staircase width (m).
    pub c_s: f64,
    /// Floor exit width (m).
    pub c_f: f64,
    /// Speed at the floor exit (m/s).
    pub v_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleError {
    NonPositive(&'static str, f64),
    NegativeFloorTime(f64),
    CalibrationIncomplete { t_max: f64, remaining: usize },
    CalibrationSpawn(SpawnError),
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::NonPositive(name, v) => {
                write!(f, "{name} must be positive, got {v}")
            }
            ScheduleError::NegativeFloorTime(t) => {
                write!(f, "floor clear time must be >= 0, got {t}")
            }
            ScheduleError::CalibrationIncomplete { t_max, remaining } => write!(
                f,
                "floor calibration did not finish within {t_max} s ({remaining} agents left)"
            ),
            ScheduleError::CalibrationSpawn(e) => write!(f, "floor calibration: {e}"),
        }
    }
}

impl std::error::Error for ScheduleError {}

/// Speed in the staircase from flux conservation: `v_s = v_f c_f / c_s`.
/// By construction the output satisfies `v_s * c_s = v_f * c_f`.
pub fn staircase_speed(v_f: f64, c_f: f64, c_s: f64) -> Result<f64, ScheduleError> {
    require_positive("v_f", v_f)?;
    require_positive("c_f", c_f)?;
    require_positive("c_s", c_s)?;
    Ok(v_f * c_f / c_s)
}

/// Time to cover the staircase: `t_s = l_s / v_s`.
pub fn staircase_transit_time(l_s: f64, v_s: f64) -> Result<f64, ScheduleError> {
    if l_s < 0.0 {
        return Err(ScheduleError::NonPositive("l_s", l_s));
    }
    require_positive("v_s", v_s)?;
    Ok(l_s / v_s)
}

/// The start-time shift `dt = t_f - t_s`, clamped at zero. The boolean
/// reports clamping: a staircase slower to traverse than the floor is to
/// clear has no positive shift, and floors fall back to simultaneous
/// starts.
pub fn compute_time_shift(inputs: &ContinuityInputs) -> Result<(f64, bool), ScheduleError> {
    if inputs.t_f < 0.0 {
        return Err(ScheduleError::NegativeFloorTime(inputs.t_f));
    }
    let v_s = staircase_speed(inputs.v_f, inputs.c_f, inputs.c_s)?;
    let t_s = staircase_transit_time(inputs.l_s, v_s)?;
    let raw = inputs.t_f - t_s;
    Ok((raw.max(0.0), raw < 0.0))
}

fn require_positive(name: &'static str, value: f64) -> Result<(), ScheduleError> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(ScheduleError::NonPositive(name, value))
    }
}

/// Per-floor evacuation start times, floor 0 (ground) first.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub floor_start_times: Vec<f64>,
    pub delta_t: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Staggered,
    Simultaneous,
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleMode::Staggered => "staggered",
            ScheduleMode::Simultaneous => "simultaneous",
        })
    }
}

/// Build the start-time table: floor `n` starts at `n * delta_t` when
/// staggered (the ground floor moves first), all zeros when simultaneous.
pub fn build_schedule(delta_t: f64, floor_count: usize, mode: ScheduleMode) -> Schedule {
    assert!(delta_t >= 0.0 && floor_count >= 2);
    let floor_start_times = match mode {
        ScheduleMode::Simultaneous => vec![0.0; floor_count],
        ScheduleMode::Staggered => (0..floor_count).map(|n| n as f64 * delta_t).collect(),
    };
    Schedule {
        floor_start_times,
        delta_t: match mode {
            ScheduleMode::Simultaneous => 0.0,
            ScheduleMode::Staggered => delta_t,
        },
        clamped: false,
    }
}

/// Result of measuring one floor in isolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorCalibration {
    /// Time the last agent crossed the floor exit (s).
    pub t_f: f64,
    /// Mean speed of agents at the moment each crossed the exit band (m/s).
    pub v_f: f64,
    /// Set when the floor had no agents and `v_f` fell back to the
    /// configured desired speed.
    pub no_samples: bool,
}

/// Simulate the floor plan in isolation (agents start at t = 0, the exit
/// band absorbs them) and measure `t_f` and `v_f`. Deterministic for a
/// given seed in `config`.
pub fn calibrate_floor(
    plan: &FloorPlan,
    field: Arc<FlowField>,
    config: &WorldConfig,
    dt: f64,
    t_max: f64,
) -> Result<FloorCalibration, ScheduleError> {
    let mut world =
        build_single_floor_world(plan, field, config).map_err(ScheduleError::CalibrationSpawn)?;

    if plan.initial_agent_count == 0 {
        return Ok(FloorCalibration {
            t_f: 0.0,
            v_f: config.template.desired_speed,
            no_samples: true,
        });
    }

    while !world.all_evacuated() && world.sim_time() < t_max {
        world.step(dt);
    }
    if !world.all_evacuated() {
        let counts = world.counts();
        return Err(ScheduleError::CalibrationIncomplete {
            t_max,
            remaining: counts.active + counts.inert,
        });
    }

    let speeds = world.crossing_speeds();
    let v_f = speeds.iter().sum::<f64>() / speeds.len() as f64;
    Ok(FloorCalibration {
        t_f: world.last_evacuation_time().expect("all evacuated"),
        v_f,
        no_samples: false,
    })
}
