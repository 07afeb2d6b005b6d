//! Experiment orchestration: scenario -> building -> flow fields ->
//! schedule -> simulation -> metrics, for staggered and/or simultaneous
//! starts with identical seeds across modes.

use std::fmt;
use std::sync::Arc;

use crate::building::Building;
use crate::dynamics::{build_world, RegionFields, SpawnError, WorldConfig};
use crate::flowfield::compute_flow_field;
use crate::metrics::{compare_runs, summarize, Comparison, ForceTrace, RunSummary};
use crate::output::{import_field_csv, OutputError};
use crate::scenario::Scenario;
use crate::scheduler::{
    build_schedule, calibrate_floor, compute_time_shift, ContinuityInputs, FloorCalibration,
    Schedule, ScheduleError, ScheduleMode,
};

#[derive(Debug)]
pub enum ExperimentError {
    Scenario(crate::scenario::ScenarioError),
    Schedule(ScheduleError),
    Spawn(SpawnError),
    FieldOverride(OutputError),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Scenario(e) => write!(f, "{e}"),
            ExperimentError::Schedule(e) => write!(f, "scheduling: {e}"),
            ExperimentError::Spawn(e) => write!(f, "spawning: {e}"),
            ExperimentError::FieldOverride(e) => write!(f, "field override: {e}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mode: ScheduleMode,
    pub schedule: Schedule,
    pub calibration: Option<FloorCalibration>,
    pub trace: ForceTrace,
    pub summary: RunSummary,
}

/// Outputs for the requested modes plus the comparison when both ran and
/// completed.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<RunOutput>,
    pub comparison: Option<Comparison>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn run(&self, mode: ScheduleMode) -> Option<&RunOutput> {
        self.runs.iter().find(|r| r.mode == mode)
    }

    pub fn all_completed(&self) -> bool {
        self.runs.iter().all(|r| r.summary.completed)
    }
}

/// A scenario compiled into simulation-ready parts: the building and the
/// three flow fields (with any file overrides applied).
pub struct Experiment {
    pub scenario: Scenario,
    pub building: Building,
    pub fields: RegionFields,
    pub warnings: Vec<String>,
}

impl Experiment {
    pub fn prepare(scenario: Scenario) -> Result<Experiment, ExperimentError> {
        let building = scenario
            .build_building()
            .map_err(ExperimentError::Scenario)?;

        let mut fields = RegionFields {
            upper: Arc::new(compute_flow_field(&building.upper.grid)),
            lower: Arc::new(compute_flow_field(&building.lower.grid)),
            stair: Arc::new(compute_flow_field(&building.staircase.unfolded)),
        };
        let overrides = &scenario.field_overrides;
        if let Some(path) = &overrides.upper {
            fields.upper = Arc::new(
                import_field_csv(&scenario.resolve_path(path), &building.upper.grid)
                    .map_err(ExperimentError::FieldOverride)?,
            );
        }
        if let Some(path) = &overrides.lower {
            fields.lower = Arc::new(
                import_field_csv(&scenario.resolve_path(path), &building.lower.grid)
                    .map_err(ExperimentError::FieldOverride)?,
            );
        }
        if let Some(path) = &overrides.stair {
            fields.stair = Arc::new(
                import_field_csv(&scenario.resolve_path(path), &building.staircase.unfolded)
                    .map_err(ExperimentError::FieldOverride)?,
            );
        }

        let mut warnings = Vec::new();
        if scenario.building.staircase.width_cs_m < scenario.building.floor.exit_width_cf_m {
            warnings.push(format!(
                "staircase narrower than the floor exit (c_s = {} m < c_f = {} m): \
                 the continuity equation implies agents speed up in the staircase",
                scenario.building.staircase.width_cs_m, scenario.building.floor.exit_width_cf_m
            ));
        }

        Ok(Experiment {
            scenario,
            building,
            fields,
            warnings,
        })
    }

    fn world_config(&self) -> WorldConfig {
        self.scenario.world_config()
    }

    /// Measure t_f and v_f on an isolated upper floor and derive the
    /// continuity time shift.
    pub fn calibrate(&self) -> Result<(FloorCalibration, f64, bool), ExperimentError> {
        let cal = calibrate_floor(
            &self.building.upper,
            self.fields.upper.clone(),
            &self.world_config(),
            self.scenario.dynamics.dt_s,
            self.scenario.dynamics.t_max_s,
        )
        .map_err(ExperimentError::Schedule)?;
        let (delta_t, clamped) = compute_time_shift(&ContinuityInputs {
            t_f: cal.t_f,
            l_s: self.scenario.staircase_length(),
            c_s: self.scenario.building.staircase.width_cs_m,
            c_f: self.scenario.building.floor.exit_width_cf_m,
            v_f: cal.v_f,
        })
        .map_err(ExperimentError::Schedule)?;
        Ok((cal, delta_t, clamped))
    }

    /// Run one schedule mode to completion (or t_max).
    pub fn run_mode(&self, mode: ScheduleMode) -> Result<RunOutput, ExperimentError> {
        let (calibration, schedule) = match mode {
            ScheduleMode::Simultaneous => {
                (None, build_schedule(0.0, self.building.floor_count, mode))
            }
            ScheduleMode::Staggered => {
                let (cal, delta_t, clamped) = self.calibrate()?;
                let mut schedule = build_schedule(delta_t, self.building.floor_count, mode);
                schedule.clamped = clamped;
                (Some(cal), schedule)
            }
        };

        let mut world = build_world(
            &self.building,
            &self.fields,
            &schedule.floor_start_times,
            &self.world_config(),
        )
        .map_err(ExperimentError::Spawn)?;

        let d = &self.scenario.dynamics;
        let (trace, _completed) = world.run_until_empty(
            d.dt_s,
            d.t_max_s,
            self.scenario.output.sample_interval_s,
            self.scenario.output.include_driving_force,
        );
        let summary = summarize(&trace).expect("trace always has at least one sample");
        Ok(RunOutput {
            mode,
            schedule,
            calibration,
            trace,
            summary,
        })
    }

    /// Run the requested modes with identical seeds and compare when both
    /// completed. Incomplete runs are reported in the summaries, never
    /// raised.
    pub fn run(&self, modes: &[ScheduleMode]) -> Result<ExperimentReport, ExperimentError> {
        let mut runs = Vec::new();
        for &mode in modes {
            runs.push(self.run_mode(mode)?);
        }
        let comparison = match (
            runs.iter().find(|r| r.mode == ScheduleMode::Staggered),
            runs.iter().find(|r| r.mode == ScheduleMode::Simultaneous),
        ) {
            (Some(stag), Some(sim)) => compare_runs(&stag.summary, &sim.summary).ok(),
            _ => None,
        };
        Ok(ExperimentReport {
            runs,
            comparison,
            warnings: self.warnings.clone(),
        })
    }
}
