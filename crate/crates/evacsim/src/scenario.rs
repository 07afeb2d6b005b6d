//! Scenario files: the structured-text description that fully determines a
//! run. Parsing is strict (unknown keys are rejected), every parameter has
//! a documented default, and loading validates the assembled building
//! before any simulation starts.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::building::{
    ascii_floor, generated_floor, unfold_staircase, validate_scenario, AgentParams, Building,
    Diagnostic, FloorPlan, FloorRole, GeometryError, StaircaseKind,
};
use crate::dynamics::{AgentTemplate, ForceParams, WorldConfig};
use crate::scheduler::ScheduleMode;

#[derive(Debug)]
pub enum ScenarioError {
    Io { path: PathBuf, source: std::io::Error },
    Parse { path: PathBuf, message: String },
    Invalid { field: String, message: String },
    Geometry(GeometryError),
    Diagnostics(Vec<Diagnostic>),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Io { path, source } => {
                write!(f, "{}: {source}", path.display())
            }
            ScenarioError::Parse { path, message } => {
                write!(f, "{}: {message}", path.display())
            }
            ScenarioError::Invalid { field, message } => write!(f, "{field}: {message}"),
            ScenarioError::Geometry(e) => write!(f, "geometry: {e}"),
            ScenarioError::Diagnostics(ds) => {
                writeln!(f, "scenario failed validation:")?;
                for d in ds {
                    writeln!(f, "  - {d}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ScenarioError {}

impl From<GeometryError> for ScenarioError {
    fn from(e: GeometryError) -> Self {
        ScenarioError::Geometry(e)
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildingModeSpec {
    UnitCell,
    FullStack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaircaseKindSpec {
    LadderShort,
    LadderLong,
    Standard,
    Helical,
}

impl StaircaseKindSpec {
    pub fn kind(self) -> StaircaseKind {
        match self {
            StaircaseKindSpec::LadderShort => StaircaseKind::LadderShort,
            StaircaseKindSpec::LadderLong => StaircaseKind::LadderLong,
            StaircaseKindSpec::Standard => StaircaseKind::Standard,
            StaircaseKindSpec::Helical => StaircaseKind::Helical,
        }
    }

    /// Default centerline length when the scenario leaves it out. These are
    /// scenario parameters, not measured values: the short and long ladders
    /// differ only in escape-path length.
    pub fn default_length(self) -> f64 {
        match self {
            StaircaseKindSpec::LadderShort => 6.0,
            StaircaseKindSpec::LadderLong => 12.0,
            StaircaseKindSpec::Standard | StaircaseKindSpec::Helical => 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleModeSpec {
    Staggered,
    Simultaneous,
    Both,
}

impl ScheduleModeSpec {
    pub fn modes(self) -> Vec<ScheduleMode> {
        match self {
            ScheduleModeSpec::Staggered => vec![ScheduleMode::Staggered],
            ScheduleModeSpec::Simultaneous => vec![ScheduleMode::Simultaneous],
            ScheduleModeSpec::Both => vec![ScheduleMode::Staggered, ScheduleMode::Simultaneous],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorSpec {
    /// Free interior width in meters (generator route).
    #[serde(default)]
    pub width_m: Option<f64>,
    /// Free interior height in meters (generator route).
    #[serde(default)]
    pub height_m: Option<f64>,
    /// Explicit plan rows (ASCII route): '#' obstacle, '.' free, 'E' the
    /// floor exit band, 'X' the staircase arrival band.
    #[serde(default)]
    pub rows: Option<Vec<String>>,
    #[serde(default = "default_cell_size")]
    pub cell_size_m: f64,
    pub exit_width_cf_m: f64,
}

fn default_cell_size() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaircaseSpec {
    pub kind: StaircaseKindSpec,
    #[serde(default)]
    pub length_ls_m: Option<f64>,
    pub width_cs_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingSpec {
    #[serde(default = "default_mode")]
    pub mode: BuildingModeSpec,
    #[serde(default = "default_floor_count")]
    pub floor_count: usize,
    pub floor: FloorSpec,
    pub staircase: StaircaseSpec,
}

fn default_mode() -> BuildingModeSpec {
    BuildingModeSpec::UnitCell
}

fn default_floor_count() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSpec {
    pub count_per_floor: usize,
    #[serde(default = "default_mass")]
    pub mass_kg: f64,
    #[serde(default = "default_desired_speed")]
    pub desired_speed_mps: f64,
    #[serde(default)]
    pub desired_speed_jitter_mps: f64,
    #[serde(default = "default_relaxation_time")]
    pub relaxation_time_s: f64,
    #[serde(default = "default_radius")]
    pub radius_m: f64,
    /// Desired-speed multiplier inside staircases.
    #[serde(default = "default_stair_speed_factor")]
    pub stair_speed_factor: f64,
}

fn default_mass() -> f64 {
    80.0
}
fn default_desired_speed() -> f64 {
    1.5
}
fn default_relaxation_time() -> f64 {
    0.5
}
fn default_radius() -> f64 {
    0.3
}
fn default_stair_speed_factor() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default = "default_t_max")]
    pub t_max_s: f64,
    #[serde(default = "default_social_strength")]
    pub social_strength_n: f64,
    #[serde(default = "default_social_range")]
    pub social_range_m: f64,
    #[serde(default = "default_body_stiffness")]
    pub body_stiffness_n_per_m: f64,
    #[serde(default = "default_sliding_friction")]
    pub sliding_friction_kg_per_m_s: f64,
    #[serde(default = "default_cutoff")]
    pub interaction_cutoff_m: f64,
}

fn default_dt() -> f64 {
    0.01
}
fn default_t_max() -> f64 {
    300.0
}
fn default_social_strength() -> f64 {
    2000.0
}
fn default_social_range() -> f64 {
    0.08
}
fn default_body_stiffness() -> f64 {
    1.2e5
}
fn default_sliding_friction() -> f64 {
    2.4e5
}
fn default_cutoff() -> f64 {
    2.0
}

impl Default for DynamicsSpec {
    fn default() -> Self {
        DynamicsSpec {
            dt_s: default_dt(),
            t_max_s: default_t_max(),
            social_strength_n: default_social_strength(),
            social_range_m: default_social_range(),
            body_stiffness_n_per_m: default_body_stiffness(),
            sliding_friction_kg_per_m_s: default_sliding_friction(),
            interaction_cutoff_m: default_cutoff(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default = "default_schedule_mode")]
    pub mode: ScheduleModeSpec,
}

fn default_schedule_mode() -> ScheduleModeSpec {
    ScheduleModeSpec::Both
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            mode: default_schedule_mode(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_sample_interval")]
    pub sample_interval_s: f64,
    /// Fold the driving term into the averaged force (sensitivity runs).
    #[serde(default)]
    pub include_driving_force: bool,
    /// Default output directory; the CLI --out flag overrides it.
    #[serde(default)]
    pub directory: Option<String>,
}

fn default_sample_interval() -> f64 {
    0.1
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            sample_interval_s: default_sample_interval(),
            include_driving_force: false,
            directory: None,
        }
    }
}

/// Optional externally computed guidance fields, one CSV per region kind
/// (same x,y,vx,vy,distance layout the field export writes). Paths are
/// resolved relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldOverrideSpec {
    #[serde(default)]
    pub upper: Option<String>,
    #[serde(default)]
    pub lower: Option<String>,
    #[serde(default)]
    pub stair: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub building: BuildingSpec,
    pub agents: AgentsSpec,
    #[serde(default)]
    pub dynamics: DynamicsSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub field_overrides: FieldOverrideSpec,
    /// Directory the scenario was loaded from; override paths resolve
    /// against it.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Scenario {
    /// Parse and fully validate a scenario file.
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut scenario: Scenario =
            toml::from_str(&text).map_err(|e| ScenarioError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        scenario.base_dir = path.parent().map(Path::to_path_buf);
        scenario.check_fields()?;
        let building = scenario.build_building()?;
        let diagnostics = validate_scenario(&building, &scenario.agent_params());
        if !diagnostics.is_empty() {
            return Err(ScenarioError::Diagnostics(diagnostics));
        }
        scenario
            .force_params()
            .validate(scenario.agents.radius_m)
            .map_err(|m| invalid("dynamics.interaction_cutoff_m", m))?;
        Ok(scenario)
    }

    /// Field-level sanity checks with named fields.
    pub fn check_fields(&self) -> Result<(), ScenarioError> {
        let positive = [
            ("building.floor.cell_size_m", self.building.floor.cell_size_m),
            (
                "building.floor.exit_width_cf_m",
                self.building.floor.exit_width_cf_m,
            ),
            ("building.staircase.width_cs_m", self.building.staircase.width_cs_m),
            ("agents.mass_kg", self.agents.mass_kg),
            ("agents.relaxation_time_s", self.agents.relaxation_time_s),
            ("agents.radius_m", self.agents.radius_m),
            ("agents.stair_speed_factor", self.agents.stair_speed_factor),
            ("dynamics.dt_s", self.dynamics.dt_s),
            ("dynamics.t_max_s", self.dynamics.t_max_s),
            ("dynamics.social_strength_n", self.dynamics.social_strength_n),
            ("dynamics.social_range_m", self.dynamics.social_range_m),
            (
                "dynamics.body_stiffness_n_per_m",
                self.dynamics.body_stiffness_n_per_m,
            ),
            (
                "dynamics.sliding_friction_kg_per_m_s",
                self.dynamics.sliding_friction_kg_per_m_s,
            ),
            ("dynamics.interaction_cutoff_m", self.dynamics.interaction_cutoff_m),
            ("output.sample_interval_s", self.output.sample_interval_s),
        ];
        for (field, value) in positive {
            if !(value > 0.0) {
                return Err(invalid(field, format!("must be > 0, got {value}")));
            }
        }
        if let Some(l) = self.building.staircase.length_ls_m {
            if !(l > 0.0) {
                return Err(invalid(
                    "building.staircase.length_ls_m",
                    format!("must be > 0, got {l}"),
                ));
            }
        }
        if self.agents.desired_speed_mps < 0.0 || self.agents.desired_speed_jitter_mps < 0.0 {
            return Err(invalid(
                "agents.desired_speed_mps",
                "desired speed and jitter must be >= 0",
            ));
        }
        if self.building.mode == BuildingModeSpec::FullStack && self.building.floor_count < 2 {
            return Err(invalid(
                "building.floor_count",
                "a full stack needs at least 2 floors",
            ));
        }
        let f = &self.building.floor;
        match (&f.rows, f.width_m, f.height_m) {
            (Some(_), None, None) => {}
            (None, Some(_), Some(_)) => {}
            _ => {
                return Err(invalid(
                    "building.floor",
                    "give either rows or width_m + height_m, not both",
                ))
            }
        }
        Ok(())
    }

    pub fn staircase_length(&self) -> f64 {
        self.building
            .staircase
            .length_ls_m
            .unwrap_or_else(|| self.building.staircase.kind.default_length())
    }

    fn build_floor(&self, role: FloorRole) -> Result<FloorPlan, ScenarioError> {
        let f = &self.building.floor;
        let count = self.agents.count_per_floor;
        if let Some(rows) = &f.rows {
            return Ok(ascii_floor(rows, f.cell_size_m, f.exit_width_cf_m, count, role)?);
        }
        Ok(generated_floor(
            f.width_m.expect("checked"),
            f.height_m.expect("checked"),
            f.cell_size_m,
            f.exit_width_cf_m,
            self.building.staircase.width_cs_m,
            count,
            role,
        )?)
    }

    /// Assemble the building this scenario describes.
    pub fn build_building(&self) -> Result<Building, ScenarioError> {
        let staircase = unfold_staircase(
            self.building.staircase.kind.kind(),
            self.staircase_length(),
            self.building.staircase.width_cs_m,
            self.building.floor.cell_size_m,
        )?;
        let upper = self.build_floor(FloorRole::Upper)?;
        let lower = self.build_floor(FloorRole::Lower)?;
        let unit = Building::unit_cell(upper, staircase, lower);
        match self.building.mode {
            BuildingModeSpec::UnitCell => Ok(unit),
            BuildingModeSpec::FullStack => {
                Ok(unit.replicate_unit_cell(self.building.floor_count)?)
            }
        }
    }

    pub fn agent_params(&self) -> AgentParams {
        AgentParams {
            radius: self.agents.radius_m,
            mass: self.agents.mass_kg,
            desired_speed: self.agents.desired_speed_mps,
            relaxation_time: self.agents.relaxation_time_s,
        }
    }

    pub fn agent_template(&self) -> AgentTemplate {
        AgentTemplate {
            mass: self.agents.mass_kg,
            desired_speed: self.agents.desired_speed_mps,
            desired_speed_jitter: self.agents.desired_speed_jitter_mps,
            relaxation_time: self.agents.relaxation_time_s,
            radius: self.agents.radius_m,
        }
    }

    pub fn force_params(&self) -> ForceParams {
        ForceParams {
            social_strength: self.dynamics.social_strength_n,
            social_range: self.dynamics.social_range_m,
            body_stiffness: self.dynamics.body_stiffness_n_per_m,
            sliding_friction: self.dynamics.sliding_friction_kg_per_m_s,
            interaction_cutoff: self.dynamics.interaction_cutoff_m,
        }
    }

    pub fn world_config(&self) -> WorldConfig {
        WorldConfig {
            force_params: self.force_params(),
            template: self.agent_template(),
            stair_speed_factor: self.agents.stair_speed_factor,
            seed: self.seed,
        }
    }

    /// Resolve an override path against the scenario's directory.
    pub fn resolve_path(&self, relative: &str) -> PathBuf {
        match &self.base_dir {
            Some(dir) => dir.join(relative),
            None => PathBuf::from(relative),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }
}
