//! Simulation core: integrates the social-force equation of motion for all
//! agents and moves them across floor -> staircase -> floor boundaries.
//!
//! Within a step, per-agent forces are evaluated against an immutable
//! snapshot (positions, fields, neighbor index) and may run on several
//! workers; sums use a fixed ascending-id order, so parallel evaluation
//! reproduces serial results bit for bit. Velocity and position updates are
//! applied in a deterministic single pass afterwards.

pub mod forces;
mod spatial;
mod spawn;

pub use forces::{agent_agent_force, agent_wall_force, driving_force, driving_force_toward};
pub use spatial::SpatialHash;
pub use spawn::{spawn_agents, AgentTemplate, SpawnError};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::building::{Building, CellGrid, Portal};
use crate::flowfield::FlowField;
use crate::metrics::ForceTrace;
use crate::vec2::Vec2;

/// Force evaluation runs on the rayon pool above this many active agents.
const PARALLEL_THRESHOLD: usize = 64;

/// Speed clamp: velocities are capped at this multiple of the effective
/// desired speed to keep contact forces from launching agents.
pub const SPEED_CLAMP_FACTOR: f64 = 1.5;

/// Where an agent currently is: a floor or a staircase instance.
/// Staircase `i` connects floor `i + 1` down to floor `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionId {
    Floor(usize),
    Stair(usize),
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionId::Floor(n) => write!(f, "floor {n}"),
            RegionId::Stair(i) => write!(f, "staircase {i}"),
        }
    }
}

/// One pedestrian.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: u32,
    pub region: RegionId,
    pub position: Vec2,
    pub velocity: Vec2,
    pub mass: f64,
    pub desired_speed: f64,
    pub relaxation_time: f64,
    pub radius: f64,
    /// The agent is inert (exerts and receives nothing) before this time.
    pub start_time: f64,
    /// Set once when the agent leaves the building; never changes after.
    pub evacuated_at: Option<f64>,
}

impl Agent {
    pub fn is_evacuated(&self) -> bool {
        self.evacuated_at.is_some()
    }

    pub fn is_active(&self, sim_time: f64) -> bool {
        self.evacuated_at.is_none() && self.start_time <= sim_time
    }

    pub fn is_inert(&self, sim_time: f64) -> bool {
        self.evacuated_at.is_none() && self.start_time > sim_time
    }
}

/// Repulsion parameters shared by all pair and wall interactions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceParams {
    /// Social repulsion strength A (N).
    pub social_strength: f64,
    /// Social repulsion range B (m).
    pub social_range: f64,
    /// Body-contact stiffness k (N/m).
    pub body_stiffness: f64,
    /// Sliding-friction coefficient kappa (kg/(m s)).
    pub sliding_friction: f64,
    /// Interactions beyond this center distance are ignored (m).
    pub interaction_cutoff: f64,
}

impl Default for ForceParams {
    fn default() -> Self {
        ForceParams {
            social_strength: 2000.0,
            social_range: 0.08,
            body_stiffness: 1.2e5,
            sliding_friction: 2.4e5,
            interaction_cutoff: 2.0,
        }
    }
}

impl ForceParams {
    /// All parameters strictly positive and the cutoff long enough that the
    /// social term has decayed by e^-5 at the horizon.
    pub fn validate(&self, max_radius: f64) -> Result<(), String> {
        if !(self.social_strength > 0.0
            && self.social_range > 0.0
            && self.body_stiffness > 0.0
            && self.sliding_friction > 0.0
            && self.interaction_cutoff > 0.0)
        {
            return Err("force parameters must be strictly positive".into());
        }
        let min_cutoff = 2.0 * max_radius + 5.0 * self.social_range;
        if self.interaction_cutoff < min_cutoff {
            return Err(format!(
                "interaction_cutoff {} m is below 2*radius + 5*B = {min_cutoff} m",
                self.interaction_cutoff
            ));
        }
        Ok(())
    }
}

/// Odd events counted during a run and reported in the summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AnomalyKind {
    ZeroFieldVector,
    CoincidentCenters,
    InsideObstacle,
    SpeedClamped,
    WallSlide,
    BlockedTransfer,
    EmptySample,
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AnomalyKind::ZeroFieldVector => "zero_field_vector",
            AnomalyKind::CoincidentCenters => "coincident_centers",
            AnomalyKind::InsideObstacle => "inside_obstacle",
            AnomalyKind::SpeedClamped => "speed_clamped",
            AnomalyKind::WallSlide => "wall_slide",
            AnomalyKind::BlockedTransfer => "blocked_transfer",
            AnomalyKind::EmptySample => "empty_sample",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Anomalies {
    counts: BTreeMap<AnomalyKind, u64>,
}

impl Anomalies {
    pub fn add(&mut self, kind: AnomalyKind, n: u64) {
        if n > 0 {
            *self.counts.entry(kind).or_insert(0) += n;
        }
    }

    pub fn get(&self, kind: AnomalyKind) -> u64 {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (AnomalyKind, u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    pub fn as_map(&self) -> &BTreeMap<AnomalyKind, u64> {
        &self.counts
    }
}

/// What crossing a region's goal band means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitTarget {
    /// The goal band is the building exit.
    Evacuate,
    /// The goal band feeds the entry band of another region (by index).
    ToRegion(usize),
}

/// A floor or staircase instance ready for simulation: immutable geometry,
/// its flow field, and the coupling to the next region.
#[derive(Debug, Clone)]
pub struct Region {
    pub id: RegionId,
    pub grid: Arc<CellGrid>,
    pub field: Arc<FlowField>,
    pub goal_portal: Portal,
    pub entry_portal: Option<Portal>,
    pub exit_to: ExitTarget,
    /// Effective desired speed multiplier inside this region.
    pub speed_factor: f64,
}

/// Population bookkeeping at an instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub spawned: usize,
    pub active: usize,
    pub inert: usize,
    pub evacuated: usize,
}

/// Per-agent result of one force evaluation.
#[derive(Debug, Clone, Copy, Default)]
struct StepForce {
    total: Vec2,
    repulsion_mag: f64,
    repulsion_plus_driving_mag: f64,
    zero_field: bool,
    coincident_pairs: u64,
    inside_obstacle: u64,
}

/// The complete mutable simulation state.
#[derive(Debug)]
pub struct World {
    sim_time: f64,
    floor_count: usize,
    regions: Vec<Region>,
    agents: Vec<Agent>,
    params: ForceParams,
    hash: SpatialHash,
    anomalies: Anomalies,
    /// Magnitude of each agent's summed repulsive force from the latest
    /// step (slot-indexed; stale for inactive agents).
    last_repulsion: Vec<f64>,
    last_repulsion_plus_driving: Vec<f64>,
    /// Speed of each agent at the moment it crossed the building exit.
    crossing_speeds: Vec<f64>,
}

impl World {
    /// Assemble a world from prepared regions and agents. `floor_count` is
    /// the number of leading regions that are floors.
    pub fn new(
        regions: Vec<Region>,
        agents: Vec<Agent>,
        params: ForceParams,
        floor_count: usize,
    ) -> World {
        let n = agents.len();
        World {
            sim_time: 0.0,
            floor_count,
            regions,
            agents,
            params,
            hash: SpatialHash::new(params.interaction_cutoff),
            anomalies: Anomalies::default(),
            last_repulsion: vec![0.0; n],
            last_repulsion_plus_driving: vec![0.0; n],
            crossing_speeds: Vec::new(),
        }
    }

    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn params(&self) -> &ForceParams {
        &self.params
    }

    pub fn anomalies(&self) -> &Anomalies {
        &self.anomalies
    }

    pub fn crossing_speeds(&self) -> &[f64] {
        &self.crossing_speeds
    }

    /// Repulsion magnitude of agent `i` from the latest step (with or
    /// without the driving term folded in).
    pub fn last_force_magnitude(&self, i: usize, include_driving: bool) -> f64 {
        if include_driving {
            self.last_repulsion_plus_driving[i]
        } else {
            self.last_repulsion[i]
        }
    }

    pub fn region_index(&self, id: RegionId) -> usize {
        match id {
            RegionId::Floor(n) => n,
            RegionId::Stair(i) => self.floor_count + i,
        }
    }

    pub fn counts(&self) -> Counts {
        let mut c = Counts {
            spawned: self.agents.len(),
            active: 0,
            inert: 0,
            evacuated: 0,
        };
        for a in &self.agents {
            if a.is_evacuated() {
                c.evacuated += 1;
            } else if a.is_inert(self.sim_time) {
                c.inert += 1;
            } else {
                c.active += 1;
            }
        }
        c
    }

    pub fn all_evacuated(&self) -> bool {
        self.agents.iter().all(Agent::is_evacuated)
    }

    /// Time the last agent left the building, if everyone has.
    pub fn last_evacuation_time(&self) -> Option<f64> {
        self.agents
            .iter()
            .map(|a| a.evacuated_at)
            .collect::<Option<Vec<f64>>>()
            .map(|ts| ts.into_iter().fold(0.0, f64::max))
    }

    fn active_indices(&self) -> Vec<u32> {
        self.agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_active(self.sim_time))
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Force on one agent against the current immutable snapshot.
    fn force_on(&self, i: u32) -> StepForce {
        let agent = &self.agents[i as usize];
        let ridx = self.region_index(agent.region);
        let region = &self.regions[ridx];

        let sample = region.field.lookup(&region.grid, agent.position);
        let zero_field = sample.anomaly || sample.direction.is_zero();
        let v0 = agent.desired_speed * region.speed_factor;
        let driving = forces::driving_force_toward(agent, sample.direction, v0);

        let mut pair_sum = Vec2::default();
        let mut coincident_pairs = 0u64;
        for j in self.hash.candidates(ridx, agent.position, i) {
            let other = &self.agents[j as usize];
            if (agent.position - other.position).norm() > self.params.interaction_cutoff {
                continue;
            }
            let (f, coincident) = forces::agent_agent_force(agent, other, &self.params);
            pair_sum += f;
            if coincident {
                coincident_pairs += 1;
            }
        }

        let (wall_sum, wall_anomalies) = forces::agent_wall_force(agent, &region.grid, &self.params);
        let repulsion = pair_sum + wall_sum;

        StepForce {
            total: driving + repulsion,
            repulsion_mag: repulsion.norm(),
            repulsion_plus_driving_mag: (repulsion + driving).norm(),
            zero_field,
            coincident_pairs,
            inside_obstacle: wall_anomalies.inside_obstacle,
        }
    }

    /// Advance the world by `dt`: evaluate forces for all active agents,
    /// integrate semi-implicit Euler with speed clamping, then resolve
    /// goal-band crossings (transfers and evacuations).
    pub fn step(&mut self, dt: f64) {
        assert!(dt > 0.0, "time step must be positive");
        let active = self.active_indices();

        let floor_count = self.floor_count;
        let agents = &self.agents;
        self.hash.rebuild(
            active.iter().map(|&i| (i, &agents[i as usize])),
            |a| match a.region {
                RegionId::Floor(n) => n,
                RegionId::Stair(i) => floor_count + i,
            },
        );

        let step_forces: Vec<StepForce> = if active.len() >= PARALLEL_THRESHOLD {
            active.par_iter().map(|&i| self.force_on(i)).collect()
        } else {
            active.iter().map(|&i| self.force_on(i)).collect()
        };

        let new_time = self.sim_time + dt;

        for (k, &i) in active.iter().enumerate() {
            let f = &step_forces[k];
            self.anomalies
                .add(AnomalyKind::ZeroFieldVector, u64::from(f.zero_field));
            self.anomalies
                .add(AnomalyKind::CoincidentCenters, f.coincident_pairs);
            self.anomalies
                .add(AnomalyKind::InsideObstacle, f.inside_obstacle);

            let idx = i as usize;
            let speed_factor = {
                let ridx = self.region_index(self.agents[idx].region);
                self.regions[ridx].speed_factor
            };
            let agent = &mut self.agents[idx];

            agent.velocity += f.total * (dt / agent.mass);
            let v_max = SPEED_CLAMP_FACTOR * agent.desired_speed * speed_factor;
            let speed = agent.velocity.norm();
            if speed > v_max {
                agent.velocity = if v_max > 0.0 {
                    agent.velocity * (v_max / speed)
                } else {
                    Vec2::default()
                };
                self.anomalies.add(AnomalyKind::SpeedClamped, 1);
            }

            // The center never crosses into an obstacle cell: blocked
            // components slide along the wall instead (displacement per
            // step is far below one cell, so axis-splitting is exact
            // enough).
            let grid = {
                let ridx = match self.agents[idx].region {
                    RegionId::Floor(n) => n,
                    RegionId::Stair(s) => self.floor_count + s,
                };
                self.regions[ridx].grid.clone()
            };
            let agent = &mut self.agents[idx];
            let old = agent.position;
            let proposed = old + agent.velocity * dt;
            let walkable = |p: Vec2| grid.kind_at(p).map_or(false, |k| k.is_walkable());
            if walkable(proposed) {
                agent.position = proposed;
            } else {
                let slide_x = Vec2::new(proposed.x, old.y);
                let slide_y = Vec2::new(old.x, proposed.y);
                if walkable(slide_x) {
                    agent.position = slide_x;
                    agent.velocity.y = 0.0;
                } else if walkable(slide_y) {
                    agent.position = slide_y;
                    agent.velocity.x = 0.0;
                } else {
                    agent.velocity = Vec2::default();
                }
                self.anomalies.add(AnomalyKind::WallSlide, 1);
            }

            self.last_repulsion[idx] = f.repulsion_mag;
            self.last_repulsion_plus_driving[idx] = f.repulsion_plus_driving_mag;
        }

        // Crossings resolve in ascending id order; landings this step count
        // as occupancy for later transfers.
        let mut landings: Vec<(usize, Vec2, f64)> = Vec::new();
        for &i in &active {
            self.resolve_crossing(i as usize, new_time, &mut landings);
        }

        self.sim_time = new_time;
        debug_assert!({
            let c = self.counts();
            c.spawned == c.active + c.inert + c.evacuated
        });
    }

    fn resolve_crossing(
        &mut self,
        idx: usize,
        new_time: f64,
        landings: &mut Vec<(usize, Vec2, f64)>,
    ) {
        let ridx = self.region_index(self.agents[idx].region);
        let region = &self.regions[ridx];
        let on_goal = region
            .grid
            .kind_at(self.agents[idx].position)
            .map_or(false, |k| k.is_goal());
        if !on_goal {
            return;
        }
        match region.exit_to {
            ExitTarget::Evacuate => {
                let agent = &mut self.agents[idx];
                agent.evacuated_at = Some(new_time);
                self.crossing_speeds.push(agent.velocity.norm());
            }
            ExitTarget::ToRegion(dst_idx) => {
                let src_portal = region.goal_portal;
                let dst = self.regions[dst_idx].clone();
                let updated = transfer_agent(&self.agents[idx], &src_portal, &dst);
                // Backpressure: the landing spot must be clear, otherwise
                // the agent queues in the doorway and retries next step.
                if self.landing_blocked(idx, dst_idx, updated.position, updated.radius, landings) {
                    self.anomalies.add(AnomalyKind::BlockedTransfer, 1);
                    return;
                }
                landings.push((dst_idx, updated.position, updated.radius));
                self.agents[idx] = updated;
            }
        }
    }

    /// Whether another body already occupies the landing point:
    /// same-region agents near it (by the step-start index) or an earlier
    /// landing this step.
    fn landing_blocked(
        &self,
        idx: usize,
        dst_idx: usize,
        landing: Vec2,
        radius: f64,
        landings: &[(usize, Vec2, f64)],
    ) -> bool {
        let dst_id = self.regions[dst_idx].id;
        for j in self.hash.candidates(dst_idx, landing, idx as u32) {
            let other = &self.agents[j as usize];
            if other.region != dst_id || other.is_evacuated() {
                continue;
            }
            if (other.position - landing).norm() < 0.9 * (radius + other.radius) {
                return true;
            }
        }
        landings
            .iter()
            .any(|&(r, p, rr)| r == dst_idx && (p - landing).norm() < 0.9 * (radius + rr))
    }

    /// Run until everyone is out or `t_max` is reached, recording metric
    /// samples every `sample_interval`. Returns the trace and whether the
    /// evacuation completed.
    pub fn run_until_empty(
        &mut self,
        dt: f64,
        t_max: f64,
        sample_interval: f64,
        include_driving: bool,
    ) -> (ForceTrace, bool) {
        assert!(dt > 0.0 && t_max > 0.0);
        let every = (sample_interval / dt).round().max(1.0) as u64;

        let mut trace = ForceTrace::new(sample_interval, self.agents.len());
        self.record_preview_sample(&mut trace, include_driving);

        let mut steps = 0u64;
        let mut completed = self.all_evacuated();
        while !completed && self.sim_time < t_max {
            self.step(dt);
            steps += 1;
            completed = self.all_evacuated();
            if steps % every == 0 || completed {
                let sample = crate::metrics::record_sample(self, include_driving);
                trace.push(sample, &mut self.anomalies);
            }
        }
        trace.set_anomalies(self.anomalies.clone());
        (trace, completed)
    }

    /// Sample at the current instant from a fresh force evaluation (used
    /// for the t = 0 sample where no step has run yet).
    fn record_preview_sample(&mut self, trace: &mut ForceTrace, include_driving: bool) {
        let active = self.active_indices();
        let previews: Vec<StepForce> = active.iter().map(|&i| self.force_on(i)).collect();
        for (k, &i) in active.iter().enumerate() {
            self.last_repulsion[i as usize] = previews[k].repulsion_mag;
            self.last_repulsion_plus_driving[i as usize] =
                previews[k].repulsion_plus_driving_mag;
        }
        let sample = crate::metrics::record_sample(self, include_driving);
        trace.push(sample, &mut self.anomalies);
    }
}

/// Move an agent through a portal pair: lateral offset is preserved (clamped
/// half a cell inside the destination band), speed is preserved, direction
/// is reset to the destination field at the mapped position.
pub fn transfer_agent(agent: &Agent, src_portal: &Portal, dst: &Region) -> Agent {
    let dst_portal = dst
        .entry_portal
        .expect("transfer destination must have an entry band");
    let offset = src_portal.lateral_offset(agent.position);
    let margin = dst.grid.cell_size() * 0.5;
    let position = dst_portal.point_at_offset(offset, margin);

    let direction = dst.field.lookup(&dst.grid, position).direction;
    let speed = agent.velocity.norm();
    let velocity = if direction.is_zero() {
        agent.velocity
    } else {
        direction * speed
    };

    Agent {
        region: dst.id,
        position,
        velocity,
        ..agent.clone()
    }
}

/// The three flow fields a stacked building needs (floors share fields by
/// translational symmetry).
#[derive(Debug, Clone)]
pub struct RegionFields {
    pub upper: Arc<FlowField>,
    pub lower: Arc<FlowField>,
    pub stair: Arc<FlowField>,
}

/// Simulation-facing configuration for building a world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldConfig {
    pub force_params: ForceParams,
    pub template: AgentTemplate,
    /// Desired-speed multiplier inside staircases.
    pub stair_speed_factor: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            force_params: ForceParams::default(),
            template: AgentTemplate::default(),
            stair_speed_factor: 1.0,
            seed: 0,
        }
    }
}

/// Assemble the full region graph for a building and spawn its population.
/// `schedule` gives one start time per floor, bottom to top.
pub fn build_world(
    building: &Building,
    fields: &RegionFields,
    schedule: &[f64],
    config: &WorldConfig,
) -> Result<World, SpawnError> {
    assert_eq!(schedule.len(), building.floor_count, "one start time per floor");
    let floor_count = building.floor_count;
    let stair_count = building.staircase_count();

    let upper_grid = Arc::new(building.upper.grid.clone());
    let lower_grid = Arc::new(building.lower.grid.clone());
    let stair_grid = Arc::new(building.staircase.unfolded.clone());

    let mut regions = Vec::with_capacity(floor_count + stair_count);
    for floor in 0..floor_count {
        let plan = building.floor_plan(floor);
        let (grid, field) = if floor == 0 {
            (lower_grid.clone(), fields.lower.clone())
        } else {
            (upper_grid.clone(), fields.upper.clone())
        };
        regions.push(Region {
            id: RegionId::Floor(floor),
            grid,
            field,
            goal_portal: plan.goal_portal().expect("floor has a goal band"),
            entry_portal: plan.arrival_portal(),
            exit_to: if floor == 0 {
                ExitTarget::Evacuate
            } else {
                // Floor n drains into staircase n-1, stored after the floors.
                ExitTarget::ToRegion(floor_count + floor - 1)
            },
            speed_factor: 1.0,
        });
    }
    for stair in 0..stair_count {
        regions.push(Region {
            id: RegionId::Stair(stair),
            grid: stair_grid.clone(),
            field: fields.stair.clone(),
            goal_portal: building
                .staircase
                .exit_portal()
                .expect("staircase has an exit band"),
            entry_portal: building.staircase.entry_portal(),
            // Staircase i lands on floor i's arrival band.
            exit_to: ExitTarget::ToRegion(stair),
            speed_factor: config.stair_speed_factor,
        });
    }

    let mut agents = Vec::new();
    for floor in 0..floor_count {
        let plan = building.floor_plan(floor);
        let floor_seed = per_floor_seed(config.seed, floor);
        let spawned = spawn_agents(plan, plan.initial_agent_count, floor_seed, &config.template)?;
        for mut agent in spawned {
            agent.id = agents.len() as u32;
            agent.region = RegionId::Floor(floor);
            agent.start_time = schedule[floor];
            agents.push(agent);
        }
    }

    Ok(World::new(regions, agents, config.force_params, floor_count))
}

fn per_floor_seed(seed: u64, floor: usize) -> u64 {
    // splitmix-style scramble keeps per-floor streams independent.
    let mut x = seed ^ (floor as u64).wrapping_mul(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// A world with a single floor whose goal band evacuates directly; used for
/// floor-clear calibration and isolated-floor experiments.
pub fn build_single_floor_world(
    plan: &crate::building::FloorPlan,
    field: Arc<FlowField>,
    config: &WorldConfig,
) -> Result<World, SpawnError> {
    let region = Region {
        id: RegionId::Floor(0),
        grid: Arc::new(plan.grid.clone()),
        field,
        goal_portal: plan.goal_portal().expect("floor has a goal band"),
        entry_portal: plan.arrival_portal(),
        exit_to: ExitTarget::Evacuate,
        speed_factor: 1.0,
    };
    let mut agents = spawn_agents(
        plan,
        plan.initial_agent_count,
        per_floor_seed(config.seed, 0),
        &config.template,
    )?;
    for agent in &mut agents {
        agent.region = RegionId::Floor(0);
    }
    Ok(World::new(vec![region], agents, config.force_params, 1))
}
