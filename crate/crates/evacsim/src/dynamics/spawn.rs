//! Initial agent placement by rejection sampling.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::building::{CellKind, FloorPlan};
use crate::dynamics::{Agent, RegionId};
use crate::vec2::Vec2;

/// Physical template every spawned agent starts from. `desired_speed_jitter`
/// widens the population: each agent's v0 is drawn uniformly from
/// `desired_speed ± jitter`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentTemplate {
    pub mass: f64,
    pub desired_speed: f64,
    pub desired_speed_jitter: f64,
    pub relaxation_time: f64,
    pub radius: f64,
}

impl Default for AgentTemplate {
    fn default() -> Self {
        AgentTemplate {
            mass: 80.0,
            desired_speed: 1.5,
            desired_speed_jitter: 0.0,
            relaxation_time: 0.5,
            radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpawnError {
    /// The rejection sampler gave up: the floor cannot host the requested
    /// number of non-overlapping agents.
    Overcrowded { placed: usize, requested: usize },
}

impl fmt::Display for SpawnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpawnError::Overcrowded { placed, requested } => write!(
                f,
                "overcrowded floor: placed {placed} of {requested} agents before giving up"
            ),
        }
    }
}

impl std::error::Error for SpawnError {}

/// Place `count` agents uniformly at random on the floor's free cells with
/// no pairwise overlap and no wall overlap. Deterministic for a given seed.
/// Ids run 0..count; region and start time are placeholders for the world
/// builder to reassign.
pub fn spawn_agents(
    plan: &FloorPlan,
    count: usize,
    rng_seed: u64,
    template: &AgentTemplate,
) -> Result<Vec<Agent>, SpawnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let grid = &plan.grid;
    let (w_m, h_m) = (grid.width_m(), grid.height_m());

    let mut placed: Vec<Agent> = Vec::with_capacity(count);
    let mut consecutive_rejects = 0usize;
    let reject_limit = 10_000 * count.max(1);

    while placed.len() < count {
        let p = Vec2::new(rng.gen::<f64>() * w_m, rng.gen::<f64>() * h_m);

        let on_free_cell = matches!(grid.kind_at(p), Some(CellKind::Free));
        let wall_clear = on_free_cell
            && grid
                .obstacle_clearance(p, template.radius + grid.cell_size())
                .map_or(true, |d| d >= template.radius);
        let agent_clear = wall_clear
            && placed
                .iter()
                .all(|a| (a.position - p).norm() > a.radius + template.radius);

        if !(on_free_cell && wall_clear && agent_clear) {
            consecutive_rejects += 1;
            if consecutive_rejects > reject_limit {
                return Err(SpawnError::Overcrowded {
                    placed: placed.len(),
                    requested: count,
                });
            }
            continue;
        }
        consecutive_rejects = 0;

        let jitter = if template.desired_speed_jitter > 0.0 {
            rng.gen_range(-template.desired_speed_jitter..=template.desired_speed_jitter)
        } else {
            0.0
        };
        placed.push(Agent {
            id: placed.len() as u32,
            region: RegionId::Floor(0),
            position: p,
            velocity: Vec2::default(),
            mass: template.mass,
            desired_speed: (template.desired_speed + jitter).max(0.0),
            relaxation_time: template.relaxation_time,
            radius: template.radius,
            start_time: 0.0,
            evacuated_at: None,
        });
    }
    Ok(placed)
}
