//! The three force terms acting on an agent: the driving term toward the
//! flow-field direction, pairwise agent repulsion, and wall repulsion.
//!
//! Repulsion combines an exponential social term with linear body-contact
//! and sliding-friction terms that switch on at touching distance. Pair
//! forces are antisymmetric by construction, bit for bit.

use crate::building::{CellGrid, CellKind, NO_COMPONENT};
use crate::dynamics::{Agent, ForceParams};
use crate::vec2::Vec2;

/// Contact activation: g(x) = x when overlapping, else 0.
#[inline]
fn contact(x: f64) -> f64 {
    x.max(0.0)
}

/// Driving force toward `direction` at effective desired speed `v0`:
/// `m (v0 e - v) / tau`. A zero direction degenerates to pure damping.
pub fn driving_force_toward(agent: &Agent, direction: Vec2, v0: f64) -> Vec2 {
    (direction * v0 - agent.velocity) * (agent.mass / agent.relaxation_time)
}

/// Driving force using the agent's own desired speed.
pub fn driving_force(agent: &Agent, direction: Vec2) -> Vec2 {
    driving_force_toward(agent, direction, agent.desired_speed)
}

/// Repulsive force exerted on `i` by `j`. The boolean reports the
/// coincident-centers anomaly (normal direction picked deterministically
/// from the pair ids).
pub fn agent_agent_force(i: &Agent, j: &Agent, params: &ForceParams) -> (Vec2, bool) {
    let delta = i.position - j.position;
    let d = delta.norm();
    let r = i.radius + j.radius;

    let (n_hat, coincident) = if d < 1e-6 {
        (coincident_direction(i.id, j.id), true)
    } else {
        (delta * (1.0 / d), false)
    };

    let g = contact(r - d);
    let normal_mag = params.social_strength * ((r - d) / params.social_range).exp()
        + params.body_stiffness * g;
    let t_hat = n_hat.perp();
    let tangent_dv = (j.velocity - i.velocity).dot(t_hat);

    (
        n_hat * normal_mag + t_hat * (params.sliding_friction * g * tangent_dv),
        coincident,
    )
}

/// Deterministic unit direction for a coincident pair, antisymmetric in the
/// argument order.
fn coincident_direction(id_i: u32, id_j: u32) -> Vec2 {
    let (lo, hi) = (id_i.min(id_j) as u64, id_i.max(id_j) as u64);
    let angle = (splitmix64((lo << 32) | hi) >> 11) as f64 / (1u64 << 53) as f64
        * std::f64::consts::TAU;
    let dir = Vec2::new(angle.cos(), angle.sin());
    if id_i < id_j {
        dir
    } else {
        -dir
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Wall-force anomalies observed while evaluating one agent.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct WallAnomalies {
    pub inside_obstacle: u64,
}

/// Repulsion from walls: one term per obstacle component within the
/// interaction cutoff, evaluated at the component's nearest boundary point.
/// Using the nearest point (rather than per-cell sums) keeps the force
/// smooth and exactly `A` strong at touching distance along a flat wall.
pub fn agent_wall_force(
    agent: &Agent,
    grid: &CellGrid,
    params: &ForceParams,
) -> (Vec2, WallAnomalies) {
    let mut anomalies = WallAnomalies::default();
    let p = agent.position;

    let (cx, cy) = match grid.cell_at(p) {
        Some(c) => c,
        None => return (Vec2::default(), anomalies), // out of bounds is handled by the stepper
    };

    if grid.kind(cx, cy) == CellKind::Obstacle {
        // Deep failure: center inside a wall. Push toward the nearest
        // walkable cell with contact depth equal to the body radius.
        anomalies.inside_obstacle = 1;
        let outward = nearest_walkable_direction(grid, p, cx, cy);
        return (wall_term(agent, outward, 0.0, params), anomalies);
    }

    // Nearest boundary point per obstacle component within the cutoff.
    let reach = (params.interaction_cutoff / grid.cell_size()).ceil() as i64 + 1;
    let mut nearest: Vec<(u32, f64, Vec2)> = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (x, y) = (cx as i64 + dx, cy as i64 + dy);
            if !grid.in_bounds(x, y) {
                continue;
            }
            let (x, y) = (x as usize, y as usize);
            if grid.kind(x, y) != CellKind::Obstacle {
                continue;
            }
            let (d, point) = grid.distance_to_cell(p, x, y);
            if d > params.interaction_cutoff {
                continue;
            }
            let comp = grid.component(x, y);
            debug_assert_ne!(comp, NO_COMPONENT);
            match nearest.iter_mut().find(|(c, _, _)| *c == comp) {
                Some(entry) if d < entry.1 => {
                    entry.1 = d;
                    entry.2 = point;
                }
                Some(_) => {}
                None => nearest.push((comp, d, point)),
            }
        }
    }
    nearest.sort_unstable_by_key(|&(c, _, _)| c);

    let mut force = Vec2::default();
    for &(_, d, point) in &nearest {
        if d < 1e-9 {
            // Center exactly on a wall face; same treatment as inside.
            anomalies.inside_obstacle += 1;
            let outward = (p - point).normalized();
            let outward = if outward.is_zero() { Vec2::new(1.0, 0.0) } else { outward };
            force += wall_term(agent, outward, 0.0, params);
        } else {
            force += wall_term(agent, (p - point) * (1.0 / d), d, params);
        }
    }
    (force, anomalies)
}

/// Direction from a wall-embedded point toward the closest walkable cell
/// center, searched over growing rings; +x when the whole neighborhood is
/// wall.
fn nearest_walkable_direction(grid: &CellGrid, p: Vec2, cx: usize, cy: usize) -> Vec2 {
    for reach in 1..=4i64 {
        let mut best: Option<(f64, Vec2)> = None;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (x, y) = (cx as i64 + dx, cy as i64 + dy);
                if !grid.in_bounds(x, y) {
                    continue;
                }
                let (x, y) = (x as usize, y as usize);
                if grid.kind(x, y) == CellKind::Obstacle {
                    continue;
                }
                let center = grid.cell_center(x, y);
                let d = (center - p).norm();
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, (center - p).normalized()));
                }
            }
        }
        if let Some((_, dir)) = best {
            return dir;
        }
    }
    Vec2::new(1.0, 0.0)
}

/// One wall contribution: normal `n_hat` points from the wall into the
/// agent, `d` is the distance from the agent's center to the wall surface.
fn wall_term(agent: &Agent, n_hat: Vec2, d: f64, params: &ForceParams) -> Vec2 {
    let overlap = agent.radius - d;
    let g = contact(overlap);
    let normal_mag =
        params.social_strength * (overlap / params.social_range).exp() + params.body_stiffness * g;
    let t_hat = n_hat.perp();
    let tangent_dv = (-agent.velocity).dot(t_hat);
    n_hat * normal_mag + t_hat * (params.sliding_friction * g * tangent_dv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::building::CellGrid;
    use crate::dynamics::RegionId;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    // exp(-1) evaluated independently of the force path.
    const TWO_THOUSAND_OVER_E: f64 = 735.7588823428847;

    fn agent(id: u32, position: Vec2, velocity: Vec2) -> Agent {
        Agent {
            id,
            region: RegionId::Floor(0),
            position,
            velocity,
            mass: 80.0,
            desired_speed: 1.5,
            relaxation_time: 0.5,
            radius: 0.3,
            start_time: 0.0,
            evacuated_at: None,
        }
    }

    #[test]
    fn driving_force_from_rest() {
        let a = agent(0, Vec2::default(), Vec2::default());
        let f = driving_force(&a, Vec2::new(1.0, 0.0));
        assert_eq!(f, Vec2::new(240.0, 0.0));
    }

    #[test]
    fn driving_force_at_equilibrium_is_zero() {
        let a = agent(0, Vec2::default(), Vec2::new(1.5, 0.0));
        let f = driving_force(&a, Vec2::new(1.0, 0.0));
        assert_eq!(f, Vec2::new(0.0, 0.0));
    }

    #[test]
    fn driving_force_redirects_moving_agent() {
        let a = agent(0, Vec2::default(), Vec2::new(1.5, 0.0));
        let f = driving_force(&a, Vec2::new(0.0, 1.0));
        assert_eq!(f, Vec2::new(-240.0, 240.0));
    }

    #[test]
    fn driving_force_zero_direction_is_pure_damping() {
        let a = agent(0, Vec2::default(), Vec2::new(1.0, -0.5));
        let f = driving_force(&a, Vec2::default());
        assert_eq!(f, Vec2::new(-160.0, 80.0));
    }

    #[test]
    fn social_force_at_touching_distance_is_exactly_a() {
        let params = ForceParams::default();
        let i = agent(0, Vec2::new(0.6, 0.0), Vec2::default());
        let j = agent(1, Vec2::new(0.0, 0.0), Vec2::default());
        let (f, coincident) = agent_agent_force(&i, &j, &params);
        assert!(!coincident);
        assert_eq!(f, Vec2::new(2000.0, 0.0));
    }

    #[test]
    fn social_force_one_range_beyond_touching() {
        let params = ForceParams::default();
        let i = agent(0, Vec2::new(0.6 + 0.08, 0.0), Vec2::default());
        let j = agent(1, Vec2::new(0.0, 0.0), Vec2::default());
        let (f, _) = agent_agent_force(&i, &j, &params);
        assert!((f.norm() - TWO_THOUSAND_OVER_E).abs() < 1e-9, "got {}", f.norm());
        assert_eq!(f.y, 0.0);
    }

    #[test]
    fn pair_forces_are_antisymmetric_bitwise() {
        let params = ForceParams::default();
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..10_000 {
            let i = agent(
                rng.gen_range(0..1000),
                Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            );
            let mut j = agent(
                i.id + 1 + rng.gen_range(0..1000),
                Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            );
            if rng.gen_bool(0.05) {
                j.position = i.position; // exercise the coincident branch
            }
            let (f_ij, _) = agent_agent_force(&i, &j, &params);
            let (f_ji, _) = agent_agent_force(&j, &i, &params);
            assert_eq!(f_ij.x.to_bits(), (-f_ji.x).to_bits());
            assert_eq!(f_ij.y.to_bits(), (-f_ji.y).to_bits());
        }
    }

    fn flat_wall_room() -> CellGrid {
        // 10x6 cells of 0.3 m; solid south wall,rest free.
        let (w, h) = (10, 6);
        let mut cells = vec![CellKind::Free; w * h];
        for x in 0..w {
            cells[x] = CellKind::Obstacle;
        }
        CellGrid::new(w, h, 0.3, cells).unwrap()
    }

    #[test]
    fn wall_force_touching_flat_wall_is_exactly_a() {
        let params = ForceParams::default();
        let grid = flat_wall_room();
        // Wall surface at y = 0.3; center 0.3 above it.
        let a = agent(0, Vec2::new(1.5, 0.6), Vec2::default());
        let (f, anomalies) = agent_wall_force(&a, &grid, &params);
        assert_eq!(anomalies.inside_obstacle, 0);
        assert_eq!(f, Vec2::new(0.0, 2000.0));
    }

    #[test]
    fn wall_force_one_range_beyond_touching() {
        let params = ForceParams::default();
        let grid = flat_wall_room();
        let a = agent(0, Vec2::new(1.5, 0.6 + 0.08), Vec2::default());
        let (f, _) = agent_wall_force(&a, &grid, &params);
        assert!((f.norm() - TWO_THOUSAND_OVER_E).abs() < 1e-9, "got {}", f.norm());
        assert!(f.x.abs() < 1e-12);
    }

    #[test]
    fn wall_force_beyond_cutoff_is_zero() {
        let params = ForceParams::default();
        let grid = flat_wall_room();
        // 0.3 (wall) + cutoff 2.0 -> anything above y = 2.3 sees nothing.
        let a = agent(0, Vec2::new(1.5, 2.4), Vec2::default());
        let (f, _) = agent_wall_force(&a, &grid, &params);
        assert_eq!(f, Vec2::new(0.0, 0.0));
    }

    #[test]
    fn wall_force_inside_obstacle_pushes_outward() {
        let params = ForceParams::default();
        let grid = flat_wall_room();
        let a = agent(0, Vec2::new(1.5, 0.25), Vec2::default());
        let (f, anomalies) = agent_wall_force(&a, &grid, &params);
        assert_eq!(anomalies.inside_obstacle, 1);
        assert!(f.y > 0.0);
    }

    #[test]
    fn coincident_direction_is_unit_and_antisymmetric() {
        for (a, b) in [(0u32, 1u32), (5, 17), (100, 3)] {
            let d_ab = coincident_direction(a, b);
            let d_ba = coincident_direction(b, a);
            assert!((d_ab.norm() - 1.0).abs() < 1e-12);
            assert_eq!(d_ab.x.to_bits(), (-d_ba.x).to_bits());
            assert_eq!(d_ab.y.to_bits(), (-d_ba.y).to_bits());
        }
    }
}
