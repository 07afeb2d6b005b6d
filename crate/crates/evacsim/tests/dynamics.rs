//! Integration tests for the simulation core: relaxation against the
//! closed-form solution, conservation, transfers, spawning, neighbor-search
//! equivalence, and determinism.

use std::sync::Arc;

use evacsim::building::{
    generated_floor, unfold_staircase, Building, CellGrid, CellKind, FloorRole, Portal,
    StaircaseKind,
};
use evacsim::dynamics::{
    agent_agent_force, build_single_floor_world, build_world, spawn_agents, transfer_agent, Agent,
    AgentTemplate, ExitTarget, ForceParams, Region, RegionFields, RegionId, SpatialHash,
    SpawnError, World, WorldConfig,
};
use evacsim::flowfield::compute_flow_field;
use evacsim::vec2::Vec2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn template() -> AgentTemplate {
    AgentTemplate::default()
}

fn hand_agent(id: u32, position: Vec2) -> Agent {
    Agent {
        id,
        region: RegionId::Floor(0),
        position,
        velocity: Vec2::default(),
        mass: 80.0,
        desired_speed: 1.5,
        relaxation_time: 0.5,
        radius: 0.3,
        start_time: 0.0,
        evacuated_at: None,
    }
}

/// A wide corridor whose whole east side is the exit: the flow field is
/// exactly (1, 0) everywhere, ideal for integrator oracles.
fn corridor_world(agents: Vec<Agent>) -> World {
    let plan = generated_floor(12.0, 5.0, 0.3, 5.0, 1.2, 0, FloorRole::Lower).unwrap();
    let field = Arc::new(compute_flow_field(&plan.grid));
    let region = Region {
        id: RegionId::Floor(0),
        grid: Arc::new(plan.grid.clone()),
        field,
        goal_portal: plan.goal_portal().unwrap(),
        entry_portal: plan.arrival_portal(),
        exit_to: ExitTarget::Evacuate,
        speed_factor: 1.0,
    };
    World::new(vec![region], agents, ForceParams::default(), 1)
}

#[test]
fn corridor_field_is_uniform_east() {
    let plan = generated_floor(12.0, 5.0, 0.3, 5.0, 1.2, 0, FloorRole::Lower).unwrap();
    let field = compute_flow_field(&plan.grid);
    for y in 1..plan.grid.height() - 1 {
        for x in 3..plan.grid.width() - 1 {
            if plan.grid.kind(x, y) == CellKind::Free {
                let v = field.vector(x, y);
                assert!((v - Vec2::new(1.0, 0.0)).norm() < 1e-12, "({x},{y}): {v:?}");
            }
        }
    }
}

#[test]
fn single_agent_speed_matches_relaxation_closed_form() {
    // v(t) = v0 (1 - exp(-t / tau)), checked every step over [0, 5 tau].
    let start = Vec2::new(2.5, 2.85);
    let mut world = corridor_world(vec![hand_agent(0, start)]);
    let (dt, tau, v0) = (0.01_f64, 0.5_f64, 1.5_f64);
    let steps = (5.0 * tau / dt).round() as usize;
    for n in 1..=steps {
        world.step(dt);
        let t = n as f64 * dt;
        let expected = v0 * (1.0 - (-t / tau).exp());
        let got = world.agents()[0].velocity.norm();
        assert!(
            (got - expected).abs() <= 0.01 * v0,
            "t={t}: sim {got}, closed form {expected}"
        );
    }
    // At t = 5 tau the speed is within 1% of the desired speed.
    let final_speed = world.agents()[0].velocity.norm();
    assert!((final_speed - v0).abs() <= 0.01 * v0);
}

#[test]
fn zero_agents_step_only_advances_time() {
    let mut world = corridor_world(vec![]);
    world.step(0.01);
    assert_eq!(world.sim_time(), 0.01);
    assert_eq!(world.counts().spawned, 0);
}

#[test]
fn lone_agent_three_meters_from_exit_evacuates_in_expected_window() {
    // Exit band starts at x = 12.3; 3 m of travel from x = 9.3.
    let mut world = corridor_world(vec![hand_agent(0, Vec2::new(9.3, 2.85))]);
    let (trace, completed) = world.run_until_empty(0.01, 30.0, 0.1, false);
    assert!(completed);
    let t = world.agents()[0].evacuated_at.unwrap();
    assert!((2.0..=3.0).contains(&t), "evacuated at {t}");
    assert_eq!(trace.samples.last().unwrap().evacuated, 1);
}

#[test]
fn zero_agents_run_completes_at_time_zero() {
    let mut world = corridor_world(vec![]);
    let (trace, completed) = world.run_until_empty(0.01, 10.0, 0.1, false);
    assert!(completed);
    assert_eq!(trace.samples.len(), 1);
    assert_eq!(trace.samples[0].time, 0.0);
    assert_eq!(trace.samples[0].evacuated, 0);
}

/// Room with no exit anywhere: every field vector is zero, so the driving
/// term vanishes for resting agents and only repulsion acts.
fn fieldless_world(agents: Vec<Agent>) -> World {
    let cells = vec![CellKind::Free; 20 * 20];
    let grid = CellGrid::new(20, 20, 0.5, cells).unwrap();
    let field = Arc::new(compute_flow_field(&grid));
    let region = Region {
        id: RegionId::Floor(0),
        grid: Arc::new(grid),
        field,
        goal_portal: Portal {
            center: Vec2::new(5.0, 5.0),
            lateral: Vec2::new(0.0, 1.0),
            half_width: 0.5,
        },
        entry_portal: None,
        exit_to: ExitTarget::Evacuate,
        speed_factor: 1.0,
    };
    World::new(vec![region], agents, ForceParams::default(), 1)
}

#[test]
fn overlapping_agents_at_rest_push_strictly_apart() {
    let a = hand_agent(0, Vec2::new(5.0, 5.0));
    let b = hand_agent(1, Vec2::new(5.5, 5.0)); // overlap: d = 0.5 < 0.6
    let mut world = fieldless_world(vec![a, b]);
    world.step(0.01);
    let (a, b) = (&world.agents()[0], &world.agents()[1]);
    let n_ab = (a.position - b.position).normalized();
    assert!(a.velocity.dot(n_ab) > 0.0);
    assert!(b.velocity.dot(-n_ab) > 0.0);
}

#[test]
fn spawn_zero_agents_is_empty() {
    let plan = generated_floor(6.0, 6.0, 0.3, 1.2, 1.2, 0, FloorRole::Lower).unwrap();
    assert!(spawn_agents(&plan, 0, 1, &template()).unwrap().is_empty());
}

#[test]
fn spawn_is_deterministic_and_overlap_free() {
    let plan = generated_floor(6.0, 6.0, 0.3, 1.2, 1.2, 0, FloorRole::Lower).unwrap();
    let a = spawn_agents(&plan, 30, 42, &template()).unwrap();
    let b = spawn_agents(&plan, 30, 42, &template()).unwrap();
    assert_eq!(a, b);
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            let d = (a[i].position - a[j].position).norm();
            assert!(d > a[i].radius + a[j].radius, "agents {i},{j} at distance {d}");
        }
        // No wall overlap either (None = no wall anywhere near).
        let clear = plan.grid.obstacle_clearance(a[i].position, 1.0);
        assert!(clear.map_or(true, |d| d >= a[i].radius));
    }
}

#[test]
fn spawn_overcrowded_floor_errors() {
    let plan = generated_floor(2.1, 2.1, 0.3, 0.6, 0.6, 0, FloorRole::Lower).unwrap();
    let err = spawn_agents(&plan, 60, 7, &template());
    assert!(matches!(err, Err(SpawnError::Overcrowded { .. })));
}

fn unit_cell_building(agents_per_floor: usize) -> Building {
    let upper = generated_floor(7.2, 6.0, 0.3, 1.2, 1.2, agents_per_floor, FloorRole::Upper).unwrap();
    let lower = generated_floor(7.2, 6.0, 0.3, 1.2, 1.2, agents_per_floor, FloorRole::Lower).unwrap();
    let stair = unfold_staircase(StaircaseKind::LadderShort, 6.0, 1.2, 0.3).unwrap();
    Building::unit_cell(upper, stair, lower)
}

fn fields_for(building: &Building) -> RegionFields {
    RegionFields {
        upper: Arc::new(compute_flow_field(&building.upper.grid)),
        lower: Arc::new(compute_flow_field(&building.lower.grid)),
        stair: Arc::new(compute_flow_field(&building.staircase.unfolded)),
    }
}

#[test]
fn transfer_preserves_lateral_offset_and_speed() {
    let building = unit_cell_building(0);
    let fields = fields_for(&building);
    let world = build_world(&building, &fields, &[0.0, 0.0], &WorldConfig::default()).unwrap();

    let upper = &world.regions()[1];
    let stair = &world.regions()[world.region_index(RegionId::Stair(0))];
    assert_eq!(upper.id, RegionId::Floor(1));

    let src_portal = upper.goal_portal;
    let mut agent = hand_agent(0, src_portal.center + src_portal.lateral * 0.4);
    agent.region = RegionId::Floor(1);
    agent.velocity = Vec2::new(0.9, 0.3);

    let moved = transfer_agent(&agent, &src_portal, stair);
    assert_eq!(moved.region, RegionId::Stair(0));
    let entry = stair.entry_portal.unwrap();
    let offset = entry.lateral_offset(moved.position);
    assert!((offset - 0.4).abs() < 1e-9, "offset {offset}");
    let speed_in = agent.velocity.norm();
    let speed_out = moved.velocity.norm();
    assert!((speed_in - speed_out).abs() < 1e-12);
    // Direction comes from the staircase field at the landing point.
    assert!(moved.velocity.x > 0.0);
}

#[test]
fn unit_cell_run_conserves_agents_and_completes() {
    let building = unit_cell_building(8);
    let fields = fields_for(&building);
    let config = WorldConfig {
        seed: 5,
        ..WorldConfig::default()
    };
    // Staggered-style schedule exercises the inert phase.
    let mut world = build_world(&building, &fields, &[0.0, 12.0], &WorldConfig { ..config }).unwrap();
    let mut steps = 0u64;
    while !world.all_evacuated() && world.sim_time() < 240.0 {
        world.step(0.01);
        steps += 1;
        if steps % 10 == 0 {
            let c = world.counts();
            assert_eq!(c.spawned, c.active + c.inert + c.evacuated);
        }
    }
    assert!(world.all_evacuated(), "run did not finish: {:?}", world.counts());
    // Everyone left through floor 0's exit, so every crossing was recorded.
    assert_eq!(world.crossing_speeds().len(), 16);
}

#[test]
fn identical_seeds_produce_bitwise_identical_traces() {
    let building = unit_cell_building(6);
    let fields = fields_for(&building);
    let config = WorldConfig {
        seed: 11,
        ..WorldConfig::default()
    };
    let run = || {
        let mut world = build_world(&building, &fields, &[0.0, 8.0], &config).unwrap();
        world.run_until_empty(0.01, 240.0, 0.1, false).0
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
}

#[test]
fn worker_count_does_not_change_trajectories() {
    let building = unit_cell_building(40); // above the parallel threshold
    let fields = fields_for(&building);
    let config = WorldConfig {
        seed: 3,
        ..WorldConfig::default()
    };
    let run_in_pool = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let mut world = build_world(&building, &fields, &[0.0, 0.0], &config).unwrap();
            for _ in 0..400 {
                world.step(0.01);
            }
            world
                .agents()
                .iter()
                .flat_map(|a| {
                    [
                        a.position.x.to_bits(),
                        a.position.y.to_bits(),
                        a.velocity.x.to_bits(),
                        a.velocity.y.to_bits(),
                    ]
                })
                .collect::<Vec<u64>>()
        })
    };
    assert_eq!(run_in_pool(1), run_in_pool(4));
}

#[test]
fn spatial_hash_forces_equal_brute_force_bitwise() {
    let params = ForceParams::default();
    let mut rng = StdRng::seed_from_u64(123);
    for instance in 0..20 {
        let n = rng.gen_range(2..=50);
        let agents: Vec<Agent> = (0..n)
            .map(|id| {
                let mut a = hand_agent(id, Vec2::new(rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0)));
                a.velocity = Vec2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
                a
            })
            .collect();

        let mut hash = SpatialHash::new(params.interaction_cutoff);
        hash.rebuild(agents.iter().map(|a| (a.id, a)), |_| 0);

        for i in &agents {
            let mut hashed = Vec2::default();
            for j in hash.candidates(0, i.position, i.id) {
                let other = &agents[j as usize];
                if (i.position - other.position).norm() > params.interaction_cutoff {
                    continue;
                }
                hashed += agent_agent_force(i, other, &params).0;
            }
            let mut brute = Vec2::default();
            for other in &agents {
                if other.id == i.id
                    || (i.position - other.position).norm() > params.interaction_cutoff
                {
                    continue;
                }
                brute += agent_agent_force(i, other, &params).0;
            }
            assert_eq!(
                (hashed.x.to_bits(), hashed.y.to_bits()),
                (brute.x.to_bits(), brute.y.to_bits()),
                "instance {instance}, agent {}",
                i.id
            );
        }
    }
}

#[test]
fn single_floor_world_calibration_surface() {
    let plan = generated_floor(7.2, 6.0, 0.3, 1.2, 1.2, 10, FloorRole::Upper).unwrap();
    let field = Arc::new(compute_flow_field(&plan.grid));
    let config = WorldConfig {
        seed: 9,
        ..WorldConfig::default()
    };
    let mut world = build_single_floor_world(&plan, field, &config).unwrap();
    let (_, completed) = world.run_until_empty(0.01, 120.0, 0.1, false);
    assert!(completed);
    assert_eq!(world.crossing_speeds().len(), 10);
    assert!(world.last_evacuation_time().unwrap() > 0.0);
}
