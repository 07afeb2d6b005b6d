use evacsim::experiment::Experiment;
use evacsim::scenario::Scenario;
use evacsim::dynamics::build_world;
use evacsim::scheduler::ScheduleMode;
use std::path::Path;

fn main() {
    let scenario = Scenario::load(Path::new("scenarios/standard_staircase.scn")).unwrap();
    let exp = Experiment::prepare(scenario).unwrap();
    let schedule = evacsim::scheduler::build_schedule(0.0, 2, ScheduleMode::Simultaneous);
    let mut world = build_world(&exp.building, &exp.fields, &schedule.floor_start_times, &exp.scenario.world_config()).unwrap();
    let dt = 0.01;
    for step in 0..30000u64 {
        world.step(dt);
        if step % 1000 == 999 {
            let t = world.sim_time();
            let c = world.counts();
            // max overlap among active pairs (same region)
            let mut max_overlap = 0.0f64;
            let mut per_region = std::collections::BTreeMap::new();
            let agents = world.agents();
            for a in agents.iter().filter(|a| a.is_active(t)) {
                *per_region.entry(format!("{}", a.region)).or_insert(0) += 1;
                for b in agents.iter().filter(|b| b.is_active(t) && b.id > a.id) {
                    if a.region == b.region {
                        let d = (a.position - b.position).norm();
                        max_overlap = max_overlap.max(a.radius + b.radius - d);
                    }
                }
            }
            println!("t={t:.1} active={} evac={} regions={per_region:?} max_overlap={max_overlap:.3}", c.active, c.evacuated);
            if c.active == 0 { break; }
        }
    }
    println!("anomalies: {:?}", world.anomalies());
}
