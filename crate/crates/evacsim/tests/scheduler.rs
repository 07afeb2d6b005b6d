//! Calibration tests: measuring t_f and v_f from a single-floor run.

use std::sync::Arc;

use evacsim::building::{ascii_floor, FloorPlan, FloorRole};
use evacsim::dynamics::WorldConfig;
use evacsim::flowfield::compute_flow_field;
use evacsim::scheduler::{calibrate_floor, ScheduleError};

/// Corridor whose only spawnable (Free) cells sit in a pocket about 3 m
/// west of the exit band; the 'X' cells are walkable but never spawned on.
fn three_meter_corridor(agents: usize) -> FloorPlan {
    let rows = vec![
        "###############".to_string(),
        "#...XXXXXXXXXXE".to_string(),
        "#...XXXXXXXXXXE".to_string(),
        "#...XXXXXXXXXXE".to_string(),
        "#...XXXXXXXXXXE".to_string(),
        "#...XXXXXXXXXXE".to_string(),
        "###############".to_string(),
    ];
    ascii_floor(&rows, 0.3, 1.5, agents, FloorRole::Lower).unwrap()
}

#[test]
fn calibrating_an_empty_floor_reports_desired_speed() {
    let plan = three_meter_corridor(0);
    let field = Arc::new(compute_flow_field(&plan.grid));
    let cal = calibrate_floor(&plan, field, &WorldConfig::default(), 0.01, 30.0).unwrap();
    assert_eq!(cal.t_f, 0.0);
    assert_eq!(cal.v_f, 1.5);
    assert!(cal.no_samples);
}

#[test]
fn lone_agent_calibration_matches_relaxation_trajectory() {
    let plan = three_meter_corridor(1);
    let field = Arc::new(compute_flow_field(&plan.grid));
    let config = WorldConfig {
        seed: 21,
        ..WorldConfig::default()
    };
    let cal = calibrate_floor(&plan, field, &config, 0.01, 30.0).unwrap();
    assert!(!cal.no_samples);
    assert!((2.0..=3.0).contains(&cal.t_f), "t_f = {}", cal.t_f);
    assert!((1.3..=1.5).contains(&cal.v_f), "v_f = {}", cal.v_f);
}

#[test]
fn calibration_is_deterministic() {
    let plan = three_meter_corridor(2);
    let field = Arc::new(compute_flow_field(&plan.grid));
    let config = WorldConfig {
        seed: 33,
        ..WorldConfig::default()
    };
    let a = calibrate_floor(&plan, field.clone(), &config, 0.01, 60.0).unwrap();
    let b = calibrate_floor(&plan, field, &config, 0.01, 60.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn calibration_that_cannot_finish_is_an_error() {
    let plan = three_meter_corridor(1);
    let field = Arc::new(compute_flow_field(&plan.grid));
    let err = calibrate_floor(&plan, field, &WorldConfig::default(), 0.01, 0.5);
    assert!(matches!(
        err,
        Err(ScheduleError::CalibrationIncomplete { .. })
    ));
}
