//! Force statistics and evacuation counters: the "average force per
//! pedestrian as a function of evacuation time" curves and the
//! staggered-vs-simultaneous comparison.
//!
//! The averaged quantity is the mean magnitude of each active agent's
//! summed repulsive forces (social + contact, agents + walls). The
//! self-generated driving term is excluded by default: it is nonzero even
//! for a lone walker and would mask crowding, which is what the curves are
//! meant to show. `include_driving` folds it back in for sensitivity runs.

use std::collections::BTreeMap;
use std::fmt;

use crate::dynamics::{Anomalies, AnomalyKind, World};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub active: usize,
    pub avg_force: f64,
    pub peak_force: f64,
    pub evacuated: usize,
}

/// Time series of per-sample force statistics for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTrace {
    pub sample_interval: f64,
    pub spawned: usize,
    pub samples: Vec<Sample>,
    anomalies: Anomalies,
}

impl ForceTrace {
    pub fn new(sample_interval: f64, spawned: usize) -> ForceTrace {
        ForceTrace {
            sample_interval,
            spawned,
            samples: Vec::new(),
            anomalies: Anomalies::default(),
        }
    }

    /// Append a sample, counting the empty-population anomaly when no agent
    /// was active.
    pub fn push(&mut self, sample: Sample, anomalies: &mut Anomalies) {
        if sample.active == 0 {
            anomalies.add(AnomalyKind::EmptySample, 1);
        }
        self.samples.push(sample);
    }

    pub fn set_anomalies(&mut self, anomalies: Anomalies) {
        self.anomalies = anomalies;
    }

    pub fn anomalies(&self) -> &Anomalies {
        &self.anomalies
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    EmptyTrace,
    IncompleteRun(&'static str),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::EmptyTrace => write!(f, "cannot summarize an empty trace"),
            MetricsError::IncompleteRun(which) => {
                write!(f, "comparison refused: the {which} run did not complete")
            }
        }
    }
}

impl std::error::Error for MetricsError {}

/// Condensed outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Time of the first sample with everyone evacuated; the last sample's
    /// time when the run was truncated.
    pub total_evacuation_time: f64,
    pub peak_avg_force: f64,
    pub time_of_peak: f64,
    pub completed: bool,
    pub anomaly_counts: BTreeMap<AnomalyKind, u64>,
}

/// Take one statistics sample from the world's latest force evaluation.
pub fn record_sample(world: &World, include_driving: bool) -> Sample {
    let time = world.sim_time();
    let mut active = 0usize;
    let mut sum = 0.0f64;
    let mut peak = 0.0f64;
    for (i, agent) in world.agents().iter().enumerate() {
        if !agent.is_active(time) {
            continue;
        }
        active += 1;
        let mag = world.last_force_magnitude(i, include_driving);
        sum += mag;
        peak = peak.max(mag);
    }
    let counts = world.counts();
    debug_assert_eq!(
        counts.spawned,
        counts.active + counts.inert + counts.evacuated
    );
    Sample {
        time,
        active,
        avg_force: if active > 0 { sum / active as f64 } else { 0.0 },
        peak_force: peak,
        evacuated: counts.evacuated,
    }
}

/// Reduce a trace to its headline numbers.
pub fn summarize(trace: &ForceTrace) -> Result<RunSummary, MetricsError> {
    if trace.samples.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let complete_at = trace
        .samples
        .iter()
        .find(|s| s.evacuated == trace.spawned)
        .map(|s| s.time);
    let last = trace.samples.last().unwrap();

    let mut peak_avg_force = 0.0f64;
    let mut time_of_peak = trace.samples[0].time;
    for s in &trace.samples {
        if s.avg_force > peak_avg_force {
            peak_avg_force = s.avg_force;
            time_of_peak = s.time;
        }
    }

    Ok(RunSummary {
        total_evacuation_time: complete_at.unwrap_or(last.time),
        peak_avg_force,
        time_of_peak,
        completed: complete_at.is_some(),
        anomaly_counts: trace.anomalies().as_map().clone(),
    })
}

/// Did staggering behave as expected: longer (or equal) total time AND a
/// strictly lower force peak. `Partial` marks the unexpected
/// faster-and-weaker case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternOutcome {
    Holds,
    Partial,
    NotHeld,
}

impl fmt::Display for PatternOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PatternOutcome::Holds => "holds",
            PatternOutcome::Partial => "partial",
            PatternOutcome::NotHeld => "not_held",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Staggered minus simultaneous total evacuation time (s).
    pub delta_total_time: f64,
    /// Staggered minus simultaneous peak average force (N).
    pub delta_peak_force: f64,
    /// Fractional peak-force reduction achieved by staggering.
    pub force_reduction_ratio: f64,
    pub pattern: PatternOutcome,
}

/// Compare a staggered run against a simultaneous run of the same scenario
/// and seed. Both must have completed.
pub fn compare_runs(
    staggered: &RunSummary,
    simultaneous: &RunSummary,
) -> Result<Comparison, MetricsError> {
    if !staggered.completed {
        return Err(MetricsError::IncompleteRun("staggered"));
    }
    if !simultaneous.completed {
        return Err(MetricsError::IncompleteRun("simultaneous"));
    }
    let longer = staggered.total_evacuation_time >= simultaneous.total_evacuation_time;
    let weaker = staggered.peak_avg_force < simultaneous.peak_avg_force;
    let pattern = match (longer, weaker) {
        (true, true) => PatternOutcome::Holds,
        (false, true) => PatternOutcome::Partial,
        _ => PatternOutcome::NotHeld,
    };
    let ratio = if simultaneous.peak_avg_force > 0.0 {
        (simultaneous.peak_avg_force - staggered.peak_avg_force) / simultaneous.peak_avg_force
    } else {
        0.0
    };
    Ok(Comparison {
        delta_total_time: staggered.total_evacuation_time - simultaneous.total_evacuation_time,
        delta_peak_force: staggered.peak_avg_force - simultaneous.peak_avg_force,
        force_reduction_ratio: ratio,
        pattern,
    })
}
