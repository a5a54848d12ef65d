//! Greedy schedule construction.
//!
//! Each step appends the run `(h, tau)` that maximizes the expected
//! (weighted) number of newly solved instances per unit time. Because every
//! success probability is a step function of `tau` that only jumps at
//! recorded solve times, the maximizer is always found among those jump
//! points, so only they are scanned.

use std::collections::BTreeSet;

use crate::coverage::{success_given, CoverageState};
use crate::par::{self, Exec};
use crate::profile::{HeuristicId, Instance, Time};
use crate::schedule::{ExecutionModel, Models, RunSegment, Schedule};

/// Densities within this distance of the best are ties.
pub const TIE_EPS: f64 = 1e-9;
/// A best density at or below this means no run can help any more.
pub const EXHAUSTED_DENSITY: f64 = 1e-12;

/// Durations at which appending `h` changes some instance's success
/// probability, in increasing order.
pub fn candidate_durations(
    h: HeuristicId,
    state: &CoverageState,
    instances: &[Instance],
    models: &Models,
) -> Vec<Time> {
    let offset = match models.get(h) {
        ExecutionModel::SuspendResume => state.elapsed(h),
        ExecutionModel::Restart => 0,
    };
    let set: BTreeSet<Time> = instances
        .iter()
        .flat_map(|x| x.profile(h).solved_times())
        .filter(|&&t| t > offset)
        .map(|&t| t - offset)
        .collect();
    set.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub segment: RunSegment,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStep {
    pub segment: RunSegment,
    pub density: f64,
    /// Every scanned candidate, in `(tau, heuristic)` order. Empty unless
    /// recording was requested.
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
}

impl GreedyTrace {
    pub fn densities(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.density)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyOptions {
    /// Total schedule length never exceeds this.
    pub length_cap: Time,
    pub exec: Exec,
    pub record_candidates: bool,
}

impl GreedyOptions {
    pub fn new(length_cap: Time) -> Self {
        GreedyOptions {
            length_cap,
            exec: Exec::default(),
            record_candidates: false,
        }
    }
}

/// Expected newly solved weight per unit time of appending `(h, tau)`.
pub fn density(state: &CoverageState, instances: &[Instance], models: &Models, segment: RunSegment) -> f64 {
    let h = segment.heuristic;
    let model = models.get(h);
    let a = state.elapsed(h);
    let gain: f64 = instances
        .iter()
        .enumerate()
        .filter(|(i, _)| state.survival(*i) > 0.0)
        .map(|(i, x)| x.weight * state.survival(i) * success_given(x.profile(h), model, a, segment.tau))
        .sum();
    gain / segment.tau as f64
}

/// Picks the next greedy segment among durations `<= max_tau`, or `None`
/// once no candidate has positive density.
pub fn greedy_step_within(
    state: &CoverageState,
    instances: &[Instance],
    models: &Models,
    max_tau: Time,
    exec: Exec,
    record: bool,
) -> Option<GreedyStep> {
    let mut segments: Vec<RunSegment> = (0..models.len())
        .map(HeuristicId)
        .flat_map(|h| {
            candidate_durations(h, state, instances, models)
                .into_iter()
                .filter(|&t| t <= max_tau)
                .map(move |t| RunSegment::new(h, t))
        })
        .collect();
    segments.sort_by_key(|s| (s.tau, s.heuristic));

    let exec = if segments.len() * instances.len() >= 4096 {
        exec
    } else {
        Exec::Serial
    };
    let densities = par::map(exec, &segments, |&seg| density(state, instances, models, seg));

    let best = densities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best.is_nan() || best <= EXHAUSTED_DENSITY {
        return None;
    }
    // first in (tau, heuristic) order among the near-maximal ones
    let winner = densities.iter().position(|&d| d >= best - TIE_EPS)?;
    let candidates = if record {
        segments
            .iter()
            .zip(&densities)
            .map(|(&segment, &density)| Candidate { segment, density })
            .collect()
    } else {
        Vec::new()
    };
    Some(GreedyStep {
        segment: segments[winner],
        density: densities[winner],
        candidates,
    })
}

/// Unbounded greedy step; `None` means exhausted.
pub fn greedy_step(state: &CoverageState, instances: &[Instance], models: &Models) -> Option<(RunSegment, f64)> {
    greedy_step_within(state, instances, models, Time::MAX, Exec::default(), false).map(|s| (s.segment, s.density))
}

pub fn greedy_schedule(instances: &[Instance], models: &Models, length_cap: Time) -> (Schedule, GreedyTrace) {
    greedy_schedule_with(instances, models, &GreedyOptions::new(length_cap))
}

pub fn greedy_schedule_with(instances: &[Instance], models: &Models, opts: &GreedyOptions) -> (Schedule, GreedyTrace) {
    let mut schedule = Schedule::empty(models.clone());
    let mut trace = GreedyTrace::default();
    let mut state = CoverageState::new(instances.len(), models.len());
    while state.wall_time() < opts.length_cap {
        let remaining = opts.length_cap - state.wall_time();
        let Some(step) = greedy_step_within(&state, instances, models, remaining, opts.exec, opts.record_candidates)
        else {
            break;
        };
        state = state.advance(step.segment, instances, models);
        schedule.push(step.segment);
        trace.steps.push(step);
    }
    (schedule, trace)
}
