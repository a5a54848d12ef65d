//! Generators and reference computations shared by the integration tests.
//! The references here re-derive results from first principles and do not
//! call into the library's evaluation code.
#![allow(dead_code)]

use portfolio::{ExecutionModel, HeuristicId, Instance, Models, RunSegment, RuntimeProfile, Sample, Schedule, Time};
use proptest::prelude::*;
use rand::Rng;

pub const LIMIT: Time = 16;

pub fn model_strategy() -> impl Strategy<Value = ExecutionModel> {
    prop_oneof![Just(ExecutionModel::SuspendResume), Just(ExecutionModel::Restart)]
}

/// 1..=4 runs, each solved in 1..=LIMIT or censored at LIMIT.
pub fn profile_strategy() -> impl Strategy<Value = RuntimeProfile> + Clone {
    prop::collection::vec(prop::option::weighted(0.8, 1..=LIMIT), 1..=4).prop_map(|runs| {
        let samples: Vec<Sample> = runs
            .into_iter()
            .map(|r| r.map_or(Sample::Censored(LIMIT), Sample::Solved))
            .collect();
        RuntimeProfile::new(&samples).expect("valid runs")
    })
}

pub fn deterministic_profile_strategy() -> impl Strategy<Value = RuntimeProfile> + Clone {
    prop::option::weighted(0.85, 1..=LIMIT).prop_map(|t| match t {
        Some(t) => RuntimeProfile::deterministic(t),
        None => RuntimeProfile::never(LIMIT),
    })
}

pub fn instances_from<S>(
    k: usize,
    n: std::ops::RangeInclusive<usize>,
    profile: S,
) -> impl Strategy<Value = Vec<Instance>>
where
    S: Strategy<Value = RuntimeProfile> + Clone,
{
    prop::collection::vec(prop::collection::vec(profile, k), n).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, ps)| Instance::new(format!("x{i}"), ps))
            .collect()
    })
}

/// (k, instances, models) with k in 1..=3 and 1..=4 instances.
pub fn workload(deterministic: bool) -> impl Strategy<Value = (usize, Vec<Instance>, Models)> {
    (1usize..=3).prop_flat_map(move |k| {
        let xs = if deterministic {
            instances_from(k, 1..=4, deterministic_profile_strategy()).boxed()
        } else {
            instances_from(k, 1..=4, profile_strategy()).boxed()
        };
        (
            Just(k),
            xs,
            prop::collection::vec(model_strategy(), k).prop_map(Models::from_vec),
        )
    })
}

pub fn segments_strategy(k: usize, max_len: usize) -> impl Strategy<Value = Vec<RunSegment>> {
    prop::collection::vec((0..k, 1..=8u64), 0..=max_len)
        .prop_map(|v| v.into_iter().map(|(h, t)| RunSegment::new(HeuristicId(h), t)).collect())
}

/// Finish time of a schedule on an instance with one known runtime per
/// heuristic (`None` = never), walking the timeline segment by segment.
pub fn walk_time(schedule: &Schedule, times: &[Option<Time>]) -> Option<Time> {
    let mut done = vec![0; times.len()];
    let mut wall = 0;
    for seg in schedule.segments() {
        let h = seg.heuristic.0;
        let already = match schedule.model_of(seg.heuristic) {
            ExecutionModel::SuspendResume => done[h],
            ExecutionModel::Restart => 0,
        };
        if let Some(t) = times[h] {
            if t > already && t - already <= seg.tau {
                return Some(wall + (t - already));
            }
        }
        done[h] += seg.tau;
        wall += seg.tau;
    }
    None
}

pub fn walk_capped(schedule: &Schedule, times: &[Option<Time>], cap: Time) -> Time {
    walk_time(schedule, times).map_or(cap, |t| t.min(cap))
}

/// Per-heuristic runtime for a deterministic instance.
pub fn fixed_times(x: &Instance) -> Vec<Option<Time>> {
    x.profiles.iter().map(|p| p.solved_times().first().copied()).collect()
}

/// One simulated execution: a fresh draw per restart segment, one draw per
/// suspend-and-resume heuristic.
pub fn simulate_once<R: Rng>(schedule: &Schedule, x: &Instance, cap: Time, rng: &mut R) -> Time {
    let draw = |p: &RuntimeProfile, rng: &mut R| -> Option<Time> {
        let runs: Vec<Sample> = p.samples().collect();
        match runs[rng.random_range(0..runs.len())] {
            Sample::Solved(t) => Some(t),
            Sample::Censored(_) => None,
        }
    };
    let k = x.profiles.len();
    let mut persistent: Vec<Option<Option<Time>>> = vec![None; k];
    let mut done = vec![0; k];
    let mut wall = 0;
    for seg in schedule.segments() {
        if wall >= cap {
            return cap;
        }
        let h = seg.heuristic.0;
        let (t, already) = match schedule.model_of(seg.heuristic) {
            ExecutionModel::Restart => (draw(&x.profiles[h], rng), 0),
            ExecutionModel::SuspendResume => {
                if persistent[h].is_none() {
                    persistent[h] = Some(draw(&x.profiles[h], rng));
                }
                (persistent[h].unwrap(), done[h])
            }
        };
        if let Some(t) = t {
            if t > already && t - already <= seg.tau {
                return (wall + t - already).min(cap);
            }
        }
        done[h] += seg.tau;
        wall += seg.tau;
    }
    cap
}

/// Mean and standard error of `trials` simulated capped times.
pub fn monte_carlo<R: Rng>(schedule: &Schedule, x: &Instance, cap: Time, trials: usize, rng: &mut R) -> (f64, f64) {
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..trials {
        let v = simulate_once(schedule, x, cap, rng) as f64;
        s += v;
        s2 += v * v;
    }
    let n = trials as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Random deterministic instances with `k` heuristics, times in 1..=max_t,
/// each heuristic failing with probability `p_fail`.
pub fn random_deterministic<R: Rng>(rng: &mut R, k: usize, n: usize, max_t: Time, p_fail: f64) -> Vec<Instance> {
    (0..n)
        .map(|i| {
            let times: Vec<Option<Time>> = (0..k)
                .map(|_| (rng.random::<f64>() >= p_fail).then(|| rng.random_range(1..=max_t)))
                .collect();
            Instance::deterministic(format!("x{i}"), &times, max_t)
        })
        .collect()
}

/// Random profiles with up to `max_runs` runs per heuristic.
pub fn random_randomized<R: Rng>(rng: &mut R, k: usize, n: usize, max_runs: usize, max_t: Time) -> Vec<Instance> {
    (0..n)
        .map(|i| {
            let profiles = (0..k)
                .map(|_| {
                    let r = rng.random_range(1..=max_runs);
                    let samples: Vec<Sample> = (0..r)
                        .map(|_| {
                            if rng.random::<f64>() < 0.15 {
                                Sample::Censored(max_t)
                            } else {
                                Sample::Solved(rng.random_range(1..=max_t))
                            }
                        })
                        .collect();
                    RuntimeProfile::new(&samples).unwrap()
                })
                .collect();
            Instance::new(format!("x{i}"), profiles)
        })
        .collect()
}

pub fn random_schedule<R: Rng>(rng: &mut R, k: usize, max_len: usize, max_tau: Time) -> Schedule {
    let len = rng.random_range(1..=max_len);
    let segs = (0..len)
        .map(|_| RunSegment::new(HeuristicId(rng.random_range(0..k)), rng.random_range(1..=max_tau)))
        .collect();
    let models = (0..k)
        .map(|_| {
            if rng.random::<bool>() {
                ExecutionModel::SuspendResume
            } else {
                ExecutionModel::Restart
            }
        })
        .collect();
    Schedule::new(segs, Models::from_vec(models)).unwrap()
}
