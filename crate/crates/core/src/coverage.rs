//! Probabilistic semantics of running a schedule against recorded runtimes.
//!
//! Heuristics are independent of each other. A suspend-and-resume heuristic
//! has a single run whose solve time is one draw from its profile, so a
//! later segment only succeeds conditionally on the earlier ones having
//! failed. A restart heuristic draws a fresh solve time for every segment.
//! Context switches are free.

use rand::Rng;

use crate::error::{Error, Result};
use crate::profile::{HeuristicId, Instance, RuntimeProfile, Time};
use crate::schedule::{ExecutionModel, Models, RunSegment, Schedule};

/// Empirical probability that a run finishes within `t` units.
pub fn cdf(profile: &RuntimeProfile, t: Time) -> f64 {
    profile.cdf(t)
}

/// Conditional solve events of one segment: `(offset into the segment,
/// probability)` for every sample that lands inside it, given that the
/// run has not finished after `elapsed` units. `elapsed` is ignored for
/// restarts.
pub(crate) fn solve_events(
    profile: &RuntimeProfile,
    model: ExecutionModel,
    elapsed: Time,
    tau: Time,
) -> impl Iterator<Item = (Time, f64)> + '_ {
    let solved = profile.solved_times();
    let (start, base, mass) = match model {
        ExecutionModel::Restart => (0, 0, 1.0 / profile.len() as f64),
        ExecutionModel::SuspendResume => {
            let done = profile.solved_within(elapsed);
            let alive = profile.len() - done;
            let mass = if alive == 0 { 0.0 } else { 1.0 / alive as f64 };
            (done, elapsed, mass)
        }
    };
    let end = profile.solved_within(base.saturating_add(tau));
    solved[start..end.max(start)].iter().map(move |&t| (t - base, mass))
}

/// Probability that a segment of `tau` units solves, given `elapsed` units
/// already spent on this heuristic's persistent run.
pub(crate) fn success_given(profile: &RuntimeProfile, model: ExecutionModel, elapsed: Time, tau: Time) -> f64 {
    match model {
        ExecutionModel::Restart => profile.cdf(tau),
        ExecutionModel::SuspendResume => {
            let n = profile.len();
            let done = profile.solved_within(elapsed);
            if done == n {
                return 0.0;
            }
            let more = profile.solved_within(elapsed.saturating_add(tau)) - done;
            more as f64 / (n - done) as f64
        }
    }
}

/// Survival probabilities and accumulated run time along a schedule prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageState {
    survival: Vec<f64>,
    elapsed: Vec<Time>,
    wall: Time,
}

impl CoverageState {
    /// State at the empty prefix.
    pub fn new(instances: usize, heuristics: usize) -> Self {
        CoverageState {
            survival: vec![1.0; instances],
            elapsed: vec![0; heuristics],
            wall: 0,
        }
    }

    pub fn for_instances(instances: &[Instance]) -> Self {
        CoverageState::new(instances.len(), crate::profile::heuristic_count(instances))
    }

    /// Probability that instance `x` is still unsolved.
    pub fn survival(&self, x: usize) -> f64 {
        self.survival[x]
    }

    pub fn survivals(&self) -> &[f64] {
        &self.survival
    }

    /// Time already invested in `h`'s persistent run (always 0 for
    /// restart heuristics).
    pub fn elapsed(&self, h: HeuristicId) -> Time {
        self.elapsed[h.0]
    }

    pub fn wall_time(&self) -> Time {
        self.wall
    }

    pub(crate) fn set_elapsed(&mut self, elapsed: &[Time]) {
        self.elapsed.copy_from_slice(elapsed);
    }

    /// Weighted expected number of solved instances.
    pub fn coverage(&self, instances: &[Instance]) -> f64 {
        instances
            .iter()
            .zip(&self.survival)
            .map(|(x, q)| x.weight * (1.0 - q))
            .sum()
    }

    /// State after running `segment`. `self` is left untouched.
    pub fn advance(&self, segment: RunSegment, instances: &[Instance], models: &Models) -> CoverageState {
        let h = segment.heuristic;
        let model = models.get(h);
        let a = self.elapsed(h);
        let survival = instances
            .iter()
            .zip(&self.survival)
            .map(|(x, &q)| q * (1.0 - success_given(x.profile(h), model, a, segment.tau)))
            .collect();
        let mut elapsed = self.elapsed.clone();
        if model == ExecutionModel::SuspendResume {
            elapsed[h.0] += segment.tau;
        }
        CoverageState {
            survival,
            elapsed,
            wall: self.wall + segment.tau,
        }
    }
}

/// Success probability of one segment on a single profile given the prefix
/// summarized by `state`.
pub fn segment_success(
    state: &CoverageState,
    h: HeuristicId,
    profile: &RuntimeProfile,
    model: ExecutionModel,
    tau: Time,
) -> f64 {
    success_given(profile, model, state.elapsed(h), tau)
}

/// Replays a full schedule and returns the final state.
pub fn run_prefix(schedule: &Schedule, instances: &[Instance]) -> CoverageState {
    schedule
        .segments()
        .iter()
        .fold(CoverageState::for_instances(instances), |state, &seg| {
            state.advance(seg, instances, schedule.models())
        })
}

/// Weighted expected number of instances the schedule solves.
pub fn coverage(schedule: &Schedule, instances: &[Instance]) -> f64 {
    run_prefix(schedule, instances).coverage(instances)
}

/// Incremental evaluation of E[min(cap, T(S, x))] for one instance.
///
/// Keeps the survival probability and `credit = sum p_e * (cap - t_e)`
/// over solve events `e` at wall time `t_e < cap`; the expected capped time
/// is `cap - credit`.
#[derive(Debug, Clone)]
pub(crate) struct CappedWalk {
    pub survival: f64,
    pub credit: f64,
    pub wall: Time,
    pub elapsed: Vec<Time>,
    pub cap: Time,
}

impl CappedWalk {
    pub fn new(heuristics: usize, cap: Time) -> Self {
        CappedWalk {
            survival: 1.0,
            credit: 0.0,
            wall: 0,
            elapsed: vec![0; heuristics],
            cap,
        }
    }

    pub fn step(&mut self, seg: RunSegment, model: ExecutionModel, profile: &RuntimeProfile) {
        let h = seg.heuristic.0;
        let a = self.elapsed[h];
        if self.survival > 0.0 {
            let mut p_solve = 0.0;
            for (offset, p) in solve_events(profile, model, a, seg.tau) {
                p_solve += p;
                let t = self.wall + offset;
                if t < self.cap {
                    self.credit += self.survival * p * (self.cap - t) as f64;
                }
            }
            self.survival *= 1.0 - p_solve.min(1.0);
        }
        if model == ExecutionModel::SuspendResume {
            self.elapsed[h] += seg.tau;
        }
        self.wall += seg.tau;
    }

    pub fn expected_time(&self) -> f64 {
        self.cap as f64 - self.credit
    }
}

fn check_cap(cap: Time) -> Result<()> {
    if cap < 1 {
        return Err(Error::invalid("cap B must be >= 1"));
    }
    Ok(())
}

/// E[min(cap, T(S, x))], computed exactly from the instance's profiles.
///
/// Unsolved probability mass, including everything left at the end of the
/// schedule, is charged the full cap.
pub fn expected_capped_time(schedule: &Schedule, instance: &Instance, cap: Time) -> Result<f64> {
    check_cap(cap)?;
    let mut walk = CappedWalk::new(instance.profiles.len(), cap);
    for &seg in schedule.segments() {
        if walk.wall >= cap {
            break;
        }
        walk.step(seg, schedule.model_of(seg.heuristic), instance.profile(seg.heuristic));
    }
    Ok(walk.expected_time())
}

/// Weighted sum of expected capped times.
pub fn evaluate(schedule: &Schedule, instances: &[Instance], cap: Time) -> Result<f64> {
    check_cap(cap)?;
    instances
        .iter()
        .map(|x| Ok(x.weight * expected_capped_time(schedule, x, cap)?))
        .sum()
}

/// Weighted mean of expected capped times; 0 for an empty set.
pub fn average_capped_time(schedule: &Schedule, instances: &[Instance], cap: Time) -> Result<f64> {
    let w = crate::profile::total_weight(instances);
    if w == 0.0 {
        return Ok(0.0);
    }
    Ok(evaluate(schedule, instances, cap)? / w)
}

/// Draws one run's solve time; `None` for a censored draw.
pub fn draw_solve_time<R: Rng + ?Sized>(profile: &RuntimeProfile, rng: &mut R) -> Option<Time> {
    let i = rng.random_range(0..profile.len());
    profile.solved_times().get(i).copied()
}

/// One realized value of min(cap, T(S, x)).
pub fn simulate_capped_time<R: Rng + ?Sized>(schedule: &Schedule, instance: &Instance, cap: Time, rng: &mut R) -> Time {
    let k = instance.profiles.len();
    // lazily drawn persistent runs
    let mut persistent: Vec<Option<Option<Time>>> = vec![None; k];
    let mut elapsed = vec![0; k];
    let mut wall: Time = 0;
    for seg in schedule.segments() {
        if wall >= cap {
            break;
        }
        let h = seg.heuristic.0;
        let profile = &instance.profiles[h];
        let solve_at = match schedule.model_of(seg.heuristic) {
            ExecutionModel::Restart => draw_solve_time(profile, rng),
            ExecutionModel::SuspendResume => {
                let t = *persistent[h].get_or_insert_with(|| draw_solve_time(profile, rng));
                let offset = t.and_then(|t| t.checked_sub(elapsed[h]));
                elapsed[h] += seg.tau;
                offset.filter(|&d| d >= 1)
            }
        };
        if let Some(d) = solve_at.filter(|&d| d <= seg.tau) {
            return (wall + d).min(cap);
        }
        wall += seg.tau;
    }
    cap
}
