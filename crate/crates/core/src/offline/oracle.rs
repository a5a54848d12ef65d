//! Exhaustive optimal-schedule search for tiny inputs.
//!
//! Explores every segment sequence up to `max_segments` long whose
//! durations come from the per-prefix candidate sets, and keeps the one with
//! the lowest weighted expected capped time. Only meant as a test oracle.

use std::cmp::Ordering;

use crate::coverage::{success_given, CappedWalk, CoverageState};
use crate::error::{Error, Result};
use crate::offline::greedy::candidate_durations;
use crate::par::{self, Exec};
use crate::profile::{heuristic_count, HeuristicId, Instance, Time};
use crate::schedule::{Models, RunSegment, Schedule};

const COST_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    pub max_heuristics: usize,
    pub max_instances: usize,
    pub max_segments: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_heuristics: 3,
            max_instances: 5,
            max_segments: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub schedule: Schedule,
    /// Weighted expected capped time with cap = length cap.
    pub cost: f64,
}

#[derive(Debug, Clone)]
struct Best {
    cost: f64,
    length: Time,
    segments: Vec<RunSegment>,
}

impl Best {
    fn better_than(&self, other: &Best) -> bool {
        if self.cost < other.cost - COST_EPS {
            return true;
        }
        if self.cost > other.cost + COST_EPS {
            return false;
        }
        match self.length.cmp(&other.length) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.segments < other.segments,
        }
    }
}

struct Search<'a> {
    instances: &'a [Instance],
    models: &'a Models,
    cap: Time,
    max_segments: usize,
}

impl Search<'_> {
    fn cost(&self, walks: &[CappedWalk]) -> f64 {
        self.instances
            .iter()
            .zip(walks)
            .map(|(x, w)| x.weight * w.expected_time())
            .sum()
    }

    /// Durations at this prefix that fit the cap and can solve something.
    fn children(&self, walks: &[CappedWalk], wall: Time) -> Vec<RunSegment> {
        let k = self.models.len();
        let mut state = CoverageState::new(self.instances.len(), k);
        // rebuild the parts of the state candidate_durations looks at
        state = with_elapsed(state, &walks[0].elapsed);
        let remaining = self.cap - wall;
        let mut out = Vec::new();
        for h in (0..k).map(HeuristicId) {
            let model = self.models.get(h);
            let a = walks[0].elapsed[h.0];
            for tau in candidate_durations(h, &state, self.instances, self.models) {
                if tau > remaining {
                    break;
                }
                let useful = self
                    .instances
                    .iter()
                    .zip(walks)
                    .any(|(x, w)| w.survival > 0.0 && success_given(x.profile(h), model, a, tau) > 0.0);
                if useful {
                    out.push(RunSegment::new(h, tau));
                }
            }
        }
        out
    }

    fn step(&self, walks: &[CappedWalk], seg: RunSegment) -> Vec<CappedWalk> {
        let model = self.models.get(seg.heuristic);
        walks
            .iter()
            .zip(self.instances)
            .map(|(w, x)| {
                let mut w = w.clone();
                w.step(seg, model, x.profile(seg.heuristic));
                w
            })
            .collect()
    }

    fn dfs(&self, walks: &[CappedWalk], prefix: &mut Vec<RunSegment>, wall: Time, best: &mut Best) {
        let here = Best {
            cost: self.cost(walks),
            length: wall,
            segments: prefix.clone(),
        };
        if here.better_than(best) {
            *best = here;
        }
        if prefix.len() == self.max_segments {
            return;
        }
        for seg in self.children(walks, wall) {
            let next = self.step(walks, seg);
            prefix.push(seg);
            self.dfs(&next, prefix, wall + seg.tau, best);
            prefix.pop();
        }
    }
}

fn with_elapsed(mut state: CoverageState, elapsed: &[Time]) -> CoverageState {
    state.set_elapsed(elapsed);
    state
}

pub fn optimal_schedule_oracle(
    instances: &[Instance],
    models: &Models,
    length_cap: Time,
    max_segments: usize,
) -> Result<OracleResult> {
    optimal_schedule_oracle_with(
        instances,
        models,
        length_cap,
        max_segments,
        OracleBudget::default(),
        Exec::default(),
    )
}

pub fn optimal_schedule_oracle_with(
    instances: &[Instance],
    models: &Models,
    length_cap: Time,
    max_segments: usize,
    budget: OracleBudget,
    exec: Exec,
) -> Result<OracleResult> {
    if length_cap < 1 {
        return Err(Error::invalid("length cap must be >= 1"));
    }
    let k = models.len();
    if !instances.is_empty() && heuristic_count(instances) != k {
        return Err(Error::invalid("models do not match the instances' heuristics"));
    }
    if k > budget.max_heuristics {
        return Err(Error::Budget(format!("{k} heuristics > {}", budget.max_heuristics)));
    }
    if instances.len() > budget.max_instances {
        return Err(Error::Budget(format!(
            "{} instances > {}",
            instances.len(),
            budget.max_instances
        )));
    }
    if max_segments > budget.max_segments {
        return Err(Error::Budget(format!(
            "{max_segments} segments > {}",
            budget.max_segments
        )));
    }

    let search = Search {
        instances,
        models,
        cap: length_cap,
        max_segments,
    };
    let root: Vec<CappedWalk> = instances.iter().map(|_| CappedWalk::new(k, length_cap)).collect();
    let mut best = Best {
        cost: search.cost(&root),
        length: 0,
        segments: Vec::new(),
    };
    if max_segments > 0 && !instances.is_empty() {
        let firsts = search.children(&root, 0);
        let branch_bests = par::map(exec, &firsts, |&seg| {
            let walks = search.step(&root, seg);
            let mut prefix = vec![seg];
            let mut b = Best {
                cost: search.cost(&walks),
                length: seg.tau,
                segments: prefix.clone(),
            };
            search.dfs(&walks, &mut prefix, seg.tau, &mut b);
            b
        });
        for b in branch_bests {
            if b.better_than(&best) {
                best = b;
            }
        }
    }
    Ok(OracleResult {
        schedule: Schedule::new(best.segments, models.clone())?,
        cost: best.cost,
    })
}
