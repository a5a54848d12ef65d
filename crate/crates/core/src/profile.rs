//! Heuristics, recorded runtime distributions and instances.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Integer time units. All solve times, durations and caps use this.
pub type Time = u64;

/// Position of a heuristic in its portfolio, dense in `0..k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HeuristicId(pub usize);

impl HeuristicId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for HeuristicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

/// The heuristics available to a schedule, with display names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Portfolio {
    names: Vec<String>,
}

impl Portfolio {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::invalid("portfolio needs at least one heuristic"));
        }
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::invalid("duplicate heuristic name in portfolio"));
        }
        Ok(Portfolio { names })
    }

    /// Portfolio `h0..h{k-1}`.
    pub fn anonymous(k: usize) -> Self {
        Portfolio {
            names: (0..k).map(|i| format!("h{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, h: HeuristicId) -> &str {
        &self.names[h.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<HeuristicId> {
        self.names.iter().position(|n| n == name).map(HeuristicId)
    }

    pub fn ids(&self) -> impl Iterator<Item = HeuristicId> {
        (0..self.names.len()).map(HeuristicId)
    }
}

/// One recorded run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sample {
    /// Solved after `t >= 1` time units.
    Solved(Time),
    /// Hit the collection limit without solving.
    Censored(Time),
}

/// Empirical distribution of one heuristic's solve time on one instance.
///
/// Solved times are kept sorted so the empirical CDF is a binary search.
/// Censored samples never count as solved, whatever the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeProfile {
    solved: Vec<Time>,
    censored: usize,
    limit: Option<Time>,
}

impl RuntimeProfile {
    pub fn new(samples: &[Sample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("runtime profile needs at least one sample"));
        }
        let mut solved = Vec::with_capacity(samples.len());
        let mut censored = 0;
        let mut limit = None;
        for s in samples {
            match *s {
                Sample::Solved(t) => {
                    if t == 0 {
                        return Err(Error::invalid("solve times must be >= 1"));
                    }
                    solved.push(t);
                }
                Sample::Censored(l) => {
                    if l == 0 {
                        return Err(Error::invalid("censoring limit must be >= 1"));
                    }
                    match limit {
                        Some(prev) if prev != l => {
                            return Err(Error::invalid(format!(
                                "inconsistent censoring limits {prev} and {l} in one profile"
                            )))
                        }
                        _ => limit = Some(l),
                    }
                    censored += 1;
                }
            }
        }
        solved.sort_unstable();
        Ok(RuntimeProfile {
            solved,
            censored,
            limit,
        })
    }

    /// Single-sample profile of a deterministic heuristic that solves at `t`.
    pub fn deterministic(t: Time) -> Self {
        assert!(t >= 1, "solve times must be >= 1");
        RuntimeProfile {
            solved: vec![t],
            censored: 0,
            limit: None,
        }
    }

    /// Single-sample profile of a run that never finished within `limit`.
    pub fn never(limit: Time) -> Self {
        assert!(limit >= 1, "censoring limit must be >= 1");
        RuntimeProfile {
            solved: Vec::new(),
            censored: 1,
            limit: Some(limit),
        }
    }

    pub fn from_solved(times: &[Time]) -> Self {
        let samples: Vec<Sample> = times.iter().map(|&t| Sample::Solved(t)).collect();
        RuntimeProfile::new(&samples).expect("valid solved times")
    }

    pub fn len(&self) -> usize {
        self.solved.len() + self.censored
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorted solved times (with repeats).
    pub fn solved_times(&self) -> &[Time] {
        &self.solved
    }

    pub fn censored_count(&self) -> usize {
        self.censored
    }

    pub fn censor_limit(&self) -> Option<Time> {
        self.limit
    }

    pub fn is_deterministic(&self) -> bool {
        self.len() == 1
    }

    /// All samples, solved ones first in ascending order.
    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        let limit = self.limit.unwrap_or(Time::MAX);
        self.solved
            .iter()
            .map(|&t| Sample::Solved(t))
            .chain(std::iter::repeat_n(Sample::Censored(limit), self.censored))
    }

    /// Number of samples solved within `t` units.
    pub fn solved_within(&self, t: Time) -> usize {
        self.solved.partition_point(|&s| s <= t)
    }

    /// Empirical P(T <= t).
    pub fn cdf(&self, t: Time) -> f64 {
        self.solved_within(t) as f64 / self.len() as f64
    }

    /// Whether any sample solves at or before `t`.
    pub fn solves_by(&self, t: Time) -> bool {
        self.solved.first().is_some_and(|&s| s <= t)
    }
}

/// A problem instance with one profile per heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub weight: f64,
    pub profiles: Vec<RuntimeProfile>,
    pub features: BTreeSet<String>,
}

impl Instance {
    pub fn new(id: impl Into<String>, profiles: Vec<RuntimeProfile>) -> Self {
        Instance {
            id: id.into(),
            weight: 1.0,
            profiles,
            features: BTreeSet::new(),
        }
    }

    /// Deterministic instance, `times[h]` per heuristic; `None` never solves.
    pub fn deterministic(id: impl Into<String>, times: &[Option<Time>], limit: Time) -> Self {
        let profiles = times
            .iter()
            .map(|t| match t {
                Some(t) => RuntimeProfile::deterministic(*t),
                None => RuntimeProfile::never(limit),
            })
            .collect();
        Instance::new(id, profiles)
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_features<I, S>(mut self, features: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.features = features.into_iter().map(Into::into).collect();
        self
    }

    pub fn profile(&self, h: HeuristicId) -> &RuntimeProfile {
        &self.profiles[h.0]
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.profiles.len() != k {
            return Err(Error::invalid(format!(
                "instance {} has {} profiles, portfolio has {k}",
                self.id,
                self.profiles.len()
            )));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::invalid(format!(
                "instance {} has non-positive weight {}",
                self.id, self.weight
            )));
        }
        Ok(())
    }
}

/// Number of heuristics the instances are profiled against (0 for none).
pub fn heuristic_count(instances: &[Instance]) -> usize {
    instances.first().map_or(0, |x| x.profiles.len())
}

pub fn total_weight(instances: &[Instance]) -> f64 {
    instances.iter().map(|x| x.weight).sum()
}
