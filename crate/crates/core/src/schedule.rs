//! Schedules: ordered run segments plus a per-heuristic execution model.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::profile::{HeuristicId, Time};

/// How a heuristic's segments relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecutionModel {
    /// Every segment continues the heuristic's single persistent run.
    SuspendResume,
    /// Every segment starts a fresh, independently seeded run.
    Restart,
}

impl ExecutionModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ExecutionModel::SuspendResume => "sr",
            ExecutionModel::Restart => "restart",
        }
    }
}

impl fmt::Display for ExecutionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExecutionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sr" | "suspend-resume" | "suspend_resume" => Ok(ExecutionModel::SuspendResume),
            "restart" => Ok(ExecutionModel::Restart),
            other => Err(Error::input(format!("unknown execution model '{other}'"))),
        }
    }
}

/// Execution model of every heuristic in a portfolio, indexed by heuristic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Models(Vec<ExecutionModel>);

impl Models {
    pub fn uniform(k: usize, model: ExecutionModel) -> Self {
        Models(vec![model; k])
    }

    pub fn suspend_resume(k: usize) -> Self {
        Models::uniform(k, ExecutionModel::SuspendResume)
    }

    pub fn restart(k: usize) -> Self {
        Models::uniform(k, ExecutionModel::Restart)
    }

    pub fn from_vec(models: Vec<ExecutionModel>) -> Self {
        Models(models)
    }

    pub fn get(&self, h: HeuristicId) -> ExecutionModel {
        self.0[h.0]
    }

    pub fn set(&mut self, h: HeuristicId, model: ExecutionModel) {
        self.0[h.0] = model;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[ExecutionModel] {
        &self.0
    }

    pub fn all_restart(&self) -> bool {
        self.0.iter().all(|&m| m == ExecutionModel::Restart)
    }
}

/// Run heuristic `heuristic` for `tau >= 1` units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunSegment {
    pub heuristic: HeuristicId,
    pub tau: Time,
}

impl RunSegment {
    pub fn new(heuristic: HeuristicId, tau: Time) -> Self {
        assert!(tau >= 1, "segment duration must be >= 1");
        RunSegment { heuristic, tau }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    segments: Vec<RunSegment>,
    models: Models,
}

impl Schedule {
    pub fn new(segments: Vec<RunSegment>, models: Models) -> Result<Self> {
        let s = Schedule { segments, models };
        s.validate()?;
        Ok(s)
    }

    pub fn empty(models: Models) -> Self {
        Schedule {
            segments: Vec::new(),
            models,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for seg in &self.segments {
            if seg.tau == 0 {
                return Err(Error::invalid("segment duration must be >= 1"));
            }
            if seg.heuristic.0 >= self.models.len() {
                return Err(Error::invalid(format!(
                    "segment uses {} but only {} heuristics have a model",
                    seg.heuristic,
                    self.models.len()
                )));
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> &[RunSegment] {
        &self.segments
    }

    pub fn models(&self) -> &Models {
        &self.models
    }

    pub fn model_of(&self, h: HeuristicId) -> ExecutionModel {
        self.models.get(h)
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Total wall time of all segments.
    pub fn total_length(&self) -> Time {
        self.segments.iter().map(|s| s.tau).sum()
    }

    pub fn push(&mut self, segment: RunSegment) {
        assert!(segment.heuristic.0 < self.models.len());
        self.segments.push(segment);
    }

    /// Copy with `segment` appended.
    pub fn appended(&self, segment: RunSegment) -> Schedule {
        let mut s = self.clone();
        s.push(segment);
        s
    }
}
