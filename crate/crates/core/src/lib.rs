//! Schedules that interleave several heuristics on one problem instance,
//! learned from recorded runtime data.
//!
//! * [`coverage`]: exact expected (capped) solve time of a schedule under
//!   suspend-and-resume and restart execution.
//! * [`offline`]: the greedy schedule, an exhaustive oracle for tiny inputs
//!   and the single-heuristic / round-robin baselines.
//! * [`online`]: per-slot multiplicative-weights learning of schedules on
//!   an instance stream.
//! * [`experts`]: sleeping experts over Boolean features, wrapping one
//!   online learner per feature.
//! * [`anytime`]: anytime objectives as weighted fictitious instances.
//! * [`harness`]: CSV ingestion, synthetic data, training-size experiments
//!   and the command line.

pub mod anytime;
pub mod coverage;
pub mod error;
pub mod experts;
pub mod harness;
pub mod offline;
pub mod online;
pub mod par;
pub mod profile;
pub mod schedule;

pub use coverage::{coverage, evaluate, expected_capped_time, CoverageState};
pub use error::{Error, Result};
pub use par::Exec;
pub use profile::{HeuristicId, Instance, Portfolio, RuntimeProfile, Sample, Time};
pub use schedule::{ExecutionModel, Models, RunSegment, Schedule};
