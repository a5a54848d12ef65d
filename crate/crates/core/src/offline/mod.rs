//! Offline schedule construction from a fixed training set.

pub mod baseline;
pub mod greedy;
pub mod oracle;

pub use baseline::{best_single_heuristic, parallel_schedule, single_heuristic_cost, solo_capped_time};
pub use greedy::{
    candidate_durations, greedy_schedule, greedy_schedule_with, greedy_step, Candidate, GreedyOptions, GreedyStep,
    GreedyTrace,
};
pub use oracle::{optimal_schedule_oracle, optimal_schedule_oracle_with, OracleBudget, OracleResult};
