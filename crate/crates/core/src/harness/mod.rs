//! Data ingestion, synthetic data, experiment protocols and the CLI.

pub mod cli;
pub mod config;
pub mod curve;
pub mod data;
pub mod synth;

pub use config::{powers_of_two_below, ConfigFile, ExperimentConfig, Method, ModelChoice};
pub use curve::{run_feature_curve, run_training_curve, split, ExperimentReport, ReportRow};
pub use data::{load_anytime, load_features, load_runtimes, load_schedule, AnytimeDataset, Dataset};
pub use synth::{synth_generate, SynthOutput, SynthSpec};
