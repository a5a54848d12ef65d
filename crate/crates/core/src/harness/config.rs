//! Experiment configuration: a flat TOML key-value file whose keys can all
//! be overridden from the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use super::data::read_text;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::profile::Time;
use crate::schedule::{ExecutionModel, Models};

pub const DEFAULT_REPETITIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    GreedySr,
    GreedyRestart,
    BestSingle,
    Parallel,
    Og,
    Ogse,
    FeaturesOnly,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::GreedySr,
        Method::GreedyRestart,
        Method::BestSingle,
        Method::Parallel,
        Method::Og,
        Method::Ogse,
        Method::FeaturesOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::GreedySr => "greedy-sr",
            Method::GreedyRestart => "greedy-restart",
            Method::BestSingle => "best-single",
            Method::Parallel => "parallel",
            Method::Og => "og",
            Method::Ogse => "ogse",
            Method::FeaturesOnly => "features-only",
        }
    }

    /// Stable index used to derive per-method random streams.
    pub fn code(self) -> u64 {
        Method::ALL.iter().position(|&m| m == self).expect("listed") as u64
    }

    pub fn uses_features(self) -> bool {
        matches!(self, Method::Ogse | Method::FeaturesOnly)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown method '{s}'")))
    }
}

/// Execution models requested for a run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ModelChoice {
    #[default]
    SuspendResume,
    Restart,
    /// One model per heuristic, in portfolio order.
    Mixed(Vec<ExecutionModel>),
}

impl ModelChoice {
    /// `sr`, `restart`, or `mixed` together with a per-heuristic list.
    pub fn parse(name: &str, list: Option<&[String]>) -> Result<Self> {
        match name {
            "sr" | "suspend-resume" => Ok(ModelChoice::SuspendResume),
            "restart" => Ok(ModelChoice::Restart),
            "mixed" => {
                let list = list.ok_or_else(|| Error::input("model 'mixed' needs a 'models' list"))?;
                let models = list.iter().map(|m| m.parse()).collect::<Result<Vec<_>>>()?;
                Ok(ModelChoice::Mixed(models))
            }
            other => Err(Error::input(format!(
                "unknown model '{other}' (expected sr, restart or mixed)"
            ))),
        }
    }

    pub fn resolve(&self, k: usize) -> Result<Models> {
        match self {
            ModelChoice::SuspendResume => Ok(Models::suspend_resume(k)),
            ModelChoice::Restart => Ok(Models::restart(k)),
            ModelChoice::Mixed(v) if v.len() == k => Ok(Models::from_vec(v.clone())),
            ModelChoice::Mixed(v) => Err(Error::input(format!("{} models listed for {k} heuristics", v.len()))),
        }
    }
}

/// Contents of a config file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub schedule: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: Option<String>,
    pub models: Option<Vec<String>>,
    pub cap: Option<Time>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub m: Option<Vec<usize>>,
    pub methods: Option<Vec<String>>,
    pub quantum: Option<Time>,
    pub gamma: Option<f64>,
    pub exploration_c: Option<f64>,
    pub eta: Option<f64>,
    pub slots: Option<usize>,
    pub beta: Option<f64>,
    pub train: Option<usize>,
    pub objectives: Option<Vec<String>>,
    pub objective_weights: Option<Vec<f64>>,
    pub serial: Option<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        ConfigFile::parse(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overlay(self, over: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigFile { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            data,
            features,
            spec,
            schedule,
            out,
            model,
            models,
            cap,
            seed,
            reps,
            m,
            methods,
            quantum,
            gamma,
            exploration_c,
            eta,
            slots,
            beta,
            train,
            objectives,
            objective_weights,
            serial
        )
    }

    pub fn model_choice(&self) -> Result<ModelChoice> {
        ModelChoice::parse(self.model.as_deref().unwrap_or("sr"), self.models.as_deref())
    }

    pub fn exec(&self) -> Exec {
        if self.serial.unwrap_or(false) {
            Exec::Serial
        } else {
            Exec::Parallel
        }
    }
}

/// Settings of a training-size experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    /// Training sizes; all powers of two below `n` when unset.
    pub m_values: Option<Vec<usize>>,
    pub repetitions: usize,
    /// Clamped to the dataset limit; the limit when unset.
    pub cap: Option<Time>,
    pub seed: u64,
    /// Models for the online methods and the round-robin baseline.
    pub models: ModelChoice,
    /// Round-robin slice length.
    pub quantum: Time,
    pub slots: Option<usize>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub exec: Exec,
}

impl ExperimentConfig {
    pub fn new(methods: Vec<Method>) -> Self {
        ExperimentConfig {
            methods,
            m_values: None,
            repetitions: DEFAULT_REPETITIONS,
            cap: None,
            seed: 0,
            models: ModelChoice::SuspendResume,
            quantum: 1,
            slots: None,
            eta: None,
            beta: None,
            exec: Exec::Parallel,
        }
    }

    pub fn from_file(file: &ConfigFile, default_methods: &[Method]) -> Result<Self> {
        let methods = match &file.methods {
            Some(v) => v.iter().map(|m| m.parse()).collect::<Result<Vec<_>>>()?,
            None => default_methods.to_vec(),
        };
        let mut cfg = ExperimentConfig::new(methods);
        cfg.m_values = file.m.clone();
        cfg.repetitions = file.reps.unwrap_or(DEFAULT_REPETITIONS);
        cfg.cap = file.cap;
        cfg.seed = file.seed.unwrap_or(0);
        cfg.models = file.model_choice()?;
        cfg.quantum = file.quantum.unwrap_or(1);
        cfg.slots = file.slots;
        cfg.eta = file.eta;
        cfg.beta = file.beta;
        cfg.exec = file.exec();
        Ok(cfg)
    }

    /// Checks the config against a dataset of `n` instances and returns the
    /// training sizes to run.
    pub fn training_sizes(&self, n: usize) -> Result<Vec<usize>> {
        if self.methods.is_empty() {
            return Err(Error::input("no methods configured"));
        }
        if self.repetitions == 0 {
            return Err(Error::input("repetitions must be positive"));
        }
        if self.quantum == 0 {
            return Err(Error::input("quantum must be positive"));
        }
        let ms = match &self.m_values {
            Some(v) => v.clone(),
            None => powers_of_two_below(n),
        };
        if ms.is_empty() {
            return Err(Error::input(format!("no training size fits {n} instances")));
        }
        if let Some(&bad) = ms.iter().find(|&&m| m == 0 || m >= n) {
            return Err(Error::input(format!("training size {bad} must lie in [1, {n})")));
        }
        Ok(ms)
    }
}

/// 1, 2, 4, ... strictly below `n`.
pub fn powers_of_two_below(n: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |m| m.checked_mul(2))
        .take_while(|&m| m < n)
        .collect()
}
