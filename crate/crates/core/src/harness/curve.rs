//! Training-size experiments: fit on `m` random instances, score the rest.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Method};
use super::data::{csv_writer, fmt_real, Dataset};
use crate::coverage::{average_capped_time, expected_capped_time};
use crate::error::{Error, Result};
use crate::experts::{FeaturesOnly, OgseConfig, OgseState};
use crate::offline::{best_single_heuristic, greedy_schedule, parallel_schedule, single_heuristic_cost};
use crate::online::{learn, og_select, OnlineConfig, OnlineState};
use crate::par::{self, derive_seed, Exec};
use crate::profile::{total_weight, Instance, Time};
use crate::schedule::Models;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub m: usize,
    pub repetition: usize,
    /// Weighted mean capped time on the held-out instances.
    pub avg_capped_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub cap: Time,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Mean over repetitions per (method, m).
    pub fn aggregate(&self) -> BTreeMap<(Method, usize), f64> {
        let mut acc: BTreeMap<(Method, usize), (f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            let e = acc.entry((r.method, r.m)).or_default();
            e.0 += r.avg_capped_time;
            e.1 += 1;
        }
        acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
    }

    pub fn mean(&self, method: Method, m: usize) -> Option<f64> {
        self.aggregate().get(&(method, m)).copied()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut ms: Vec<usize> = self.rows.iter().map(|r| r.m).collect();
        ms.sort_unstable();
        ms.dedup();
        ms
    }

    /// `method,m,repetition,avg_capped_time`
    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        {
            let mut w = csv_writer(&mut buf);
            w.write_record(["method", "m", "repetition", "avg_capped_time"])?;
            for r in &self.rows {
                w.write_record([
                    r.method.as_str().to_string(),
                    r.m.to_string(),
                    r.repetition.to_string(),
                    fmt_real(r.avg_capped_time),
                ])?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(buf).expect("utf8"))
    }

    /// `method,m,mean_avg_capped_time,repetitions`
    pub fn summary_csv(&self) -> Result<String> {
        let mut counts: BTreeMap<(Method, usize), usize> = BTreeMap::new();
        for r in &self.rows {
            *counts.entry((r.method, r.m)).or_default() += 1;
        }
        let mut buf = Vec::new();
        {
            let mut w = csv_writer(&mut buf);
            w.write_record(["method", "m", "mean_avg_capped_time", "repetitions"])?;
            for ((method, m), mean) in self.aggregate() {
                w.write_record([
                    method.as_str().to_string(),
                    m.to_string(),
                    fmt_real(mean),
                    counts[&(method, m)].to_string(),
                ])?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(buf).expect("utf8"))
    }
}

/// Training indices (in draw order) and held-out indices (in dataset
/// order) for one (m, repetition) cell. Depends only on the seed and the
/// cell, never on the method.
pub fn split(n: usize, m: usize, seed: u64, repetition: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[m as u64, repetition as u64]));
    let train = index::sample(&mut rng, n, m).into_vec();
    let mut held = vec![true; n];
    for &i in &train {
        held[i] = false;
    }
    let test = (0..n).filter(|&i| held[i]).collect();
    (train, test)
}

/// Everything a method needs to fit and score one cell.
struct Cell<'a> {
    train: Vec<Instance>,
    test: Vec<Instance>,
    k: usize,
    cap: Time,
    universe: &'a [String],
    cfg: &'a ExperimentConfig,
    seed: u64,
}

fn weighted_mean(test: &[Instance], costs: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    let mut sum = 0.0;
    for (x, c) in test.iter().zip(costs) {
        sum += x.weight * c?;
    }
    Ok(sum / total_weight(test))
}

fn online_config(cell: &Cell<'_>, models: &Models) -> OnlineConfig {
    let mut oc = OnlineConfig::new(cell.train.len(), cell.cap);
    oc.slots = cell.cfg.slots;
    oc.eta = cell.cfg.eta;
    oc.models = Some(models.clone());
    oc
}

fn score(method: Method, cell: &Cell<'_>) -> Result<f64> {
    let cap = cell.cap;
    let mut rng = ChaCha8Rng::seed_from_u64(cell.seed);
    match method {
        Method::GreedySr | Method::GreedyRestart => {
            let models = if method == Method::GreedySr {
                Models::suspend_resume(cell.k)
            } else {
                Models::restart(cell.k)
            };
            let (g, _) = greedy_schedule(&cell.train, &models, cap);
            average_capped_time(&g, &cell.test, cap)
        }
        Method::BestSingle => {
            let (h, _) = best_single_heuristic(cell.k, &cell.train, cap);
            Ok(single_heuristic_cost(h, &cell.test, cap) / total_weight(&cell.test))
        }
        Method::Parallel => {
            let models = cell.cfg.models.resolve(cell.k)?;
            average_capped_time(&parallel_schedule(&models, cell.cfg.quantum, cap), &cell.test, cap)
        }
        Method::Og => {
            let models = cell.cfg.models.resolve(cell.k)?;
            let mut state = OnlineState::new(cell.k, &online_config(cell, &models).with_gamma(1.0))?;
            for x in &cell.train {
                let sel = og_select(&state, &mut rng);
                learn(&mut state, x, &sel);
            }
            state.set_gamma(0.0);
            weighted_mean(
                &cell.test,
                cell.test
                    .iter()
                    .map(|x| expected_capped_time(&og_select(&state, &mut rng).schedule, x, cap)),
            )
        }
        Method::Ogse => {
            let models = cell.cfg.models.resolve(cell.k)?;
            let cfg = OgseConfig {
                online: online_config(cell, &models).with_gamma(1.0),
                beta: cell.cfg.beta,
            };
            let mut state = OgseState::new(cell.k, cell.universe.to_vec(), &cfg)?;
            for x in &cell.train {
                state.step(x, &mut rng)?;
            }
            state.set_gamma(0.0);
            let mut costs = Vec::with_capacity(cell.test.len());
            for x in &cell.test {
                let round = state.step(x, &mut rng)?;
                costs.push(expected_capped_time(&round.schedule, x, cap));
            }
            weighted_mean(&cell.test, costs.into_iter())
        }
        Method::FeaturesOnly => {
            let model = FeaturesOnly::fit(&cell.train, cell.universe, cap, cell.cfg.beta)?;
            weighted_mean(&cell.test, cell.test.iter().map(|x| model.cost(x, &mut rng)))
        }
    }
}

/// Runs every (method, m, repetition) job of `cfg` on `dataset`. Rows come
/// back ordered by method (as configured), then m, then repetition, for
/// serial and parallel runs alike.
pub fn run_training_curve(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let n = dataset.n();
    let sizes = cfg.training_sizes(n)?;
    let cap = dataset.cap(cfg.cap);
    let k = dataset.k();
    cfg.models.resolve(k)?;
    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        for &m in &sizes {
            for rep in 0..cfg.repetitions {
                jobs.push((method, m, rep));
            }
        }
    }
    let results = par::map(cfg.exec, &jobs, |&(method, m, rep)| {
        let (train, test) = split(n, m, cfg.seed, rep);
        let cell = Cell {
            train: train.iter().map(|&i| dataset.instances[i].clone()).collect(),
            test: test.iter().map(|&i| dataset.instances[i].clone()).collect(),
            k,
            cap,
            universe: &dataset.features,
            cfg,
            seed: derive_seed(cfg.seed, &[m as u64, rep as u64, 1 + method.code()]),
        };
        score(method, &cell).map(|v| ReportRow {
            method,
            m,
            repetition: rep,
            avg_capped_time: v,
        })
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(r) = rows
        .iter()
        .find(|r| !(r.avg_capped_time > 0.0 && r.avg_capped_time <= cap as f64 + 1e-9))
    {
        return Err(Error::Budget(format!(
            "average {} outside (0, {cap}]",
            r.avg_capped_time
        )));
    }
    Ok(ExperimentReport { cap, rows })
}

/// The feature protocol: full exploration on the training instances, none
/// on the held-out ones. Defaults to the feature methods plus greedy when
/// the config names no methods.
pub fn run_feature_curve(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if dataset.features.is_empty() {
        return Err(Error::input("dataset has no feature universe"));
    }
    let mut cfg = cfg.clone();
    if cfg.methods.is_empty() {
        cfg.methods = vec![Method::Ogse, Method::FeaturesOnly, Method::GreedySr];
    }
    run_training_curve(dataset, &cfg)
}

/// Serial execution of the same jobs, for comparisons.
pub fn serial(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        exec: Exec::Serial,
        ..cfg.clone()
    }
}
