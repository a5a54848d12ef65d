//! Feature-conditioned schedule selection.
//!
//! Every Boolean feature is an expert that is awake on exactly the
//! instances where the feature is true. Each feature owns a private online
//! learner that only ever sees its own instances; a sleeping-experts layer
//! decides, per instance, whose proposed schedule to run.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coverage::{expected_capped_time, simulate_capped_time};
use crate::error::{Error, Result};
use crate::offline::{greedy_schedule, single_heuristic_cost, solo_capped_time};
use crate::online::{learn, og_select, OnlineConfig, OnlineState, Selection};
use crate::profile::{heuristic_count, HeuristicId, Instance, Time};
use crate::schedule::{Models, Schedule};

/// Name of the feature that is true on every instance.
pub const ALWAYS_TRUE: &str = "ALL";

/// Multiplicative weights over experts that may be asleep.
#[derive(Debug, Clone, PartialEq)]
pub struct SleepingExperts {
    weights: Vec<f64>,
    beta: f64,
}

/// `1 / (1 + sqrt(2 ln M / n))`.
pub fn default_beta(m: usize, n: usize) -> f64 {
    let n = n.max(1) as f64;
    1.0 / (1.0 + (2.0 * (m.max(1) as f64).ln() / n).sqrt())
}

impl SleepingExperts {
    pub fn new(m: usize, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::invalid(format!("beta must lie in (0, 1], got {beta}")));
        }
        Ok(SleepingExperts {
            weights: vec![1.0; m],
            beta,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Selection probabilities over `awake`, in the same order.
    pub fn probabilities(&self, awake: &[usize]) -> Result<Vec<f64>> {
        if awake.is_empty() {
            return Err(Error::invalid("no awake expert"));
        }
        let total: f64 = awake.iter().map(|&j| self.weights[j]).sum();
        Ok(awake.iter().map(|&j| self.weights[j] / total).collect())
    }

    /// Samples an awake expert proportionally to weight. A lone awake
    /// expert is returned without consuming randomness.
    pub fn select<R: Rng + ?Sized>(&self, awake: &[usize], rng: &mut R) -> Result<usize> {
        let probs = self.probabilities(awake)?;
        if awake.len() == 1 {
            return Ok(awake[0]);
        }
        let mut u = rng.random::<f64>();
        for (&j, p) in awake.iter().zip(&probs) {
            if u < *p {
                return Ok(j);
            }
            u -= p;
        }
        Ok(*awake.last().expect("non-empty"))
    }

    /// `w_j <- w_j * beta^loss_j` on awake experts, then rescales them so
    /// their total weight is what it was. Asleep weights are not touched.
    pub fn update(&mut self, awake: &[usize], losses: &[f64]) -> Result<()> {
        if awake.len() != losses.len() {
            return Err(Error::invalid("one loss per awake expert required"));
        }
        if let Some(l) = losses.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::invalid(format!("loss {l} outside [0, 1]")));
        }
        let before: f64 = awake.iter().map(|&j| self.weights[j]).sum();
        let scaled: Vec<f64> = awake
            .iter()
            .zip(losses)
            .map(|(&j, &l)| self.weights[j] * self.beta.powf(l))
            .collect();
        let after: f64 = scaled.iter().sum();
        let norm = before / after;
        for (&j, w) in awake.iter().zip(scaled) {
            self.weights[j] = w * norm;
        }
        Ok(())
    }
}

/// Indices in `universe` of the features true on `instance`.
pub fn awake_features(universe: &[String], instance: &Instance) -> Vec<usize> {
    universe
        .iter()
        .enumerate()
        .filter(|(_, f)| f.as_str() == ALWAYS_TRUE || instance.features.contains(f.as_str()))
        .map(|(j, _)| j)
        .collect()
}

/// Feature universe with [`ALWAYS_TRUE`] first, then the rest sorted.
pub fn feature_universe<'a, I>(features: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a String>,
{
    let rest: BTreeSet<&String> = features.into_iter().filter(|f| *f != ALWAYS_TRUE).collect();
    std::iter::once(ALWAYS_TRUE.to_string())
        .chain(rest.into_iter().cloned())
        .collect()
}

#[derive(Debug, Clone)]
pub struct OgseConfig {
    pub online: OnlineConfig,
    /// Defaults to [`default_beta`] over the universe and horizon.
    pub beta: Option<f64>,
}

impl OgseConfig {
    pub fn new(horizon: usize, cap: Time) -> Self {
        OgseConfig {
            online: OnlineConfig::new(horizon, cap),
            beta: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OgseState {
    experts: SleepingExperts,
    learners: Vec<OnlineState>,
    universe: Vec<String>,
    cap: Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OgseRound {
    pub schedule: Schedule,
    pub chosen: usize,
    pub awake: Vec<usize>,
    pub explored: bool,
    /// Losses fed to the expert layer, aligned with `awake`.
    pub losses: Vec<f64>,
}

impl OgseState {
    pub fn new(k: usize, universe: Vec<String>, config: &OgseConfig) -> Result<Self> {
        if universe.is_empty() {
            return Err(Error::invalid("empty feature universe"));
        }
        let m = universe.len();
        let beta = config.beta.unwrap_or_else(|| default_beta(m, config.online.horizon));
        let learner = OnlineState::new(k, &config.online)?;
        Ok(OgseState {
            experts: SleepingExperts::new(m, beta)?,
            learners: vec![learner; m],
            universe,
            cap: config.online.cap,
        })
    }

    pub fn experts(&self) -> &SleepingExperts {
        &self.experts
    }

    pub fn learner(&self, j: usize) -> &OnlineState {
        &self.learners[j]
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn cap(&self) -> Time {
        self.cap
    }

    pub fn set_gamma(&mut self, gamma: f64) {
        for l in &mut self.learners {
            l.set_gamma(gamma);
        }
    }

    /// Picks the schedule for `instance` and, on an exploring round, feeds
    /// back the instance's profiles to every awake learner. Returns the
    /// executed schedule and bookkeeping; the caller charges the time.
    pub fn step<R: Rng + ?Sized>(&mut self, instance: &Instance, rng: &mut R) -> Result<OgseRound> {
        let awake = awake_features(&self.universe, instance);
        if awake.is_empty() {
            return Err(Error::invalid(format!("instance {} has no true feature", instance.id)));
        }
        let proposals: Vec<Selection> = awake.iter().map(|&j| og_select(&self.learners[j], rng)).collect();
        let chosen = self.experts.select(&awake, rng)?;
        let pos = awake.iter().position(|&j| j == chosen).expect("chosen is awake");
        // the selected learner's coin decides exploration for the round
        let explored = proposals[pos].explore;
        let losses = if explored {
            let mut losses = Vec::with_capacity(awake.len());
            for (&j, sel) in awake.iter().zip(&proposals) {
                learn(&mut self.learners[j], instance, sel);
                losses.push(expected_capped_time(&sel.schedule, instance, self.cap)? / self.cap as f64);
            }
            losses
        } else {
            vec![0.0; awake.len()]
        };
        self.experts.update(&awake, &losses)?;
        Ok(OgseRound {
            schedule: proposals[pos].schedule.clone(),
            chosen,
            awake,
            explored,
            losses,
        })
    }
}

/// One `ogse_step`: selection, optional exploration feedback and the
/// expert update.
pub fn ogse_step<R: Rng + ?Sized>(state: &mut OgseState, instance: &Instance, rng: &mut R) -> Result<OgseRound> {
    state.step(instance, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub feature: String,
    pub n_instances: usize,
    pub charged_time: Time,
    /// Four times the offline greedy cost on this feature's instances.
    pub greedy_benchmark: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerFeatureReport {
    pub rows: Vec<FeatureRow>,
    pub total_charged: Time,
    pub per_round: Vec<Time>,
}

/// Runs the combiner over a stream and totals the charge per feature.
pub fn run_ogse(stream: &[Instance], universe: &[String], config: &OgseConfig, seed: u64) -> Result<PerFeatureReport> {
    if stream.is_empty() {
        return Err(Error::invalid("empty instance stream"));
    }
    let k = heuristic_count(stream);
    let mut state = OgseState::new(k, universe.to_vec(), config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = config.online.cap;
    let mut charged = vec![0 as Time; universe.len()];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); universe.len()];
    let mut per_round = Vec::with_capacity(stream.len());
    for (i, x) in stream.iter().enumerate() {
        let round = state.step(x, &mut rng)?;
        let t = simulate_capped_time(&round.schedule, x, cap, &mut rng);
        per_round.push(t);
        for &j in &round.awake {
            charged[j] += t;
            members[j].push(i);
        }
    }
    let models = config
        .online
        .models
        .clone()
        .unwrap_or_else(|| Models::suspend_resume(k));
    let rows = universe
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let subset: Vec<Instance> = members[j].iter().map(|&i| stream[i].clone()).collect();
            let greedy_cost = if subset.is_empty() {
                0.0
            } else {
                let (g, _) = greedy_schedule(&subset, &models, cap);
                crate::coverage::evaluate(&g, &subset, cap)?
            };
            let bench = 4.0 * greedy_cost;
            Ok(FeatureRow {
                feature: f.clone(),
                n_instances: subset.len(),
                charged_time: charged[j],
                greedy_benchmark: bench,
                ratio: if bench > 0.0 { charged[j] as f64 / bench } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerFeatureReport {
        rows,
        total_charged: per_round.iter().sum(),
        per_round,
    })
}

/// Feature-based selection of a single heuristic per instance.
///
/// Each feature advises the heuristic with the lowest capped average on
/// the training instances where it is true. The expert layer is trained on
/// the training instances with loss `capped time / B` of each awake
/// feature's advice, then frozen.
#[derive(Debug, Clone)]
pub struct FeaturesOnly {
    advice: Vec<Option<HeuristicId>>,
    experts: SleepingExperts,
    universe: Vec<String>,
    cap: Time,
}

impl FeaturesOnly {
    pub fn fit(train: &[Instance], universe: &[String], cap: Time, beta: Option<f64>) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid("features-only needs training instances"));
        }
        let k = heuristic_count(train);
        let m = universe.len();
        let advice: Vec<Option<HeuristicId>> = (0..m)
            .map(|j| {
                let subset: Vec<Instance> = train
                    .iter()
                    .filter(|x| awake_features(universe, x).contains(&j))
                    .cloned()
                    .collect();
                if subset.is_empty() {
                    return None;
                }
                (0..k)
                    .map(HeuristicId)
                    .map(|h| (h, single_heuristic_cost(h, &subset, cap)))
                    .fold(None, |best: Option<(HeuristicId, f64)>, cur| match best {
                        Some(b) if b.1 <= cur.1 => Some(b),
                        _ => Some(cur),
                    })
                    .map(|(h, _)| h)
            })
            .collect();
        let beta = beta.unwrap_or_else(|| default_beta(m, train.len()));
        let mut experts = SleepingExperts::new(m, beta)?;
        for x in train {
            let awake: Vec<usize> = awake_features(universe, x)
                .into_iter()
                .filter(|&j| advice[j].is_some())
                .collect();
            let losses: Vec<f64> = awake
                .iter()
                .map(|&j| solo_capped_time(x.profile(advice[j].expect("advised")), cap) / cap as f64)
                .collect();
            experts.update(&awake, &losses)?;
        }
        Ok(FeaturesOnly {
            advice,
            experts,
            universe: universe.to_vec(),
            cap,
        })
    }

    pub fn advice(&self, j: usize) -> Option<HeuristicId> {
        self.advice[j]
    }

    pub fn experts(&self) -> &SleepingExperts {
        &self.experts
    }

    /// Picks the heuristic to run alone on `instance`.
    pub fn choose<R: Rng + ?Sized>(&self, instance: &Instance, rng: &mut R) -> Result<HeuristicId> {
        let awake: Vec<usize> = awake_features(&self.universe, instance)
            .into_iter()
            .filter(|&j| self.advice[j].is_some())
            .collect();
        let j = self.experts.select(&awake, rng)?;
        Ok(self.advice[j].expect("advised"))
    }

    /// Expected capped time of the chosen heuristic on `instance`.
    pub fn cost<R: Rng + ?Sized>(&self, instance: &Instance, rng: &mut R) -> Result<f64> {
        let h = self.choose(instance, rng)?;
        Ok(solo_capped_time(instance.profile(h), self.cap))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub per_instance: Vec<(String, HeuristicId, f64)>,
    pub average: f64,
}

pub fn features_only_baseline(
    train: &[Instance],
    test: &[Instance],
    universe: &[String],
    cap: Time,
    seed: u64,
) -> Result<BaselineReport> {
    let model = FeaturesOnly::fit(train, universe, cap, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_instance = Vec::with_capacity(test.len());
    for x in test {
        let h = model.choose(x, &mut rng)?;
        per_instance.push((x.id.clone(), h, solo_capped_time(x.profile(h), cap)));
    }
    let w: f64 = test.iter().map(|x| x.weight).sum();
    let average = if w > 0.0 {
        test.iter().zip(&per_instance).map(|(x, p)| x.weight * p.2).sum::<f64>() / w
    } else {
        0.0
    };
    Ok(BaselineReport { per_instance, average })
}
