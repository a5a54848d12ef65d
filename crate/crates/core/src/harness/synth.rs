//! Synthetic runtime data with cluster structure.
//!
//! Every instance belongs to one cluster. A cluster fixes, per heuristic, a
//! median runtime and a probability of never solving. Each (instance,
//! heuristic) pair draws its own median from a log-normal around the
//! cluster's, and each recorded run draws a log-normal around that.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use super::data::{read_text, Dataset};
use crate::error::{Error, Result};
use crate::offline::single_heuristic_cost;
use crate::profile::{HeuristicId, Instance, Portfolio, RuntimeProfile, Sample, Time};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub name: String,
    /// Relative frequency; shares need not sum to one.
    #[serde(default = "one")]
    pub share: f64,
    /// Median runtime per heuristic.
    pub median: Vec<f64>,
    /// Probability per heuristic that it never solves an instance.
    #[serde(default)]
    pub fail: Vec<f64>,
    /// Probability per heuristic that a single run never finishes.
    #[serde(default)]
    pub run_fail: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_samples() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub instances: usize,
    /// Collection limit `L`; longer runs are recorded as censored.
    pub limit: Time,
    /// Heuristic names; defaults to `h0, h1, ...`.
    #[serde(default)]
    pub heuristics: Vec<String>,
    /// Runs recorded per (instance, heuristic).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Log-normal sigma of an instance's median around its cluster's.
    #[serde(default)]
    pub instance_noise: f64,
    /// Log-normal sigma of a single run around the instance median.
    #[serde(default)]
    pub run_noise: f64,
    /// Prefix of the cluster feature names.
    #[serde(default = "default_prefix")]
    pub feature_prefix: String,
    #[serde(rename = "cluster")]
    pub clusters: Vec<ClusterSpec>,
}

fn default_prefix() -> String {
    "cluster_".to_string()
}

impl SynthSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SynthSpec = toml::from_str(text).map_err(|e| Error::input(format!("synth spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        SynthSpec::parse(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
    }

    pub fn k(&self) -> usize {
        self.clusters.first().map_or(0, |c| c.median.len())
    }

    fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.instances == 0 || self.limit == 0 || self.samples == 0 {
            return Err(Error::input("instances, limit and samples must be positive"));
        }
        if self.clusters.is_empty() || k == 0 {
            return Err(Error::input("at least one cluster with one heuristic is required"));
        }
        if !self.heuristics.is_empty() && self.heuristics.len() != k {
            return Err(Error::input(format!(
                "{} heuristic names for {k} medians",
                self.heuristics.len()
            )));
        }
        if !(self.instance_noise >= 0.0 && self.run_noise >= 0.0) {
            return Err(Error::input("noise must be non-negative"));
        }
        for c in &self.clusters {
            let sized = |v: &Vec<f64>| v.is_empty() || v.len() == k;
            if c.median.len() != k || !sized(&c.fail) || !sized(&c.run_fail) {
                return Err(Error::input(format!("cluster {}: expected {k} entries", c.name)));
            }
            if c.share.is_nan() || c.share <= 0.0 || c.median.iter().any(|m| m.is_nan() || *m <= 0.0) {
                return Err(Error::input(format!(
                    "cluster {}: share and medians must be positive",
                    c.name
                )));
            }
            if c.fail.iter().chain(&c.run_fail).any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::input(format!(
                    "cluster {}: fail probabilities must lie in [0, 1]",
                    c.name
                )));
            }
        }
        Ok(())
    }

    fn portfolio(&self) -> Result<Portfolio> {
        if self.heuristics.is_empty() {
            Ok(Portfolio::anonymous(self.k()))
        } else {
            Portfolio::new(self.heuristics.clone())
        }
    }

    pub fn feature_name(&self, cluster: usize) -> String {
        format!("{}{}", self.feature_prefix, self.clusters[cluster].name)
    }
}

/// Generated dataset plus the empirical best single heuristic per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub dataset: Dataset,
    /// Cluster index of each kept instance.
    pub cluster_of: Vec<usize>,
    pub best: Vec<Option<HeuristicId>>,
}

fn lognormal<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    n.sample(rng).exp()
}

fn to_time(v: f64) -> Time {
    v.round().max(1.0) as Time
}

pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.k();
    let total_share: f64 = spec.clusters.iter().map(|c| c.share).sum();
    let width = spec.instances.to_string().len();

    let mut instances = Vec::with_capacity(spec.instances);
    let mut clusters = Vec::with_capacity(spec.instances);
    for i in 0..spec.instances {
        let mut u = rng.random::<f64>() * total_share;
        let mut c = spec.clusters.len() - 1;
        for (j, cl) in spec.clusters.iter().enumerate() {
            if u < cl.share {
                c = j;
                break;
            }
            u -= cl.share;
        }
        let cl = &spec.clusters[c];
        let profiles = (0..k)
            .map(|h| {
                let fails = cl.fail.get(h).is_some_and(|&p| rng.random::<f64>() < p);
                let median = cl.median[h] * lognormal(&mut rng, spec.instance_noise);
                let samples: Vec<Sample> = (0..spec.samples)
                    .map(|_| {
                        let t = to_time(median * lognormal(&mut rng, spec.run_noise));
                        let run_fails = cl.run_fail.get(h).is_some_and(|&p| rng.random::<f64>() < p);
                        if fails || run_fails || t > spec.limit {
                            Sample::Censored(spec.limit)
                        } else {
                            Sample::Solved(t)
                        }
                    })
                    .collect();
                RuntimeProfile::new(&samples)
            })
            .collect::<Result<Vec<_>>>()?;
        let x = Instance::new(format!("x{i:0width$}"), profiles).with_features([spec.feature_name(c)]);
        instances.push(x);
        clusters.push(c);
    }

    let ids: Vec<String> = instances.iter().map(|x| x.id.clone()).collect();
    let mut dataset = Dataset::new(spec.portfolio()?, instances, spec.limit)?;
    dataset.features = crate::experts::feature_universe(
        &(0..spec.clusters.len())
            .map(|c| spec.feature_name(c))
            .collect::<Vec<_>>(),
    );
    for x in &mut dataset.instances {
        x.features.insert(crate::experts::ALWAYS_TRUE.to_string());
    }
    let cluster_of: Vec<usize> = ids
        .iter()
        .zip(&clusters)
        .filter(|(id, _)| !dataset.discarded.contains(id))
        .map(|(_, &c)| c)
        .collect();

    let best: Vec<Option<HeuristicId>> = (0..spec.clusters.len())
        .map(|c| {
            let members: Vec<Instance> = dataset
                .instances
                .iter()
                .zip(&cluster_of)
                .filter(|(_, &cc)| cc == c)
                .map(|(x, _)| x.clone())
                .collect();
            if members.is_empty() {
                return None;
            }
            (0..k)
                .map(|h| (h, single_heuristic_cost(HeuristicId(h), &members, spec.limit)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(h, _)| HeuristicId(h))
        })
        .collect();

    let mut notes = vec![format!("synthetic: seed {seed}, {} clusters", spec.clusters.len())];
    for (c, b) in best.iter().enumerate() {
        let name = &spec.clusters[c].name;
        match b {
            Some(h) => notes.push(format!("best {name}: {}", dataset.portfolio.name(*h))),
            None => notes.push(format!("best {name}: none")),
        }
    }
    if !dataset.discarded.is_empty() {
        notes.push(format!("discarded: {}", dataset.discarded.len()));
    }
    dataset.notes = notes;
    Ok(SynthOutput {
        dataset,
        cluster_of,
        best,
    })
}
