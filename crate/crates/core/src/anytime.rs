//! Anytime objectives as weighted fictitious instances.
//!
//! An anytime heuristic reaches a sequence of objectives on an instance
//! (say: feasible, optimal, optimality proven). Splitting every instance
//! into one fictitious instance per objective, whose "solve time" is the
//! time the objective is reached, turns the weighted average time to reach
//! each objective into the plain decision-problem cost, so the greedy and
//! online machinery applies unchanged.

use std::collections::BTreeSet;

use crate::coverage::expected_capped_time;
use crate::error::{Error, Result};
use crate::offline::{greedy_schedule, solo_capped_time};
use crate::par::{self, Exec};
use crate::profile::{HeuristicId, Instance, RuntimeProfile, Time};
use crate::schedule::Models;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub name: String,
    pub weight: f64,
}

impl ObjectiveSpec {
    pub fn new(name: impl Into<String>, weight: f64) -> Self {
        ObjectiveSpec {
            name: name.into(),
            weight,
        }
    }

    /// `k` objectives of weight `1/k` each.
    pub fn uniform<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Vec<ObjectiveSpec> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let w = 1.0 / names.len() as f64;
        names.into_iter().map(|n| ObjectiveSpec::new(n, w)).collect()
    }
}

/// An instance with achievement-time profiles per objective and heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct AnytimeInstance {
    pub id: String,
    pub weight: f64,
    /// `achievements[objective][heuristic]`
    pub achievements: Vec<Vec<RuntimeProfile>>,
    pub features: BTreeSet<String>,
}

impl AnytimeInstance {
    pub fn new(id: impl Into<String>, achievements: Vec<Vec<RuntimeProfile>>) -> Self {
        AnytimeInstance {
            id: id.into(),
            weight: 1.0,
            achievements,
            features: BTreeSet::new(),
        }
    }

    /// Deterministic achievement times, `times[objective][heuristic]`.
    pub fn deterministic(id: impl Into<String>, times: &[Vec<Option<Time>>], limit: Time) -> Self {
        let achievements = times
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| match t {
                        Some(t) => RuntimeProfile::deterministic(*t),
                        None => RuntimeProfile::never(limit),
                    })
                    .collect()
            })
            .collect();
        AnytimeInstance::new(id, achievements)
    }
}

/// Fictitious instance id for objective `name` of instance `id`.
pub fn fictitious_id(id: &str, objective: &str) -> String {
    format!("{id}::{objective}")
}

/// One fictitious instance per (instance, objective), instance-major,
/// weighted by `weight(x) * weight(objective)`. With a single objective the
/// original ids are kept.
pub fn expand_instances(instances: &[AnytimeInstance], objectives: &[ObjectiveSpec]) -> Result<Vec<Instance>> {
    if objectives.is_empty() {
        return Err(Error::invalid("at least one objective is required"));
    }
    if let Some(o) = objectives.iter().find(|o| o.weight.is_nan() || o.weight <= 0.0) {
        return Err(Error::invalid(format!("objective {} has non-positive weight", o.name)));
    }
    let k = instances
        .first()
        .and_then(|x| x.achievements.first())
        .map_or(0, Vec::len);
    let mut out = Vec::with_capacity(instances.len() * objectives.len());
    for x in instances {
        if x.achievements.len() != objectives.len() {
            return Err(Error::input(format!(
                "instance {} has achievement data for {} objectives, expected {}",
                x.id,
                x.achievements.len(),
                objectives.len()
            )));
        }
        for (o, profiles) in objectives.iter().zip(&x.achievements) {
            if profiles.len() != k {
                return Err(Error::input(format!(
                    "instance {} objective {} is missing heuristic data",
                    x.id, o.name
                )));
            }
            let id = if objectives.len() == 1 {
                x.id.clone()
            } else {
                fictitious_id(&x.id, &o.name)
            };
            out.push(Instance {
                id,
                weight: x.weight * o.weight,
                profiles: profiles.clone(),
                features: x.features.clone(),
            });
        }
    }
    Ok(out)
}

/// Instances where some heuristic reaches a later objective strictly before
/// an earlier one, for deterministic data. Warnings only.
pub fn nesting_warnings(instances: &[AnytimeInstance], objectives: &[ObjectiveSpec]) -> Vec<String> {
    let mut out = Vec::new();
    for x in instances {
        let k = x.achievements.first().map_or(0, Vec::len);
        for h in 0..k {
            let firsts: Vec<Option<Time>> = x
                .achievements
                .iter()
                .map(|row| row[h].solved_times().first().copied())
                .collect();
            for i in 1..firsts.len() {
                if let (Some(a), Some(b)) = (firsts[i - 1], firsts[i]) {
                    if b < a {
                        out.push(format!(
                            "{}: h{h} reaches {} at {b} before {} at {a}",
                            x.id,
                            objectives[i].name,
                            objectives[i - 1].name
                        ));
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupRow {
    pub objective: String,
    pub fastest_heuristic: HeuristicId,
    /// Fastest single heuristic's average capped time on this objective.
    pub numerator: f64,
    /// Leave-one-out greedy schedule's average capped time.
    pub denominator: f64,
    pub factor: f64,
}

/// Per-objective speedup of the leave-one-out greedy schedule over the
/// fastest single heuristic for that objective.
pub fn speedup_factors(
    instances: &[AnytimeInstance],
    objectives: &[ObjectiveSpec],
    models: &Models,
    cap: Time,
    exec: Exec,
) -> Result<Vec<SpeedupRow>> {
    if instances.len() < 2 {
        return Err(Error::invalid("leave-one-out needs at least two instances"));
    }
    if cap < 1 {
        return Err(Error::invalid("cap B must be >= 1"));
    }
    let expanded = expand_instances(instances, objectives)?;
    let n_obj = objectives.len();
    let k = models.len();
    let total_w: f64 = instances.iter().map(|x| x.weight).sum();

    // held_out[x][o]: capped time of the greedy schedule fitted without x
    let held_out: Vec<Result<Vec<f64>>> = par::map_range(exec, instances.len(), |i| {
        let train: Vec<Instance> = expanded
            .iter()
            .enumerate()
            .filter(|(j, _)| j / n_obj != i)
            .map(|(_, x)| x.clone())
            .collect();
        let (g, _) = greedy_schedule(&train, models, cap);
        (0..n_obj)
            .map(|o| expected_capped_time(&g, &expanded[i * n_obj + o], cap))
            .collect()
    });
    let held_out = held_out.into_iter().collect::<Result<Vec<_>>>()?;

    let rows = objectives
        .iter()
        .enumerate()
        .map(|(o, spec)| {
            let (fastest, numerator) = (0..k)
                .map(|h| {
                    let avg = instances
                        .iter()
                        .map(|x| x.weight * solo_capped_time(&x.achievements[o][h], cap))
                        .sum::<f64>()
                        / total_w;
                    (HeuristicId(h), avg)
                })
                .fold(None, |best: Option<(HeuristicId, f64)>, cur| match best {
                    Some(b) if b.1 <= cur.1 => Some(b),
                    _ => Some(cur),
                })
                .expect("non-empty portfolio");
            let denominator = instances
                .iter()
                .zip(&held_out)
                .map(|(x, row)| x.weight * row[o])
                .sum::<f64>()
                / total_w;
            SpeedupRow {
                objective: spec.name.clone(),
                fastest_heuristic: fastest,
                numerator,
                denominator,
                factor: numerator / denominator,
            }
        })
        .collect();
    Ok(rows)
}
