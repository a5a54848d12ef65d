//! CSV formats: runtimes, features, anytime achievements, schedules.
//!
//! Lines starting with `#` are comments. A `# limit: N` comment declares
//! the collection time limit; `# unit: ...` and any other comment is kept
//! as provenance.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::anytime::{AnytimeInstance, ObjectiveSpec};
use crate::error::{Error, Result};
use crate::experts::{feature_universe, ALWAYS_TRUE};
use crate::profile::{Instance, Portfolio, RuntimeProfile, Sample, Time};
use crate::schedule::{ExecutionModel, Models, RunSegment, Schedule};

pub const RUNTIME_HEADER: [&str; 5] = ["instance_id", "heuristic_id", "sample_index", "time", "censored"];
pub const FEATURE_HEADER: [&str; 3] = ["instance_id", "feature_name", "value"];
pub const ANYTIME_HEADER: [&str; 4] = ["instance_id", "heuristic_id", "objective_name", "time_or_censored"];
pub const SCHEDULE_HEADER: [&str; 4] = ["step", "heuristic", "tau", "model"];

/// Reads a whole file; a failure names the path.
pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

/// Recorded runtimes of a portfolio on a set of instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub portfolio: Portfolio,
    pub instances: Vec<Instance>,
    /// Collection time limit `L`.
    pub limit: Time,
    /// Comment lines from the source file, without the `#`.
    pub notes: Vec<String>,
    /// Ids of instances no heuristic solved within the limit.
    pub discarded: Vec<String>,
    /// Always starts with [`ALWAYS_TRUE`].
    pub features: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, dropping instances nothing solves within `limit`.
    pub fn new(portfolio: Portfolio, instances: Vec<Instance>, limit: Time) -> Result<Self> {
        for x in &instances {
            x.validate(portfolio.len())?;
        }
        let (kept, dropped): (Vec<Instance>, Vec<Instance>) = instances
            .into_iter()
            .partition(|x| x.profiles.iter().any(|p| p.solves_by(limit)));
        let features = feature_universe(kept.iter().flat_map(|x| x.features.iter()));
        Ok(Dataset {
            portfolio,
            instances: kept,
            limit,
            notes: Vec::new(),
            discarded: dropped.into_iter().map(|x| x.id).collect(),
            features,
        })
    }

    pub fn k(&self) -> usize {
        self.portfolio.len()
    }

    pub fn n(&self) -> usize {
        self.instances.len()
    }

    /// Cap `B`: the requested one clamped to the limit, or the limit.
    pub fn cap(&self, requested: Option<Time>) -> Time {
        requested.map_or(self.limit, |b| b.clamp(1, self.limit))
    }
}

fn comments(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|l| l.trim_start().strip_prefix('#'))
        .map(|c| c.trim().to_string())
        .collect()
}

fn declared_limit(notes: &[String], label: &str) -> Result<Option<Time>> {
    for n in notes {
        if let Some(v) = n.strip_prefix("limit:") {
            return v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::input(format!("{label}: bad limit comment '{n}'")));
        }
    }
    Ok(None)
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str], label: &str) -> Result<()> {
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(Error::input(format!(
            "{label}: expected header {}, found {}",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn parse_err(label: &str, pos: Option<&csv::Position>, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: label.to_string(),
        line: pos.map_or(0, |p| p.line()),
        msg: msg.into(),
    }
}

#[derive(Debug, Deserialize)]
struct RuntimeRow {
    instance_id: String,
    heuristic_id: String,
    sample_index: u32,
    time: u64,
    censored: u8,
}

fn intern(order: &mut Vec<String>, index: &mut HashMap<String, usize>, key: &str) -> usize {
    if let Some(&i) = index.get(key) {
        return i;
    }
    order.push(key.to_string());
    index.insert(key.to_string(), order.len() - 1);
    order.len() - 1
}

/// Parses a runtimes CSV. `label` names the source in error messages.
pub fn parse_runtimes(text: &str, label: &str) -> Result<Dataset> {
    let notes = comments(text);
    let declared = declared_limit(&notes, label)?;
    let mut rdr = reader(text);
    check_header(&mut rdr, &RUNTIME_HEADER, label)?;

    let (mut inst_order, mut inst_index) = (Vec::new(), HashMap::new());
    let (mut heur_order, mut heur_index) = (Vec::new(), HashMap::new());
    let mut cells: HashMap<(usize, usize), BTreeMap<u32, Sample>> = HashMap::new();
    let mut censor_limit: Option<Time> = None;
    let mut max_solved: Time = 0;

    for rec in rdr.records() {
        let rec = rec?;
        let pos = rec.position().cloned();
        let row: RuntimeRow = rec
            .deserialize(None)
            .map_err(|e| parse_err(label, pos.as_ref(), e.to_string()))?;
        if row.time == 0 {
            return Err(parse_err(label, pos.as_ref(), "time must be a positive integer"));
        }
        let sample = match row.censored {
            0 => {
                max_solved = max_solved.max(row.time);
                Sample::Solved(row.time)
            }
            1 => {
                match censor_limit {
                    Some(l) if l != row.time => {
                        return Err(parse_err(
                            label,
                            pos.as_ref(),
                            format!("inconsistent censoring limits {l} and {}", row.time),
                        ))
                    }
                    _ => censor_limit = Some(row.time),
                }
                Sample::Censored(row.time)
            }
            other => {
                return Err(parse_err(
                    label,
                    pos.as_ref(),
                    format!("censored must be 0 or 1, got {other}"),
                ))
            }
        };
        let i = intern(&mut inst_order, &mut inst_index, &row.instance_id);
        let h = intern(&mut heur_order, &mut heur_index, &row.heuristic_id);
        let cell = cells.entry((i, h)).or_default();
        if cell.insert(row.sample_index, sample).is_some() {
            return Err(parse_err(
                label,
                pos.as_ref(),
                format!(
                    "duplicate sample {} for ({}, {})",
                    row.sample_index, row.instance_id, row.heuristic_id
                ),
            ));
        }
    }
    if inst_order.is_empty() {
        return Err(Error::input(format!("{label}: no runtime rows")));
    }
    if let (Some(d), Some(c)) = (declared, censor_limit) {
        if d != c {
            return Err(Error::input(format!(
                "{label}: censoring limit {c} differs from declared limit {d}"
            )));
        }
    }
    let limit = declared.or(censor_limit).unwrap_or(max_solved);

    let portfolio = Portfolio::new(heur_order.clone())?;
    let mut instances = Vec::with_capacity(inst_order.len());
    for (i, id) in inst_order.iter().enumerate() {
        let mut profiles = Vec::with_capacity(heur_order.len());
        for (h, hname) in heur_order.iter().enumerate() {
            let cell = cells
                .remove(&(i, h))
                .ok_or_else(|| Error::input(format!("{label}: no samples for ({id}, {hname})")))?;
            let samples: Vec<Sample> = cell.into_values().collect();
            profiles.push(RuntimeProfile::new(&samples)?);
        }
        instances.push(Instance::new(id.clone(), profiles));
    }
    let mut ds = Dataset::new(portfolio, instances, limit)?;
    ds.notes = notes;
    if !ds.discarded.is_empty() {
        log::info!(
            "{label}: discarded {} instance(s) no heuristic solves within {limit}",
            ds.discarded.len()
        );
    }
    Ok(ds)
}

pub fn load_runtimes(path: &Path) -> Result<Dataset> {
    let text = read_text(path)?;
    parse_runtimes(&text, &path.display().to_string())
}

#[derive(Debug, Deserialize)]
struct FeatureRow {
    instance_id: String,
    feature_name: String,
    value: u8,
}

/// Attaches Boolean features; every feature named in the file joins the
/// universe even if it is never true. Rows for discarded instances are
/// ignored.
pub fn parse_features(text: &str, label: &str, dataset: &mut Dataset) -> Result<()> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &FEATURE_HEADER, label)?;
    let index: HashMap<&str, usize> = dataset
        .instances
        .iter()
        .enumerate()
        .map(|(i, x)| (x.id.as_str(), i))
        .collect();
    let discarded: BTreeSet<&str> = dataset.discarded.iter().map(String::as_str).collect();
    let mut named: BTreeSet<String> = BTreeSet::new();
    let mut truths: Vec<(usize, String)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let pos = rec.position().cloned();
        let row: FeatureRow = rec
            .deserialize(None)
            .map_err(|e| parse_err(label, pos.as_ref(), e.to_string()))?;
        if row.value > 1 {
            return Err(parse_err(
                label,
                pos.as_ref(),
                format!("value must be 0 or 1, got {}", row.value),
            ));
        }
        let Some(&i) = index.get(row.instance_id.as_str()) else {
            if discarded.contains(row.instance_id.as_str()) {
                continue;
            }
            return Err(parse_err(
                label,
                pos.as_ref(),
                format!("unknown instance '{}'", row.instance_id),
            ));
        };
        named.insert(row.feature_name.clone());
        if row.value == 1 {
            truths.push((i, row.feature_name));
        }
    }
    for x in &mut dataset.instances {
        x.features.clear();
        x.features.insert(ALWAYS_TRUE.to_string());
    }
    for (i, f) in truths {
        dataset.instances[i].features.insert(f);
    }
    dataset.features = feature_universe(named.iter());
    Ok(())
}

pub fn load_features(path: &Path, dataset: &mut Dataset) -> Result<()> {
    let text = read_text(path)?;
    parse_features(&text, &path.display().to_string(), dataset)
}

/// Achievement data for anytime objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct AnytimeDataset {
    pub portfolio: Portfolio,
    pub objectives: Vec<ObjectiveSpec>,
    pub instances: Vec<AnytimeInstance>,
    pub limit: Time,
}

#[derive(Debug, Deserialize)]
struct AnytimeRow {
    instance_id: String,
    heuristic_id: String,
    objective_name: String,
    time_or_censored: String,
}

/// Parses an anytime CSV. Objectives get uniform weights in order of first
/// appearance; censored cells are `censored` (or `-`).
pub fn parse_anytime(text: &str, label: &str) -> Result<AnytimeDataset> {
    let notes = comments(text);
    let declared = declared_limit(&notes, label)?;
    let mut rdr = reader(text);
    check_header(&mut rdr, &ANYTIME_HEADER, label)?;
    let (mut inst_order, mut inst_index) = (Vec::new(), HashMap::new());
    let (mut heur_order, mut heur_index) = (Vec::new(), HashMap::new());
    let (mut obj_order, mut obj_index) = (Vec::new(), HashMap::new());
    let mut cells: HashMap<(usize, usize, usize), Option<Time>> = HashMap::new();
    let mut max_time = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let pos = rec.position().cloned();
        let row: AnytimeRow = rec
            .deserialize(None)
            .map_err(|e| parse_err(label, pos.as_ref(), e.to_string()))?;
        let t = match row.time_or_censored.as_str() {
            "censored" | "-" => None,
            s => {
                let t: Time = s
                    .parse()
                    .map_err(|_| parse_err(label, pos.as_ref(), format!("bad time '{s}'")))?;
                if t == 0 {
                    return Err(parse_err(label, pos.as_ref(), "time must be a positive integer"));
                }
                max_time = max_time.max(t);
                Some(t)
            }
        };
        let i = intern(&mut inst_order, &mut inst_index, &row.instance_id);
        let h = intern(&mut heur_order, &mut heur_index, &row.heuristic_id);
        let o = intern(&mut obj_order, &mut obj_index, &row.objective_name);
        if cells.insert((i, h, o), t).is_some() {
            return Err(parse_err(
                label,
                pos.as_ref(),
                "duplicate (instance, heuristic, objective) row",
            ));
        }
    }
    if inst_order.is_empty() {
        return Err(Error::input(format!("{label}: no anytime rows")));
    }
    let limit = declared.unwrap_or(max_time).max(1);
    let portfolio = Portfolio::new(heur_order.clone())?;
    let mut instances = Vec::with_capacity(inst_order.len());
    for (i, id) in inst_order.iter().enumerate() {
        let mut achievements = Vec::with_capacity(obj_order.len());
        for (o, oname) in obj_order.iter().enumerate() {
            let mut row = Vec::with_capacity(heur_order.len());
            for (h, hname) in heur_order.iter().enumerate() {
                let cell = cells.get(&(i, h, o)).ok_or_else(|| {
                    Error::input(format!(
                        "{label}: missing achievement data for ({id}, {hname}, {oname})"
                    ))
                })?;
                row.push(match cell {
                    Some(t) => RuntimeProfile::deterministic(*t),
                    None => RuntimeProfile::never(limit),
                });
            }
            achievements.push(row);
        }
        instances.push(AnytimeInstance::new(id.clone(), achievements));
    }
    Ok(AnytimeDataset {
        portfolio,
        objectives: ObjectiveSpec::uniform(obj_order),
        instances,
        limit,
    })
}

pub fn load_anytime(path: &Path) -> Result<AnytimeDataset> {
    let text = read_text(path)?;
    parse_anytime(&text, &path.display().to_string())
}

/// Decimal with nine fractional digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.9}")
}

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Schedule CSV. The first line is a `# models:` comment carrying every
/// heuristic's model so a reload reproduces the schedule exactly.
pub fn write_schedule(schedule: &Schedule, portfolio: &Portfolio) -> Result<String> {
    let mut buf = Vec::new();
    let models: Vec<String> = portfolio
        .ids()
        .map(|h| format!("{}={}", portfolio.name(h), schedule.model_of(h)))
        .collect();
    write!(buf, "# models: ")?;
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(&models)?;
        w.flush()?;
    }
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(SCHEDULE_HEADER)?;
        for (i, seg) in schedule.segments().iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                portfolio.name(seg.heuristic).to_string(),
                seg.tau.to_string(),
                schedule.model_of(seg.heuristic).to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("utf8"))
}

#[derive(Debug, Deserialize)]
struct ScheduleRow {
    step: usize,
    heuristic: String,
    tau: Time,
    model: String,
}

/// Reads a schedule CSV against `portfolio`. Heuristics absent from both
/// the `# models:` comment and the rows default to `default_model`.
pub fn parse_schedule(
    text: &str,
    label: &str,
    portfolio: &Portfolio,
    default_model: ExecutionModel,
) -> Result<Schedule> {
    let mut models = Models::uniform(portfolio.len(), default_model);
    let mut fixed = vec![false; portfolio.len()];
    for n in comments(text) {
        if let Some(spec) = n.strip_prefix("models:") {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_reader(spec.trim().as_bytes());
            let record = rdr.records().next().transpose()?.unwrap_or_default();
            for pair in record.iter() {
                let (name, m) = pair
                    .rsplit_once('=')
                    .ok_or_else(|| Error::input(format!("{label}: bad models entry '{pair}'")))?;
                let h = portfolio
                    .lookup(name)
                    .ok_or_else(|| Error::input(format!("{label}: unknown heuristic '{name}'")))?;
                models.set(h, m.parse()?);
                fixed[h.0] = true;
            }
        }
    }
    let mut rdr = reader(text);
    check_header(&mut rdr, &SCHEDULE_HEADER, label)?;
    let mut segments = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let pos = rec.position().cloned();
        let row: ScheduleRow = rec
            .deserialize(None)
            .map_err(|e| parse_err(label, pos.as_ref(), e.to_string()))?;
        if row.step != segments.len() + 1 {
            return Err(parse_err(
                label,
                pos.as_ref(),
                format!("expected step {}, got {}", segments.len() + 1, row.step),
            ));
        }
        let h = portfolio
            .lookup(&row.heuristic)
            .ok_or_else(|| parse_err(label, pos.as_ref(), format!("unknown heuristic '{}'", row.heuristic)))?;
        if row.tau == 0 {
            return Err(parse_err(label, pos.as_ref(), "tau must be >= 1"));
        }
        let m: ExecutionModel = row.model.parse()?;
        if fixed[h.0] && models.get(h) != m {
            return Err(parse_err(
                label,
                pos.as_ref(),
                format!("model of {} changes mid-schedule", row.heuristic),
            ));
        }
        models.set(h, m);
        fixed[h.0] = true;
        segments.push(RunSegment::new(h, row.tau));
    }
    Schedule::new(segments, models)
}

pub fn load_schedule(path: &Path, portfolio: &Portfolio, default_model: ExecutionModel) -> Result<Schedule> {
    let text = read_text(path)?;
    parse_schedule(&text, &path.display().to_string(), portfolio, default_model)
}

/// Runtimes CSV for a dataset (solved and censored rows, `# limit:` first).
pub fn write_runtimes(ds: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    writeln!(buf, "# limit: {}", ds.limit)?;
    for n in ds.notes.iter().filter(|n| !n.starts_with("limit:")) {
        writeln!(buf, "# {n}")?;
    }
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(RUNTIME_HEADER)?;
        for x in &ds.instances {
            for h in ds.portfolio.ids() {
                for (i, s) in x.profile(h).samples().enumerate() {
                    let (t, c) = match s {
                        Sample::Solved(t) => (t, 0),
                        Sample::Censored(l) => (l, 1),
                    };
                    w.write_record([
                        x.id.as_str(),
                        ds.portfolio.name(h),
                        &i.to_string(),
                        &t.to_string(),
                        &c.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("utf8"))
}

/// Features CSV: one row per (instance, non-`ALL` feature) with 0/1.
pub fn write_features(ds: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(FEATURE_HEADER)?;
        for x in &ds.instances {
            for f in ds.features.iter().filter(|f| f.as_str() != ALWAYS_TRUE) {
                let v = if x.features.contains(f) { "1" } else { "0" };
                w.write_record([x.id.as_str(), f.as_str(), v])?;
            }
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("utf8"))
}
