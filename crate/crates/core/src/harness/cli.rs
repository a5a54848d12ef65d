//! Command-line front end. Every subcommand reads an optional config file,
//! applies flag overrides and writes CSV to stdout or `--out`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConfigFile, ExperimentConfig, Method};
use super::curve::{run_feature_curve, run_training_curve, split};
use super::data::{
    csv_writer, fmt_real, load_anytime, load_features, load_runtimes, load_schedule, write_features, write_runtimes,
    write_schedule, Dataset,
};
use super::synth::{synth_generate, SynthSpec};
use crate::anytime::{expand_instances, nesting_warnings, speedup_factors, ObjectiveSpec};
use crate::coverage::{evaluate, expected_capped_time};
use crate::error::{Error, Result};
use crate::experts::{run_ogse, FeaturesOnly, OgseConfig};
use crate::offline::{greedy_schedule_with, optimal_schedule_oracle_with, GreedyOptions, OracleBudget};
use crate::online::{run_online, OnlineConfig};
use crate::profile::total_weight;
use crate::schedule::ExecutionModel;

#[derive(Debug, Parser)]
#[command(
    name = "portfolio",
    version,
    about = "Learn schedules that interleave heuristics from runtime data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the greedy schedule and print it with each step's density.
    Greedy {
        #[command(flatten)]
        common: Common,
        /// Also write the schedule in reloadable form.
        #[arg(long, value_name = "PATH")]
        save_schedule: Option<PathBuf>,
    },
    /// Expected capped time of a schedule file on every instance.
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive optimal schedule for tiny inputs.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        max_segments: usize,
    },
    /// Online learning over the instances in file order.
    Online {
        #[command(flatten)]
        common: Common,
    },
    /// Feature-aware online learning; per-feature totals.
    Ogse {
        #[command(flatten)]
        common: Common,
    },
    /// Feature-based choice of a single heuristic on a random split.
    FeaturesOnly {
        #[command(flatten)]
        common: Common,
    },
    /// Turn anytime achievement data into weighted runtime data.
    AnytimeExpand {
        #[command(flatten)]
        common: Common,
    },
    /// Leave-one-out speedup of the greedy schedule per objective.
    Speedup {
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic runtimes file from a spec.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Training-size experiment: one row per (method, m, repetition).
    Curve {
        #[command(flatten)]
        common: Common,
        /// Also write per-(method, m) means.
        #[arg(long, value_name = "PATH")]
        summary: Option<PathBuf>,
    },
}

/// Flags shared by every subcommand; each overrides the config key of the
/// same name.
#[derive(Debug, Args, Default)]
struct Common {
    /// TOML key-value file with defaults for any of the flags below.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    features: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    spec: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    schedule: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// sr, restart or mixed.
    #[arg(long)]
    model: Option<String>,
    /// Per-heuristic models for `--model mixed`.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long)]
    cap: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Training sizes for `curve`.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    quantum: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    exploration_c: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Training instances for `features-only`.
    #[arg(long)]
    train: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    objectives: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    objective_weights: Option<Vec<f64>>,
    /// Run on the calling thread only.
    #[arg(long)]
    serial: bool,
}

impl Common {
    fn resolve(&self) -> Result<ConfigFile> {
        let base = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            data: self.data.clone(),
            features: self.features.clone(),
            spec: self.spec.clone(),
            schedule: self.schedule.clone(),
            out: self.out.clone(),
            model: self.model.clone(),
            models: self.models.clone(),
            cap: self.cap,
            seed: self.seed,
            reps: self.reps,
            m: self.m.clone(),
            methods: self.methods.clone(),
            quantum: self.quantum,
            gamma: self.gamma,
            exploration_c: self.exploration_c,
            eta: self.eta,
            slots: self.slots,
            beta: self.beta,
            train: self.train,
            objectives: self.objectives.clone(),
            objective_weights: self.objective_weights.clone(),
            serial: self.serial.then_some(true),
        };
        Ok(base.overlay(flags))
    }
}

fn need<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    v.as_deref()
        .ok_or_else(|| Error::input(format!("--{flag} is required")))
}

fn dataset(cfg: &ConfigFile, with_features: bool) -> Result<Dataset> {
    let mut ds = load_runtimes(need(&cfg.data, "data")?)?;
    if let Some(f) = &cfg.features {
        load_features(f, &mut ds)?;
    } else if with_features {
        log::info!("no --features given; every instance carries only ALL");
    }
    Ok(ds)
}

fn emit(cfg: &ConfigFile, text: &str) -> Result<()> {
    match &cfg.out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn table<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("utf8"))
}

fn online_config(cfg: &ConfigFile, horizon: usize, cap: u64, k: usize) -> Result<OnlineConfig> {
    let mut oc = OnlineConfig::new(horizon, cap);
    oc.slots = cfg.slots;
    oc.gamma = cfg.gamma;
    oc.eta = cfg.eta;
    if let Some(c) = cfg.exploration_c {
        oc.exploration_c = c;
    }
    oc.models = Some(cfg.model_choice()?.resolve(k)?);
    Ok(oc)
}

fn greedy(cfg: &ConfigFile, save: Option<&Path>) -> Result<String> {
    let ds = dataset(cfg, false)?;
    let cap = ds.cap(cfg.cap);
    let models = cfg.model_choice()?.resolve(ds.k())?;
    let mut opts = GreedyOptions::new(cap);
    opts.exec = cfg.exec();
    let (schedule, trace) = greedy_schedule_with(&ds.instances, &models, &opts);
    if let Some(p) = save {
        fs::write(p, write_schedule(&schedule, &ds.portfolio)?)?;
    }
    table(
        &["step", "heuristic", "tau", "density"],
        trace.steps.iter().enumerate().map(|(i, s)| {
            vec![
                (i + 1).to_string(),
                ds.portfolio.name(s.segment.heuristic).to_string(),
                s.segment.tau.to_string(),
                fmt_real(s.density),
            ]
        }),
    )
}

fn eval(cfg: &ConfigFile) -> Result<String> {
    let ds = dataset(cfg, false)?;
    let cap = ds.cap(cfg.cap);
    let default_model = match cfg.model.as_deref() {
        Some("restart") => ExecutionModel::Restart,
        _ => ExecutionModel::SuspendResume,
    };
    let schedule = load_schedule(need(&cfg.schedule, "schedule")?, &ds.portfolio, default_model)?;
    let rows = ds
        .instances
        .iter()
        .map(|x| {
            Ok(vec![
                x.id.clone(),
                fmt_real(x.weight),
                fmt_real(expected_capped_time(&schedule, x, cap)?),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let total = evaluate(&schedule, &ds.instances, cap)?;
    let mut text = table(&["instance_id", "weight", "expected_capped_time"], rows)?;
    text.push_str(&format!(
        "# total: {}\n# average: {}\n",
        fmt_real(total),
        fmt_real(total / total_weight(&ds.instances))
    ));
    Ok(text)
}

fn oracle(cfg: &ConfigFile, max_segments: usize) -> Result<String> {
    let ds = dataset(cfg, false)?;
    let cap = ds.cap(cfg.cap);
    let models = cfg.model_choice()?.resolve(ds.k())?;
    let budget = OracleBudget {
        max_segments: max_segments.max(OracleBudget::default().max_segments),
        ..OracleBudget::default()
    };
    let res = optimal_schedule_oracle_with(&ds.instances, &models, cap, max_segments, budget, cfg.exec())?;
    let mut text = write_schedule(&res.schedule, &ds.portfolio)?;
    text.push_str(&format!("# total_cost: {}\n", fmt_real(res.cost)));
    Ok(text)
}

fn online(cfg: &ConfigFile) -> Result<String> {
    let ds = dataset(cfg, false)?;
    let cap = ds.cap(cfg.cap);
    let oc = online_config(cfg, ds.n(), cap, ds.k())?;
    let r = run_online(&ds.instances, &oc, cfg.seed.unwrap_or(0))?;
    let mut text = table(
        &["round", "charged_time", "exploration_time", "cumulative_avg"],
        r.rows.iter().map(|row| {
            vec![
                row.round.to_string(),
                row.charged_time.to_string(),
                row.exploration_time.to_string(),
                fmt_real(row.cumulative_avg),
            ]
        }),
    )?;
    text.push_str(&format!(
        "# total_charged: {}\n# total_exploration: {}\n# greedy_benchmark: {}\n",
        r.total_charged,
        r.total_exploration,
        fmt_real(r.greedy_benchmark)
    ));
    Ok(text)
}

fn ogse(cfg: &ConfigFile) -> Result<String> {
    let ds = dataset(cfg, true)?;
    let cap = ds.cap(cfg.cap);
    let oc = OgseConfig {
        online: online_config(cfg, ds.n(), cap, ds.k())?,
        beta: cfg.beta,
    };
    let r = run_ogse(&ds.instances, &ds.features, &oc, cfg.seed.unwrap_or(0))?;
    table(
        &["feature", "n_instances", "charged_time", "greedy_benchmark", "ratio"],
        r.rows.iter().map(|row| {
            vec![
                row.feature.clone(),
                row.n_instances.to_string(),
                row.charged_time.to_string(),
                fmt_real(row.greedy_benchmark),
                fmt_real(row.ratio),
            ]
        }),
    )
}

fn features_only(cfg: &ConfigFile) -> Result<String> {
    let ds = dataset(cfg, true)?;
    let cap = ds.cap(cfg.cap);
    let n = ds.n();
    let m = cfg.train.unwrap_or(n / 2);
    if m == 0 || m >= n {
        return Err(Error::input(format!("--train must lie in [1, {n})")));
    }
    let seed = cfg.seed.unwrap_or(0);
    let (train, test) = split(n, m, seed, 0);
    let train: Vec<_> = train.iter().map(|&i| ds.instances[i].clone()).collect();
    let test: Vec<_> = test.iter().map(|&i| ds.instances[i].clone()).collect();
    let model = FeaturesOnly::fit(&train, &ds.features, cap, cfg.beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(test.len());
    let mut total = 0.0;
    for x in &test {
        let h = model.choose(x, &mut rng)?;
        let t = crate::offline::solo_capped_time(x.profile(h), cap);
        total += x.weight * t;
        rows.push(vec![x.id.clone(), ds.portfolio.name(h).to_string(), fmt_real(t)]);
    }
    let mut text = table(&["instance_id", "heuristic", "capped_time"], rows)?;
    text.push_str(&format!("# average: {}\n", fmt_real(total / total_weight(&test))));
    Ok(text)
}

fn objectives(cfg: &ConfigFile, found: Vec<ObjectiveSpec>) -> Result<Vec<ObjectiveSpec>> {
    if let Some(names) = &cfg.objectives {
        let known: Vec<&str> = found.iter().map(|o| o.name.as_str()).collect();
        if names.len() != known.len() || names.iter().zip(&known).any(|(a, b)| a != b) {
            return Err(Error::input(format!(
                "objectives {} do not match the data's {}",
                names.join(","),
                known.join(",")
            )));
        }
    }
    match &cfg.objective_weights {
        None => Ok(found),
        Some(w) if w.len() == found.len() => Ok(found
            .into_iter()
            .zip(w)
            .map(|(o, &w)| ObjectiveSpec::new(o.name, w))
            .collect()),
        Some(w) => Err(Error::input(format!(
            "{} weights for {} objectives",
            w.len(),
            found.len()
        ))),
    }
}

fn anytime_expand(cfg: &ConfigFile) -> Result<String> {
    let a = load_anytime(need(&cfg.data, "data")?)?;
    let objs = objectives(cfg, a.objectives.clone())?;
    for w in nesting_warnings(&a.instances, &objs) {
        log::warn!("{w}");
    }
    let expanded = expand_instances(&a.instances, &objs)?;
    let mut ds = Dataset::new(a.portfolio.clone(), expanded, a.limit)?;
    ds.notes = vec![format!(
        "objective weights: {}",
        objs.iter()
            .map(|o| format!("{}={}", o.name, fmt_real(o.weight)))
            .collect::<Vec<_>>()
            .join(" ")
    )];
    write_runtimes(&ds)
}

fn speedup(cfg: &ConfigFile) -> Result<String> {
    let a = load_anytime(need(&cfg.data, "data")?)?;
    let objs = objectives(cfg, a.objectives.clone())?;
    let cap = cfg.cap.map_or(a.limit, |b| b.clamp(1, a.limit));
    let models = cfg.model_choice()?.resolve(a.portfolio.len())?;
    let rows = speedup_factors(&a.instances, &objs, &models, cap, cfg.exec())?;
    table(
        &["objective", "fastest_heuristic", "numerator", "denominator", "factor"],
        rows.iter().map(|r| {
            vec![
                r.objective.clone(),
                a.portfolio.name(r.fastest_heuristic).to_string(),
                fmt_real(r.numerator),
                fmt_real(r.denominator),
                fmt_real(r.factor),
            ]
        }),
    )
}

fn synth(cfg: &ConfigFile) -> Result<String> {
    let spec = SynthSpec::load(need(&cfg.spec, "spec")?)?;
    let out = synth_generate(&spec, cfg.seed.unwrap_or(0))?;
    if let Some(f) = &cfg.features {
        fs::write(f, write_features(&out.dataset)?)?;
    }
    write_runtimes(&out.dataset)
}

fn curve(cfg: &ConfigFile, summary: Option<&Path>) -> Result<String> {
    let with_features = cfg.features.is_some();
    let ds = dataset(cfg, with_features)?;
    let defaults: &[Method] = if with_features {
        &[Method::Ogse, Method::FeaturesOnly, Method::GreedySr]
    } else {
        &[Method::GreedySr, Method::BestSingle, Method::Parallel]
    };
    let ec = ExperimentConfig::from_file(cfg, defaults)?;
    let report = if with_features {
        run_feature_curve(&ds, &ec)?
    } else {
        run_training_curve(&ds, &ec)?
    };
    if let Some(p) = summary {
        fs::write(p, report.summary_csv()?)?;
    }
    report.to_csv()
}

fn dispatch(cli: Cli) -> Result<()> {
    let (common, text) = match &cli.command {
        Command::Greedy { common, save_schedule } => {
            let cfg = common.resolve()?;
            let t = greedy(&cfg, save_schedule.as_deref())?;
            (cfg, t)
        }
        Command::Eval { common } => {
            let cfg = common.resolve()?;
            let t = eval(&cfg)?;
            (cfg, t)
        }
        Command::Oracle { common, max_segments } => {
            let cfg = common.resolve()?;
            let t = oracle(&cfg, *max_segments)?;
            (cfg, t)
        }
        Command::Online { common } => {
            let cfg = common.resolve()?;
            let t = online(&cfg)?;
            (cfg, t)
        }
        Command::Ogse { common } => {
            let cfg = common.resolve()?;
            let t = ogse(&cfg)?;
            (cfg, t)
        }
        Command::FeaturesOnly { common } => {
            let cfg = common.resolve()?;
            let t = features_only(&cfg)?;
            (cfg, t)
        }
        Command::AnytimeExpand { common } => {
            let cfg = common.resolve()?;
            let t = anytime_expand(&cfg)?;
            (cfg, t)
        }
        Command::Speedup { common } => {
            let cfg = common.resolve()?;
            let t = speedup(&cfg)?;
            (cfg, t)
        }
        Command::Synth { common } => {
            let cfg = common.resolve()?;
            let t = synth(&cfg)?;
            (cfg, t)
        }
        Command::Curve { common, summary } => {
            let cfg = common.resolve()?;
            let t = curve(&cfg, summary.as_deref())?;
            (cfg, t)
        }
    };
    emit(&common, &text)
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit code: 0 on success, 2 for usage and input errors, 1 for
/// anything else.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
        Err(_) => 1,
    }
}
