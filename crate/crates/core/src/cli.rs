//! `validate`, `sweep` and `train` subcommands.
//!
//! Every command assembles its CSV in memory and writes it only after all
//! computation succeeded, so a failing run leaves no partial output.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or config error,
//! 3 training divergence, 4 report not authoritative (fewer than 10^4 trials).

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimation::PilotPlan;
use crate::oracle::{
    estimation_rows, reference_instance, sinr_rows, transmission_rows, verify_moment_identities, write_report_csv,
    IdentityReport, ReferenceCase, MIN_AUTHORITATIVE_TRIALS,
};
use crate::perf::{energy_efficiency, evaluate, PerfOptions, SinrModel};
use crate::ris::{amplitude_gain, RisState};
use crate::rng::{substream, PHASE_STREAM};
use crate::sac::{train_with_progress, write_learning_curve, Checkpoint, OptimizerKind, RisEnv, SacConfig};
use crate::scenario::{NetworkRealization, Scenario};

pub const EXIT_VALIDATION_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;
pub const EXIT_NON_AUTHORITATIVE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "ris-cellfree", version, about = "Active-RIS cell-free massive MIMO uplink toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every closed form against Monte Carlo and write the report CSV.
    Validate(ValidateArgs),
    /// Evaluate closed forms over a parameter grid described by a TOML file.
    Sweep(SweepArgs),
    /// Train the SAC phase optimizer.
    Train(TrainArgs),
}

/// Built-in instances usable in place of `--config`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reference {
    Orthogonal,
    SharedPilot,
    Passive,
    Moments,
    Surface16,
    Toy,
}

impl From<Reference> for ReferenceCase {
    fn from(r: Reference) -> ReferenceCase {
        match r {
            Reference::Orthogonal => ReferenceCase::Orthogonal,
            Reference::SharedPilot => ReferenceCase::SharedPilot,
            Reference::Passive => ReferenceCase::Passive,
            Reference::Moments => ReferenceCase::Moments,
            Reference::Surface16 => ReferenceCase::Surface16,
            Reference::Toy => ReferenceCase::Toy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    #[default]
    Exact,
    Printed,
}

impl From<ModelArg> for SinrModel {
    fn from(m: ModelArg) -> SinrModel {
        match m {
            ModelArg::Exact => SinrModel::Exact,
            ModelArg::Printed => SinrModel::Printed,
        }
    }
}

/// RIS phase choice: `equal`, `random` or `trained:<checkpoint>`.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseChoice {
    Equal,
    Random,
    Trained(PathBuf),
}

impl std::str::FromStr for PhaseChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "equal" => Ok(PhaseChoice::Equal),
            "random" => Ok(PhaseChoice::Random),
            _ => match s.strip_prefix("trained:") {
                Some(p) if !p.is_empty() => Ok(PhaseChoice::Trained(PathBuf::from(p))),
                _ => Err(format!("expected equal, random or trained:<path>, got `{s}`")),
            },
        }
    }
}

impl PhaseChoice {
    /// Phases for an `n`-element surface; random draws come from the phase stream of `seed`.
    fn resolve(&self, n: usize, seed: u64, checkpoint: Option<&Checkpoint>) -> Result<Vec<f64>> {
        match self {
            PhaseChoice::Equal => Ok(vec![0.0; n]),
            PhaseChoice::Random => Ok(RisState::random(n, 1.0, &mut substream(seed, PHASE_STREAM)).phases().to_vec()),
            PhaseChoice::Trained(path) => {
                let ck = checkpoint.ok_or_else(|| Error::Checkpoint(format!("{} not loaded", path.display())))?;
                if ck.best_phases.len() != n {
                    return Err(Error::Checkpoint(format!(
                        "checkpoint has {} phases, surface has {n} elements",
                        ck.best_phases.len()
                    )));
                }
                Ok(ck.best_phases.clone())
            }
        }
    }

    fn load_checkpoint(&self) -> Result<Option<Checkpoint>> {
        match self {
            PhaseChoice::Trained(path) => Checkpoint::load(path).map(Some),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Scenario TOML; a layout is drawn from it with `--seed`.
    #[arg(long, conflicts_with = "reference")]
    pub config: Option<PathBuf>,
    /// Built-in instance used when no config is given.
    #[arg(long, value_enum, default_value = "moments")]
    pub reference: Reference,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Report CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Phases for config-based instances (reference instances carry their own).
    #[arg(long, default_value = "random")]
    pub phases: PhaseChoice,
    /// Accepted for interface uniformity; the report checks SINR, not SE.
    #[arg(long)]
    pub prelog: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Replaces the seed list of the sweep file with a single seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the output path of the sweep file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the phase choice of the sweep file (default `equal`).
    #[arg(long)]
    pub phases: Option<PhaseChoice>,
    #[arg(long)]
    pub prelog: bool,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Scenario TOML (may carry a `[sac]` table); a layout is drawn with `--seed`.
    #[arg(long, conflicts_with = "reference")]
    pub config: Option<PathBuf>,
    /// Built-in instance used when no config is given.
    #[arg(long, value_enum, default_value = "surface16")]
    pub reference: Reference,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for the checkpoint, learning curve and summary.
    #[arg(long, default_value = "train_out")]
    pub out: PathBuf,
    #[arg(long)]
    pub prelog: bool,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub episode_len: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub hidden_units: Option<usize>,
    #[arg(long)]
    pub buffer_capacity: Option<usize>,
    #[arg(long)]
    pub adam: bool,
    /// Suppress per-episode progress on standard error.
    #[arg(long)]
    pub quiet: bool,
}

/// Sweep description read from TOML.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Scenario TOML, relative to the sweep file. Defaults apply when absent.
    #[serde(default)]
    pub base_config: Option<PathBuf>,
    /// Fixed scenario keys applied to the base before sweeping.
    #[serde(default)]
    pub overrides: std::collections::BTreeMap<String, f64>,
    /// Scenario key or alias to vary.
    pub parameter: String,
    pub values: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// CSV path, relative to the sweep file. Standard output when absent.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub phases: Option<String>,
    #[serde(default)]
    pub prelog: bool,
    #[serde(default)]
    pub model: ModelArg,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<SweepSpec> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| Error::Config(format!("sweep spec: {e}")))?;
        if spec.values.is_empty() {
            return Err(Error::Config("sweep spec: `values` is empty".into()));
        }
        if spec.seeds.is_empty() {
            return Err(Error::Config("sweep spec: `seeds` is empty".into()));
        }
        // The parameter must name a scenario field.
        Scenario::default().set_param(&spec.parameter, spec.values[0])?;
        Ok(spec)
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_USAGE,
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Train(a) => cmd_train(&a),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, bytes)?;
        }
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn gain_for(net: &NetworkRealization) -> f64 {
    amplitude_gain(&net.scenario, &net.alpha_bar).value
}

/// Layout, RIS state and pilots for validation.
fn validation_instance(a: &ValidateArgs) -> Result<(NetworkRealization, RisState, PilotPlan)> {
    match &a.config {
        Some(path) => {
            let scenario = Scenario::load(path)?;
            let net = NetworkRealization::sample(&scenario, a.seed)?;
            let checkpoint = a.phases.load_checkpoint()?;
            let phases = a.phases.resolve(net.num_elements(), a.seed, checkpoint.as_ref())?;
            let ris = RisState::new(phases, gain_for(&net));
            let plan = PilotPlan::for_scenario(&scenario);
            Ok((net, ris, plan))
        }
        None => Ok(reference_instance(a.reference.into())),
    }
}

/// Full identity report for one instance.
pub fn validation_report(net: &NetworkRealization, ris: &RisState, plan: &PilotPlan, trials: u64, seed: u64) -> IdentityReport {
    let mut report = verify_moment_identities(net, ris, plan, trials, seed);
    report.extend(estimation_rows(net, ris, plan, trials, seed));
    report.extend(transmission_rows(net, ris, plan, trials, seed));
    report.extend(sinr_rows(net, ris, plan, trials, seed));
    report
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<u8> {
    if a.trials == 0 {
        return Err(Error::InvalidArgument("--trials must be positive".into()));
    }
    let (net, ris, plan) = validation_instance(a)?;
    let report = validation_report(&net, &ris, &plan, a.trials, a.seed);
    let mut buf = Vec::new();
    write_report_csv(&report, &mut buf, &net.scenario.config_hash(), a.seed)?;
    emit(a.out.as_deref(), &buf)?;
    for row in report.failures() {
        eprintln!(
            "FAIL {}: empirical {:e} analytic {:e} rel_err {:.4} > {}",
            row.name, row.empirical, row.analytic, row.rel_err, row.tolerance
        );
    }
    if !report.authoritative {
        eprintln!(
            "warning: {} trials < {MIN_AUTHORITATIVE_TRIALS}; report is not authoritative",
            a.trials
        );
        return Ok(EXIT_NON_AUTHORITATIVE);
    }
    let failed = report.failures().count();
    eprintln!("{} identities checked, {failed} failed", report.rows.len());
    Ok(if failed == 0 { 0 } else { EXIT_VALIDATION_FAILED })
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param_value: f64,
    pub seed: u64,
    pub sum_se: f64,
    pub nmse_mean: f64,
    pub a: f64,
    pub ee: f64,
    pub infeasible: bool,
    pub config_hash: String,
}

/// Evaluates `scenario` at one seed with the given phase choice.
pub fn sweep_point(
    scenario: &Scenario,
    param_value: f64,
    seed: u64,
    phases: &PhaseChoice,
    checkpoint: Option<&Checkpoint>,
    opts: PerfOptions,
) -> Result<SweepRow> {
    let net = NetworkRealization::sample(scenario, seed)?;
    let gain = amplitude_gain(scenario, &net.alpha_bar);
    let ris = RisState::new(phases.resolve(net.num_elements(), seed, checkpoint)?, gain.value);
    let plan = PilotPlan::for_scenario(scenario);
    let ev = evaluate(&net, &ris, &plan, opts);
    Ok(SweepRow {
        param_value,
        seed,
        sum_se: ev.sum_se,
        nmse_mean: ev.nmse_mean(),
        a: gain.value,
        ee: energy_efficiency(scenario, ev.sum_se, &net.alpha_bar, gain.value),
        infeasible: gain.exhausted(),
        config_hash: scenario.config_hash(),
    })
}

/// All rows of a sweep, ordered by value then seed.
pub fn run_sweep(spec: &SweepSpec, base: &Scenario, phases: &PhaseChoice, opts: PerfOptions) -> Result<Vec<SweepRow>> {
    let checkpoint = phases.load_checkpoint()?;
    let mut base = base.clone();
    for (key, value) in &spec.overrides {
        base.set_param(key, *value)?;
    }
    let mut points = Vec::with_capacity(spec.values.len() * spec.seeds.len());
    for &v in &spec.values {
        let mut s = base.clone();
        s.set_param(&spec.parameter, v)?;
        s.validate()?;
        for &seed in &spec.seeds {
            points.push((s.clone(), v, seed));
        }
    }
    let mut rows = points
        .par_iter()
        .map(|(s, v, seed)| sweep_point(s, *v, *seed, phases, checkpoint.as_ref(), opts))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|x, y| x.param_value.total_cmp(&y.param_value).then(x.seed.cmp(&y.seed)));
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], parameter: &str, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["parameter", "param_value", "seed", "sum_se", "nmse_mean", "a", "ee", "infeasible", "config_hash"])?;
    for r in rows {
        w.write_record([
            parameter.to_string(),
            r.param_value.to_string(),
            r.seed.to_string(),
            r.sum_se.to_string(),
            r.nmse_mean.to_string(),
            r.a.to_string(),
            r.ee.to_string(),
            r.infeasible.to_string(),
            r.config_hash.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<u8> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| Error::Config(format!("{}: {e}", a.config.display())))?;
    let mut spec = SweepSpec::from_toml_str(&text)?;
    let dir = a.config.parent().unwrap_or(Path::new(""));
    let base = match &spec.base_config {
        Some(p) => Scenario::load(dir.join(p))?,
        None => Scenario::default(),
    };
    if let Some(seed) = a.seed {
        spec.seeds = vec![seed];
    }
    let phases = match (&a.phases, &spec.phases) {
        (Some(p), _) => p.clone(),
        (None, Some(s)) => s.parse().map_err(Error::Config)?,
        (None, None) => PhaseChoice::Equal,
    };
    let opts = PerfOptions {
        model: a.model.unwrap_or(spec.model).into(),
        prelog: a.prelog || spec.prelog,
    };
    let rows = run_sweep(&spec, &base, &phases, opts)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &spec.parameter, &mut buf)?;
    let out = a.out.clone().or_else(|| spec.out.as_ref().map(|p| dir.join(p)));
    emit(out.as_deref(), &buf)?;
    let infeasible = rows.iter().filter(|r| r.infeasible).count();
    if infeasible > 0 {
        eprintln!("warning: {infeasible} rows exceed the RIS power budget (a = 0)");
    }
    Ok(0)
}

/// Best closed-form sum SE over `points` evenly spaced phases of a one-element surface.
pub fn grid_optimum(env: &RisEnv, points: usize) -> (f64, f64) {
    (0..points)
        .map(|i| {
            let p = std::f64::consts::TAU * i as f64 / points as f64;
            (p, env.sum_se(&[p]))
        })
        .fold((0.0, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best })
}

fn train_config(a: &TrainArgs, config_text: Option<&str>) -> Result<SacConfig> {
    let mut cfg = match config_text {
        Some(t) => SacConfig::from_toml_str(t)?,
        None => SacConfig::default(),
    };
    if let Some(v) = a.episodes {
        cfg.episodes = v;
    }
    if let Some(v) = a.episode_len {
        cfg.episode_len = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.batch {
        cfg.batch = v;
    }
    if let Some(v) = a.hidden_units {
        cfg.hidden_units = v;
    }
    if let Some(v) = a.buffer_capacity {
        cfg.buffer_capacity = v;
    }
    if a.adam {
        cfg.optimizer = OptimizerKind::Adam;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_train(a: &TrainArgs) -> Result<u8> {
    let opts = PerfOptions {
        prelog: a.prelog,
        ..PerfOptions::default()
    };
    let (mut env, cfg) = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let scenario = Scenario::from_toml_str(&text)?;
            let cfg = train_config(a, Some(&text))?;
            let net = NetworkRealization::sample(&scenario, a.seed)?;
            (RisEnv::new(net, opts)?, cfg)
        }
        None => {
            let (net, ris, _) = reference_instance(a.reference.into());
            (RisEnv::with_gain(net, ris.a(), opts)?, train_config(a, None)?)
        }
    };
    let hash = {
        let mut h = Sha256::new();
        h.update(serde_json::to_string(&env.network().scenario)?);
        h.update(serde_json::to_string(&cfg)?);
        h.update([u8::from(opts.prelog)]);
        hex::encode(h.finalize())
    };
    let quiet = a.quiet;
    let result = train_with_progress(&mut env, &cfg, a.seed, |ep, r| {
        if !quiet {
            eprintln!("episode {ep}: cumulative reward {r:.6}");
        }
    });
    let outcome = match result {
        Ok(o) => o,
        Err(e @ Error::Divergence { .. }) => {
            std::fs::create_dir_all(&a.out)?;
            let path = a.out.join("divergence.txt");
            std::fs::write(&path, format!("{e}\nconfig_hash={hash}\nseed={}\n", a.seed))?;
            eprintln!("diagnostics written to {}", path.display());
            return Err(e);
        }
        Err(e) => return Err(e),
    };

    let mut curve = Vec::new();
    write_learning_curve(&outcome.curve, &mut curve)?;
    let curve = tag_csv(&curve, &hash, a.seed);

    let mut summary = String::from("kind,sum_se,config_hash,seed\n");
    let _ = writeln!(summary, "baseline_equal,{},{hash},{}", outcome.baseline_sum_se, a.seed);
    println!("baseline (equal phases) sum SE: {:.6}", outcome.baseline_sum_se);
    if outcome.best_phases.is_some() {
        let _ = writeln!(summary, "trained_best,{},{hash},{}", outcome.best_sum_se, a.seed);
        println!("trained best sum SE: {:.6}", outcome.best_sum_se);
    }
    if env.action_dim() == 1 {
        let (phase, best) = grid_optimum(&env, 360);
        let _ = writeln!(summary, "grid_optimum,{best},{hash},{}", a.seed);
        println!("360-point grid optimum sum SE: {best:.6} at phase {phase:.4}");
    }

    std::fs::create_dir_all(&a.out)?;
    std::fs::write(a.out.join("learning_curve.csv"), curve)?;
    std::fs::write(a.out.join("summary.csv"), summary)?;
    if let Some(phases) = outcome.best_phases {
        let ck = Checkpoint::new(&outcome.agent, env.gain(), phases, outcome.best_sum_se);
        std::fs::write(a.out.join("checkpoint.json"), ck.to_json()?)?;
    }
    Ok(0)
}

/// Appends `config_hash` and `seed` columns to a CSV produced in memory.
fn tag_csv(csv_bytes: &[u8], hash: &str, seed: u64) -> Vec<u8> {
    let text = String::from_utf8_lossy(csv_bytes);
    let mut out = String::with_capacity(text.len() + 80);
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            let _ = writeln!(out, "{line},config_hash,seed");
        } else {
            let _ = writeln!(out, "{line},{hash},{seed}");
        }
    }
    out.into_bytes()
}
