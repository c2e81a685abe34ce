//! Config-driven experiments: seeded replicas on a bounded worker pool, CSV
//! emission, named checks, and a report whose numeric payload is a pure
//! function of the config.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{
    default_hill_k, hill_estimate, hill_estimate_censored, loglog_slope, moment_diagnostic, survival_slope,
    tail_grid, MomentVerdict, Obs, Side,
};
use crate::excursions::ExcursionRecord;
use crate::lyapunov::DriftScenario;
use crate::rng::{self, tag};
use crate::strip::{classify_regime, sample_return_times, simulate_strip, InducedChainSpec, StripKernel};
use crate::tails::TailLaw;
use crate::walk::{
    envelope_check, max_increment_envelope, passage_time, simulate_walk, Envelope, IncrementLaw, LastExit, Passage,
    StoppingRecord, Trajectory,
};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "HEAVYWALK_WORKERS";

/// What each replica simulates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    Walk { law: IncrementLaw },
    Strip { kernel: StripKernel },
    /// Excursions of the induced chain alone: one excursion per replica,
    /// capped at the horizon.
    Returns { induced: InducedChainSpec },
    /// No simulation; only checks that carry their own inputs.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    /// Median over replicas of the log-log slope lies in `[lo, hi]`.
    SlopeMedian {
        burn_in: u64,
        #[serde(default)]
        side: Side,
        lo: f64,
        hi: f64,
    },
    /// At least `min_clean` replicas have no envelope violation past `burn_in`.
    EnvelopeClean { envelope: Envelope, burn_in: u64, min_clean: usize },
    /// At least `min_clean` replicas satisfy the max-increment lower bound.
    MaxIncrementClean { alpha: f64, eps: f64, burn_in: u64, min_clean: usize },
    /// The fraction of replicas ending below zero (or above, if `!negative`)
    /// is at least `min_fraction`.
    FinalSign { negative: bool, min_fraction: f64 },
    /// Survival slope of `τ_level` lies in `[lo, hi]`.
    PassageSurvival { level: f64, lo: f64, hi: f64 },
    /// Moment diagnostic of `τ_level` at order `p`.
    PassageMoment { level: f64, p: f64, expect: MomentVerdict },
    /// Survival slope of `λ_level` lies in `[lo, hi]`.
    LastExitSurvival { level: f64, lo: f64, hi: f64 },
    /// Hill exponent of the return times lies in `[lo, hi]`.
    ReturnHill { lo: f64, hi: f64 },
    /// Drift-lemma verdicts hold on every grid state above the detected `A`.
    DriftRegion { name: String, scenario: DriftScenario, samples: usize },
    /// `E[Z 1{Z<=z}] + z P[Z>z] = int_0^z P[Z>y] dy` at each `z`.
    TailIdentity { law: TailLaw, z: Vec<f64>, rel_tol: f64 },
    /// Truncated mean over its Karamata asymptote is within `rel_tol` of 1.
    Karamata { law: TailLaw, z: f64, rel_tol: f64 },
    /// `classify_regime` is identical for every bulk drift shift.
    RegimeInvariance { kernel: StripKernel, shifts: Vec<f64> },
}

impl Check {
    pub fn label(&self) -> String {
        match self {
            Check::SlopeMedian { lo, hi, side, .. } => format!("slope_median[{side:?}] in [{lo}, {hi}]"),
            Check::EnvelopeClean { envelope, min_clean, .. } => format!("envelope_clean[{envelope:?}] >= {min_clean}"),
            Check::MaxIncrementClean { min_clean, .. } => format!("max_increment_clean >= {min_clean}"),
            Check::FinalSign { negative, min_fraction } => {
                format!("final_sign[{}] >= {min_fraction}", if *negative { "<0" } else { ">0" })
            }
            Check::PassageSurvival { level, lo, hi } => format!("passage_survival[x={level}] in [{lo}, {hi}]"),
            Check::PassageMoment { level, p, expect } => format!("passage_moment[x={level}, p={p}] = {expect:?}"),
            Check::LastExitSurvival { level, lo, hi } => format!("last_exit_survival[x={level}] in [{lo}, {hi}]"),
            Check::ReturnHill { lo, hi } => format!("return_hill in [{lo}, {hi}]"),
            Check::DriftRegion { name, .. } => format!("drift_region[{name}]"),
            Check::TailIdentity { rel_tol, .. } => format!("tail_identity rel <= {rel_tol:e}"),
            Check::Karamata { z, rel_tol, .. } => format!("karamata[z={z:e}] rel <= {rel_tol}"),
            Check::RegimeInvariance { shifts, .. } => format!("regime_invariance{shifts:?}"),
        }
    }

    fn needs_trajectory(&self) -> bool {
        matches!(
            self,
            Check::SlopeMedian { .. }
                | Check::EnvelopeClean { .. }
                | Check::MaxIncrementClean { .. }
                | Check::FinalSign { .. }
                | Check::LastExitSurvival { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: Model,
    pub horizon: u64,
    pub replicas: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Check every field and every check's parameters; all problems are
    /// reported together.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.replicas < 1 {
            errs.push("replicas: must be at least 1".to_string());
        }
        if self.horizon < 2 {
            errs.push("horizon: must be at least 2".to_string());
        }
        if let Some(l) = self.levels.iter().find(|l| !l.is_finite()) {
            errs.push(format!("levels: {l} is not finite"));
        }
        let is_walk = matches!(self.model, Model::Walk { .. });
        let has_path = matches!(self.model, Model::Walk { .. } | Model::Strip { .. });
        match &self.model {
            Model::Walk { law } => push_err(&mut errs, "model.law", law.validate()),
            Model::Strip { kernel } => push_err(&mut errs, "model.kernel", kernel.validate()),
            Model::Returns { induced } => push_err(&mut errs, "model.induced", induced.validate()),
            Model::Analytic => {}
        }
        for (i, check) in self.checks.iter().enumerate() {
            let at = format!("checks[{i}]");
            let range = |errs: &mut Vec<String>, lo: f64, hi: f64| {
                if !(lo <= hi) {
                    errs.push(format!("{at}: lo must not exceed hi"));
                }
            };
            let level_known = |errs: &mut Vec<String>, level: f64| {
                if !self.levels.contains(&level) {
                    errs.push(format!("{at}: level {level} is not among config levels"));
                }
            };
            if check.needs_trajectory() && !has_path {
                errs.push(format!("{at}: needs a walk or strip model"));
            }
            match check {
                Check::SlopeMedian { lo, hi, .. } => range(&mut errs, *lo, *hi),
                Check::EnvelopeClean { envelope, burn_in, min_clean } => {
                    push_err(&mut errs, &at, envelope.validate());
                    if *burn_in < 3 {
                        errs.push(format!("{at}: burn_in must be at least 3"));
                    }
                    if *min_clean > self.replicas {
                        errs.push(format!("{at}: min_clean exceeds replicas"));
                    }
                }
                Check::MaxIncrementClean { alpha, eps, burn_in, min_clean } => {
                    if !(*alpha > 0.0 && *eps > 0.0) {
                        errs.push(format!("{at}: alpha and eps must be positive"));
                    }
                    if *burn_in < 3 {
                        errs.push(format!("{at}: burn_in must be at least 3"));
                    }
                    if *min_clean > self.replicas {
                        errs.push(format!("{at}: min_clean exceeds replicas"));
                    }
                }
                Check::FinalSign { min_fraction, .. } => {
                    if !(0.0..=1.0).contains(min_fraction) {
                        errs.push(format!("{at}: min_fraction must lie in [0,1]"));
                    }
                }
                Check::PassageSurvival { level, lo, hi } | Check::LastExitSurvival { level, lo, hi } => {
                    range(&mut errs, *lo, *hi);
                    level_known(&mut errs, *level);
                    if !is_walk {
                        errs.push(format!("{at}: stopping times need a walk model"));
                    }
                }
                Check::PassageMoment { level, p, .. } => {
                    level_known(&mut errs, *level);
                    if !(*p >= 0.0) {
                        errs.push(format!("{at}: p must be nonnegative"));
                    }
                    if !is_walk {
                        errs.push(format!("{at}: stopping times need a walk model"));
                    }
                }
                Check::ReturnHill { lo, hi } => {
                    range(&mut errs, *lo, *hi);
                    if !matches!(self.model, Model::Returns { .. }) {
                        errs.push(format!("{at}: needs a returns model"));
                    }
                }
                Check::DriftRegion { scenario, samples, .. } => {
                    push_err(&mut errs, &at, scenario.law.validate());
                    push_err(&mut errs, &at, scenario.spec.validate());
                    if scenario.grid.is_empty() {
                        errs.push(format!("{at}: grid is empty"));
                    }
                    if *samples < crate::lyapunov::MIN_DRIFT_SAMPLES {
                        errs.push(format!("{at}: samples must be at least {}", crate::lyapunov::MIN_DRIFT_SAMPLES));
                    }
                }
                Check::TailIdentity { law, z, rel_tol } => {
                    push_err(&mut errs, &at, law.validate());
                    if z.is_empty() || z.iter().any(|z| !(*z > 0.0)) {
                        errs.push(format!("{at}: z must be nonempty and positive"));
                    }
                    if !(*rel_tol > 0.0) {
                        errs.push(format!("{at}: rel_tol must be positive"));
                    }
                }
                Check::Karamata { law, z, rel_tol } => {
                    push_err(&mut errs, &at, law.karamata_asymptote(*z).map(|_| ()));
                    if !(*rel_tol > 0.0) {
                        errs.push(format!("{at}: rel_tol must be positive"));
                    }
                }
                Check::RegimeInvariance { kernel, shifts } => {
                    push_err(&mut errs, &at, kernel.validate());
                    if shifts.iter().any(|s| s.fract() != 0.0) {
                        errs.push(format!("{at}: shifts must be integers"));
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    fn only_passage(&self) -> bool {
        matches!(self.model, Model::Walk { .. })
            && !self.checks.is_empty()
            && self.checks.iter().all(|c| matches!(c, Check::PassageSurvival { .. } | Check::PassageMoment { .. }))
            && self.output_dir.is_none()
    }
}

fn push_err(errs: &mut Vec<String>, at: &str, r: Result<()>) {
    if let Err(e) = r {
        errs.push(format!("{at}: {e}"));
    }
}

/// Output of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReplicaData {
    Walk { trajectory: Trajectory, stopping: StoppingRecord },
    Passages { passages: Vec<Passage> },
    Strip { trajectory: Trajectory, excursions: ExcursionRecord, on_boundary: Vec<bool> },
}

impl ReplicaData {
    fn trajectory(&self) -> Option<&Trajectory> {
        match self {
            ReplicaData::Walk { trajectory, .. } | ReplicaData::Strip { trajectory, .. } => Some(trajectory),
            ReplicaData::Passages { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replica {
    pub index: usize,
    pub seed: u64,
    pub data: ReplicaData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    pub index: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub label: String,
    pub outcome: Outcome,
    pub detail: String,
    pub metrics: Value,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

/// Everything in a report that depends only on the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub name: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub replicas_requested: usize,
    pub replicas_completed: usize,
    pub aborted: Vec<Abort>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub payload: Payload,
    pub wall_clock_secs: f64,
    pub workers: usize,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.payload.passed
    }

    /// Canonical JSON of the numeric payload; identical across reruns.
    pub fn payload_json(&self) -> String {
        serde_json::to_string(&self.payload).expect("payload serializes")
    }
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Run with the worker count from the environment.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    run_with_workers(config, workers_from_env())
}

pub fn run_with_workers(config: &ExperimentConfig, workers: usize) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Contract(format!("worker pool: {e}")))?;
    let payload = pool.install(|| execute(config))?;
    let report = RunReport { payload, wall_clock_secs: start.elapsed().as_secs_f64(), workers: workers.max(1) };
    if let Some(dir) = &config.output_dir {
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

fn execute(config: &ExperimentConfig) -> Result<Payload> {
    let (replicas, aborted, returns) = match &config.model {
        Model::Returns { induced } => {
            let sample = sample_return_times(induced, config.replicas, config.horizon, config.master_seed)?;
            (Vec::new(), Vec::new(), Some(sample))
        }
        Model::Analytic => (Vec::new(), Vec::new(), None),
        _ => {
            let (ok, bad) = simulate_replicas(config);
            (ok, bad, None)
        }
    };
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
        write_csvs(dir, &replicas, returns.as_ref().map(|s| (s, config.horizon)))?;
    }
    let ctx = Context { config, replicas: &replicas, returns: returns.as_ref() };
    let checks: Vec<CheckResult> = config.checks.iter().enumerate().map(|(i, c)| ctx.evaluate(i, c)).collect();
    let completed = match &returns {
        Some(s) => s.durations.len() + s.capped,
        None if matches!(config.model, Model::Analytic) => config.replicas,
        None => replicas.len(),
    };
    let passed = checks.iter().all(CheckResult::passed);
    Ok(Payload {
        name: config.name.clone(),
        config_hash: config.hash(),
        master_seed: config.master_seed,
        replicas_requested: config.replicas,
        replicas_completed: completed,
        aborted,
        checks,
        passed,
    })
}

fn simulate_replicas(config: &ExperimentConfig) -> (Vec<Replica>, Vec<Abort>) {
    let passage_only = config.only_passage();
    let results: Vec<std::result::Result<Replica, Abort>> = (0..config.replicas)
        .into_par_iter()
        .map(|index| {
            let seed = rng::replica_seed(config.master_seed, index as u64);
            let attempt = catch_unwind(AssertUnwindSafe(|| simulate_one(config, seed, passage_only)));
            match attempt {
                Ok(Ok(data)) => Ok(Replica { index, seed, data }),
                Ok(Err(e)) => Err(Abort { index, seed, reason: e.to_string() }),
                Err(_) => Err(Abort { index, seed, reason: "replica panicked".into() }),
            }
        })
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut bad = Vec::new();
    for r in results {
        match r {
            Ok(rep) => ok.push(rep),
            Err(a) => bad.push(a),
        }
    }
    (ok, bad)
}

fn simulate_one(config: &ExperimentConfig, seed: u64, passage_only: bool) -> Result<ReplicaData> {
    match &config.model {
        Model::Walk { law } if passage_only => {
            let passages = config
                .levels
                .iter()
                .map(|&l| passage_time(law, l, config.horizon, seed))
                .collect::<Result<Vec<_>>>()?;
            Ok(ReplicaData::Passages { passages })
        }
        Model::Walk { law } => {
            let (trajectory, stopping) = simulate_walk(law, config.horizon, seed, &config.levels)?;
            Ok(ReplicaData::Walk { trajectory, stopping })
        }
        Model::Strip { kernel } => {
            let run = simulate_strip(kernel, config.horizon, seed)?;
            Ok(ReplicaData::Strip {
                trajectory: run.trajectory,
                excursions: run.excursions,
                on_boundary: run.on_boundary,
            })
        }
        Model::Returns { .. } | Model::Analytic => unreachable!("no per-replica simulation"),
    }
}

fn write_csvs(dir: &Path, replicas: &[Replica], returns: Option<(&crate::strip::ReturnSample, u64)>) -> Result<()> {
    let mut walk = String::new();
    let mut stopping = String::new();
    let mut strip = String::new();
    let mut excursions = String::new();
    let mut visits = String::new();
    let mut loglog = String::new();
    for rep in replicas {
        let s = rep.seed;
        if let Some(tr) = rep.data.trajectory() {
            for (i, &t) in tr.times.iter().enumerate() {
                if t > 0 {
                    let x = tr.values[i];
                    let _ = writeln!(loglog, "{s},{t},{},{}", (t as f64).ln(), x.abs().max(1.0).ln());
                }
            }
        }
        match &rep.data {
            ReplicaData::Walk { trajectory: tr, stopping: st } => {
                for i in 0..tr.times.len() {
                    let _ = writeln!(
                        walk,
                        "{s},{},{},{},{},{}",
                        tr.times[i], tr.values[i], tr.run_min[i], tr.run_max[i], tr.max_inc[i]
                    );
                }
                for lv in &st.levels {
                    let (tau, tau_flag) = match lv.tau {
                        Passage::Hit(t) => (t.to_string(), ""),
                        Passage::Censored(t) => (t.to_string(), "tau_censored"),
                    };
                    let (lambda, lam_flag) = match lv.lambda {
                        LastExit::Exit(t) => (t.to_string(), ""),
                        LastExit::Unresolved(t) => (t.to_string(), "lambda_unresolved"),
                        LastExit::Never => (String::new(), "lambda_never"),
                    };
                    let flags = [tau_flag, lam_flag].iter().filter(|f| !f.is_empty()).copied().collect::<Vec<_>>();
                    let _ = writeln!(stopping, "{s},{},{tau},{lambda},{}", lv.level, flags.join("|"));
                }
            }
            ReplicaData::Strip { trajectory: tr, excursions: ex, on_boundary } => {
                for ((t, x), &b) in tr.times.iter().zip(&tr.values).zip(on_boundary) {
                    let _ = writeln!(strip, "{s},{t},{},{x}", u8::from(b));
                }
                for (n, &sigma) in ex.sigma.iter().enumerate() {
                    let nu = ex.nu.get(n).map_or(String::new(), |v| v.to_string());
                    let _ = writeln!(excursions, "{s},{n},{sigma},{nu}");
                }
                for &(t, n) in &ex.visits {
                    let _ = writeln!(visits, "{s},{t},{n}");
                }
            }
            ReplicaData::Passages { .. } => {}
        }
    }
    if let Some((sample, cap)) = returns {
        for (n, d) in sample.durations.iter().enumerate() {
            let _ = writeln!(excursions, "0,{n},,{d}");
        }
        for n in 0..sample.capped {
            let _ = writeln!(excursions, "0,{},,{cap}+", sample.durations.len() + n);
        }
    }
    let files = [
        ("walk_checkpoints.csv", "seed,t,x,run_min,run_max,max_inc", walk),
        ("stopping.csv", "seed,level,tau,lambda,censor_flags", stopping),
        ("strip_checkpoints.csv", "seed,t,u_is_boundary,v", strip),
        ("excursions.csv", "seed,n,sigma,nu", excursions),
        ("visits.csv", "seed,t,visits", visits),
        ("loglog.csv", "seed,t,log_t,log_abs_x", loglog),
    ];
    for (name, header, body) in files {
        if body.is_empty() {
            continue;
        }
        let mut f = fs::File::create(dir.join(name))?;
        writeln!(f, "{header}")?;
        f.write_all(body.as_bytes())?;
    }
    Ok(())
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    replicas: &'a [Replica],
    returns: Option<&'a crate::strip::ReturnSample>,
}

fn result(label: String, pass: bool, detail: String, metrics: Value) -> CheckResult {
    CheckResult { label, outcome: if pass { Outcome::Pass } else { Outcome::Fail }, detail, metrics }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl Context<'_> {
    fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.replicas.iter().filter_map(|r| r.data.trajectory())
    }

    fn passages(&self, level: f64) -> Vec<Passage> {
        let idx = self.config.levels.iter().position(|&l| l == level).expect("validated level");
        self.replicas
            .iter()
            .map(|r| match &r.data {
                ReplicaData::Passages { passages } => passages[idx],
                ReplicaData::Walk { stopping, .. } => stopping.levels[idx].tau,
                ReplicaData::Strip { .. } => unreachable!("validated walk model"),
            })
            .collect()
    }

    fn last_exits(&self, level: f64) -> Vec<LastExit> {
        let idx = self.config.levels.iter().position(|&l| l == level).expect("validated level");
        self.replicas
            .iter()
            .filter_map(|r| match &r.data {
                ReplicaData::Walk { stopping, .. } => Some(stopping.levels[idx].lambda),
                _ => None,
            })
            .collect()
    }

    fn evaluate(&self, index: usize, check: &Check) -> CheckResult {
        let label = check.label();
        match check {
            Check::SlopeMedian { burn_in, side, lo, hi } => {
                let mut slopes = Vec::new();
                let mut failed = 0;
                for tr in self.trajectories() {
                    match loglog_slope(tr, *burn_in, *side) {
                        Ok(e) => slopes.push(e.point),
                        Err(_) => failed += 1,
                    }
                }
                if slopes.is_empty() {
                    return result(label, false, "no replica produced a slope".into(), json!({ "failed": failed }));
                }
                let q = |v: &[f64], p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
                let m = median(&mut slopes);
                let pass = *lo <= m && m <= *hi;
                result(
                    label,
                    pass,
                    format!("median slope {m:.4} over {} replicas", slopes.len()),
                    json!({ "median": m, "q25": q(&slopes, 0.25), "q75": q(&slopes, 0.75), "n": slopes.len(), "failed": failed }),
                )
            }
            Check::EnvelopeClean { envelope, burn_in, min_clean } => {
                let counts: Vec<usize> =
                    self.trajectories().map(|tr| envelope_check(tr, envelope, *burn_in).unwrap_or(usize::MAX)).collect();
                clean_result(label, &counts, *min_clean)
            }
            Check::MaxIncrementClean { alpha, eps, burn_in, min_clean } => {
                let counts: Vec<usize> = self
                    .trajectories()
                    .map(|tr| max_increment_envelope(tr, *alpha, *eps, *burn_in).unwrap_or(usize::MAX))
                    .collect();
                clean_result(label, &counts, *min_clean)
            }
            Check::FinalSign { negative, min_fraction } => {
                let n = self.trajectories().count();
                let k = self
                    .trajectories()
                    .filter(|tr| if *negative { tr.final_value() < 0.0 } else { tr.final_value() > 0.0 })
                    .count();
                let frac = if n == 0 { 0.0 } else { k as f64 / n as f64 };
                result(label, n > 0 && frac >= *min_fraction, format!("{k}/{n} replicas"), json!({ "fraction": frac, "n": n }))
            }
            Check::PassageSurvival { level, lo, hi } => {
                let obs: Vec<Obs> = self
                    .passages(*level)
                    .into_iter()
                    .map(|p| match p {
                        Passage::Hit(t) => Obs::exact(t as f64),
                        Passage::Censored(t) => Obs::censored(t as f64),
                    })
                    .collect();
                survival_result(label, &obs, *lo, *hi)
            }
            Check::PassageMoment { level, p, expect } => {
                let passages = self.passages(*level);
                let censored = passages.iter().filter(|p| p.is_censored()).count();
                let samples: Vec<f64> = passages.iter().map(|p| p.time() as f64).collect();
                let got = moment_diagnostic(&samples, *p);
                result(
                    label,
                    got == *expect,
                    format!("{got:?} ({censored}/{} censored at the cap)", samples.len()),
                    json!({ "verdict": got, "censored": censored, "n": samples.len() }),
                )
            }
            Check::LastExitSurvival { level, lo, hi } => {
                let exits = self.last_exits(*level);
                let never = exits.iter().filter(|e| matches!(e, LastExit::Never)).count();
                let obs: Vec<Obs> = exits
                    .into_iter()
                    .filter_map(|e| match e {
                        LastExit::Exit(t) => Some(Obs::exact(t as f64)),
                        LastExit::Unresolved(t) => Some(Obs::censored(t as f64)),
                        LastExit::Never => None,
                    })
                    .collect();
                let mut r = survival_result(label, &obs, *lo, *hi);
                r.metrics["never"] = json!(never);
                r
            }
            Check::ReturnHill { lo, hi } => {
                let Some(sample) = self.returns else {
                    return result(label, false, "no return-time sample".into(), Value::Null);
                };
                let cap = self.config.horizon as f64;
                let mut obs: Vec<Obs> = sample.durations.iter().map(|&d| Obs::exact(d as f64)).collect();
                obs.extend((0..sample.capped).map(|_| Obs::censored(cap)));
                let mut values: Vec<f64> = obs.iter().map(|o| o.value).collect();
                values.sort_unstable_by(|a, b| a.total_cmp(b));
                let distinct = 1 + values.windows(2).filter(|w| w[0] != w[1]).count();
                let k = default_hill_k(obs.len()).min(distinct.saturating_sub(1));
                let uncensored: Vec<f64> = sample.durations.iter().map(|&d| d as f64).collect();
                let excluded = {
                    let mut u = uncensored.clone();
                    u.sort_unstable_by(|a, b| a.total_cmp(b));
                    let d = 1 + u.windows(2).filter(|w| w[0] != w[1]).count();
                    hill_estimate(&uncensored, default_hill_k(u.len()).min(d.saturating_sub(1))).ok()
                };
                match hill_estimate_censored(&obs, k) {
                    Ok(e) => result(
                        label,
                        *lo <= e.point && e.point <= *hi,
                        format!(
                            "Hill {:.4} [{:.4}, {:.4}], k={k}, {} of {} capped; capped-excluded Hill {}",
                            e.point,
                            e.ci_lo,
                            e.ci_hi,
                            sample.capped,
                            obs.len(),
                            excluded.map_or("n/a".into(), |x| format!("{:.4}", x.point))
                        ),
                        json!({ "estimate": e, "capped": sample.capped, "excluded_estimate": excluded }),
                    ),
                    Err(err) => result(label, false, err.to_string(), Value::Null),
                }
            }
            Check::DriftRegion { scenario, samples, .. } => {
                let seed = rng::derive_seed(self.config.master_seed, &[tag::DRIFT, index as u64]);
                match scenario.run(*samples, seed) {
                    Ok(rep) => {
                        let pass = rep.confirmed_above_region();
                        let confirmed =
                            rep.verdicts.iter().filter(|&&v| v != crate::lyapunov::Verdict::Inconclusive).count();
                        result(
                            label,
                            pass,
                            format!(
                                "A at state {:?}; {confirmed}/{} states confirmed",
                                rep.region_state(),
                                rep.grid.len()
                            ),
                            serde_json::to_value(&rep).unwrap_or(Value::Null),
                        )
                    }
                    Err(e) => result(label, false, e.to_string(), Value::Null),
                }
            }
            Check::TailIdentity { law, z, rel_tol } => {
                let errs: Vec<f64> = z
                    .iter()
                    .map(|&z| {
                        let lhs = law.truncated_mean(z) + z * law.tail_prob(z);
                        let rhs = law.tail_integral(z);
                        ((lhs - rhs) / rhs).abs()
                    })
                    .collect();
                let worst = errs.iter().copied().fold(0.0, f64::max);
                result(label, worst <= *rel_tol, format!("max relative error {worst:.3e}"), json!({ "rel_errors": errs }))
            }
            Check::Karamata { law, z, rel_tol } => match law.karamata_asymptote(*z) {
                Ok(asym) => {
                    let ratio = law.truncated_mean(*z) / asym;
                    result(
                        label,
                        (ratio - 1.0).abs() <= *rel_tol,
                        format!("ratio {ratio:.6}"),
                        json!({ "ratio": ratio }),
                    )
                }
                Err(e) => result(label, false, e.to_string(), Value::Null),
            },
            Check::RegimeInvariance { kernel, shifts } => {
                let base = classify_regime(kernel);
                let regimes: Vec<_> = shifts
                    .iter()
                    .map(|&mu| {
                        let mut k = kernel.clone();
                        k.bulk_jump.drift_shift = mu;
                        classify_regime(&k)
                    })
                    .collect();
                let pass = regimes.iter().all(|r| *r == base);
                result(
                    label,
                    pass,
                    format!("base {base:?}; shifted {regimes:?}"),
                    json!({ "base": base, "shifted": regimes }),
                )
            }
        }
    }
}

fn clean_result(label: String, counts: &[usize], min_clean: usize) -> CheckResult {
    let clean = counts.iter().filter(|&&c| c == 0).count();
    let worst = counts.iter().copied().filter(|&c| c != usize::MAX).max().unwrap_or(0);
    result(
        label,
        clean >= min_clean,
        format!("{clean}/{} replicas clean", counts.len()),
        json!({ "clean": clean, "n": counts.len(), "max_violations": worst }),
    )
}

fn survival_result(label: String, obs: &[Obs], lo: f64, hi: f64) -> CheckResult {
    let censored = obs.iter().filter(|o| o.censored).count();
    let fit = tail_grid(obs, 0.5, 20, 12).and_then(|grid| survival_slope(obs, &grid).map(|f| (grid, f)));
    match fit {
        Ok((grid, f)) => {
            let e = f.estimate;
            result(
                label,
                lo <= e.point && e.point <= hi,
                format!("slope {:.4} [{:.4}, {:.4}], {censored}/{} censored", e.point, e.ci_lo, e.ci_hi, obs.len()),
                json!({ "estimate": e, "grid": grid, "censored": censored, "all_moments_finite": f.all_moments_finite }),
            )
        }
        Err(err) => result(
            label,
            false,
            format!("{err} ({censored}/{} censored)", obs.len()),
            json!({ "censored": censored, "n": obs.len() }),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_drift(replicas: usize) -> ExperimentConfig {
        ExperimentConfig {
            name: "constant".into(),
            model: Model::Walk {
                law: IncrementLaw::new(TailLaw::Constant { value: 1.0 }, TailLaw::Zero, 1.0),
            },
            horizon: 4_096,
            replicas,
            master_seed: 7,
            levels: vec![5.0],
            checks: vec![Check::EnvelopeClean {
                envelope: Envelope::Upper { theta: 1.0, phi: 0.0, eps: 0.5 },
                burn_in: 16,
                min_clean: replicas,
            }],
            output_dir: None,
        }
    }

    #[test]
    fn trivial_run_passes() {
        let rep = run_with_workers(&constant_drift(1), 1).unwrap();
        assert_eq!(rep.payload.checks.len(), 1);
        assert!(rep.passed());
        assert_eq!(rep.payload.replicas_completed, 1);
    }

    #[test]
    fn payload_independent_of_workers_and_reruns() {
        let mut c = constant_drift(8);
        c.model = Model::Walk { law: IncrementLaw::new(TailLaw::pareto(0.5), TailLaw::pareto(0.7), 0.5) };
        c.checks.push(Check::SlopeMedian { burn_in: 64, side: Side::Absolute, lo: 0.0, hi: 10.0 });
        let a = run_with_workers(&c, 1).unwrap();
        let b = run_with_workers(&c, 3).unwrap();
        let again = run_with_workers(&c, 1).unwrap();
        assert_eq!(a.payload_json(), b.payload_json());
        assert_eq!(a.payload_json(), again.payload_json());
    }

    #[test]
    fn overflowing_replicas_are_isolated() {
        let mut c = constant_drift(24);
        c.model = Model::Walk { law: IncrementLaw::new(TailLaw::pareto(0.01), TailLaw::Zero, 1.0) };
        c.horizon = 2_000;
        c.checks.clear();
        let rep = run_with_workers(&c, 2).unwrap();
        let p = &rep.payload;
        assert!(!p.aborted.is_empty(), "expected some replica to overflow");
        assert!(p.replicas_completed < 24 && p.replicas_completed > 0);
        assert_eq!(p.replicas_completed + p.aborted.len(), 24);
        let serial = run_with_workers(&c, 1).unwrap();
        assert_eq!(serial.payload_json(), rep.payload_json());
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut c = constant_drift(1);
        c.replicas = 0;
        c.horizon = 1;
        c.checks.push(Check::PassageSurvival { level: 99.0, lo: 1.0, hi: 0.0 });
        let Err(Error::Config(errs)) = c.validate() else { panic!("expected config error") };
        assert!(errs.iter().any(|e| e.starts_with("replicas")));
        assert!(errs.iter().any(|e| e.starts_with("horizon")));
        assert!(errs.iter().any(|e| e.contains("lo must not exceed hi")));
        assert!(errs.iter().any(|e| e.contains("level 99")));
        assert!(run_with_workers(&c, 1).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"name":"x","model":{"kind":"analytic"},"horizon":2,"replicas":1,"master_seed":0,"bogus":1}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn hash_binds_inputs() {
        let a = constant_drift(1);
        let mut b = a.clone();
        b.master_seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn writes_csvs_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = constant_drift(2);
        c.output_dir = Some(dir.path().to_path_buf());
        let rep = run_with_workers(&c, 1).unwrap();
        let walk = fs::read_to_string(dir.path().join("walk_checkpoints.csv")).unwrap();
        assert!(walk.starts_with("seed,t,x,run_min,run_max,max_inc\n"));
        let stop = fs::read_to_string(dir.path().join("stopping.csv")).unwrap();
        let row = stop.lines().nth(1).unwrap();
        // unit up-steps sit at 5 exactly at t = 5 and never return
        assert!(row.ends_with(",5,5,5,"), "{row}");
        let json: RunReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json.payload, rep.payload);
    }

    #[test]
    fn passage_fast_path_matches_full_simulation() {
        let law = IncrementLaw::new(TailLaw::Constant { value: 1.0 }, TailLaw::pareto(0.5), 0.5);
        let mut c = constant_drift(50);
        c.model = Model::Walk { law };
        c.levels = vec![10.0];
        c.checks = vec![Check::PassageMoment { level: 10.0, p: 0.25, expect: MomentVerdict::Converging }];
        assert!(c.only_passage());
        let fast = execute(&c).unwrap();
        c.checks.push(Check::FinalSign { negative: true, min_fraction: 0.0 });
        assert!(!c.only_passage());
        let full = execute(&c).unwrap();
        assert_eq!(fast.checks[0], full.checks[0]);
    }
}
