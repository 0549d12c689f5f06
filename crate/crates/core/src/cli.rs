//! Command-line front end: run configuration, the four commands and their
//! CSV/JSON outputs.
//!
//! Output files (all `.`-decimal, LF-terminated, UTF-8):
//!
//! * `results.csv`: `method,reward,seed,m_c,solved_all,smooth,t_in_1..t_in_16`,
//!   one row per learning experiment; `t_in_k` is empty unless problem `k`
//!   met the goal.
//! * `summary.csv`: `method,reward,repetitions,seed_first,seed_last,S,S_c,
//!   mean_m_c,mean_m_c_solved,mean_t_in,S_test,S_c_test,mean_t_in_test`.
//!   `mean_m_c` averages over smooth runs, `mean_m_c_solved` over solved ones.
//! * `weights/<seed>.json`: the learned weight vector as a JSON array.
//! * `evaluation.csv`: `weights,problem,leading_speed,following_speed_init,
//!   distance_init,l1,l2,outcome,passed,smooth,t_in`.
//! * `evaluation_summary.csv`: `weights,problems,passed,smooth,passed_all,smooth_all,mean_t_in`.
//! * `trace.csv`: `t,distance,speed,y1` (`y1` empty on the final state).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::car::{self, Problem, RewardConfig, RewardVariant};
use crate::error::{Error, Result};
use crate::experiment::{
    self, aggregate, evaluate_smooth_results, evaluate_solutions, run_evaluation_episode, run_experiments, Method,
    MethodConfig, SolutionEvaluation, SolutionStats,
};
use crate::fuzzy::{ShapeConfig, CAR_RULE_COUNT};
use crate::gradient::{LearnParams, PolicyParams, WeightVector};
use crate::oracle;

#[derive(Debug, Parser)]
#[command(name = "fuzzypg", version, about = "Policy-gradient learning of fuzzy rule weights for car speed control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run repeated learning experiments for one (method, reward) cell.
    Learn {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of experiments (seeds seed .. seed + reps - 1).
        #[arg(long)]
        reps: Option<u32>,
    },
    /// Evaluate weight files on the 697 test problems.
    Evaluate {
        /// A weight file or a directory of `*.json` weight files.
        weights: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Deterministic rollout of one weight file on one problem.
    Trace {
        weights: PathBuf,
        /// Training problem number, 1..=16.
        #[arg(long, conflicts_with = "spec")]
        problem: Option<usize>,
        /// Explicit problem `leading,following,distance,l1,l2` (km/h, km/h, m, m, m).
        #[arg(long)]
        spec: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the analytic gradients and minimizer against numerical oracles.
    Validate {
        /// Random configurations to check.
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long, value_parser = parse_reward)]
    pub reward: Option<RewardVariant>,
    #[arg(long, env = "FUZZYPG_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_reward(s: &str) -> std::result::Result<RewardVariant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Everything a command needs; the JSON form of `--config`. Missing fields
/// take the defaults below, and `lambda: null` means the method's default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub reward_variant: RewardVariant,
    pub repetitions: u32,
    pub base_seed: u64,
    pub temperature: f64,
    pub temperature_smoothed: f64,
    pub lambda: Option<f64>,
    pub learn: LearnParams,
    pub reward: RewardConfig,
    pub shape: ShapeConfig,
    pub discrete_evaluation: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PolicyParams::default();
        RunConfig {
            method: Method::I,
            reward_variant: RewardVariant::R1,
            repetitions: 200,
            base_seed: 0,
            temperature: p.temperature,
            temperature_smoothed: p.temperature_smoothed,
            lambda: None,
            learn: LearnParams::default(),
            reward: RewardConfig::default(),
            shape: ShapeConfig::default(),
            discrete_evaluation: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Usage(format!("bad config {}: {e}", path.display())))
    }

    /// Config file (if any) overlaid with explicit flags.
    pub fn resolve(common: &CommonArgs) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some(m) = common.method {
            cfg.method = m;
        }
        if let Some(r) = common.reward {
            cfg.reward_variant = r;
        }
        if let Some(s) = common.seed {
            cfg.base_seed = s;
        }
        if let Some(o) = &common.out {
            cfg.out_dir = o.clone();
        }
        Ok(cfg)
    }

    pub fn method_config(&self) -> Result<MethodConfig> {
        let mut mc = MethodConfig::new(self.method, self.reward_variant);
        mc.policy.temperature = self.temperature;
        mc.policy.temperature_smoothed = self.temperature_smoothed;
        if let Some(l) = self.lambda {
            mc.policy.lambda = l;
        }
        mc.learn = self.learn;
        mc.reward = self.reward;
        mc.shape = self.shape.clone();
        mc.discrete_evaluation = self.discrete_evaluation;
        mc.validate().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(mc)
    }
}

/// Runs a parsed command; returns the process exit status.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Learn { common, reps } => {
            let mut cfg = RunConfig::resolve(&common)?;
            if let Some(r) = reps {
                cfg.repetitions = r;
            }
            let stats = with_jobs(common.jobs, || cmd_learn(&cfg))?;
            println!("{}", describe(&stats));
            Ok(0)
        }
        Command::Evaluate { weights, common } => {
            let cfg = RunConfig::resolve(&common)?;
            let evals = with_jobs(common.jobs, || cmd_evaluate(&weights, &cfg))?;
            let passed = evals.iter().filter(|(_, e)| e.passed_all()).count();
            let smooth = evals.iter().filter(|(_, e)| e.smooth_all()).count();
            println!("{} weight sets: S' = {passed}, S'_c = {smooth}", evals.len());
            Ok(0)
        }
        Command::Trace { weights, problem, spec, common } => {
            let cfg = RunConfig::resolve(&common)?;
            let problem = parse_problem(problem, spec.as_deref())?;
            let trace = cmd_trace(&weights, &problem, &cfg)?;
            println!("{:?}", trace.outcome);
            Ok(0)
        }
        Command::Validate { cases, common } => {
            let cfg = RunConfig::resolve(&common)?;
            let checks = with_jobs(common.jobs, || oracle::validation_suite(cases, cfg.base_seed))?;
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                println!(
                    "{} {}: max abs {:.3e}, max rel {:.3e}, tolerance {:.0e}, {} cases",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.report.max_abs_error,
                    c.report.max_rel_error,
                    c.tolerance,
                    c.report.cases_checked
                );
            }
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(0) => Err(Error::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {n} workers: {e}")))?
            .install(f),
    }
}

fn describe(s: &SolutionStats) -> String {
    let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
    format!(
        "method {} / {}: {} runs, S = {}, S_c = {}, mean m_c = {}, mean t_in = {}, S' = {}, S'_c = {}",
        s.method.name(),
        s.reward_variant.name(),
        s.repetitions,
        s.solved,
        s.smooth,
        f(s.mean_m_c),
        f(s.mean_t_in),
        s.test_solved.unwrap_or(0),
        s.test_smooth.unwrap_or(0)
    )
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Learning experiments for one cell plus test-set evaluation of the smooth
/// runs. Writes `results.csv`, `summary.csv`, `config.json` and
/// `weights/<seed>.json` under `cfg.out_dir`.
pub fn cmd_learn(cfg: &RunConfig) -> Result<SolutionStats> {
    if cfg.repetitions == 0 {
        return Err(Error::Usage("--reps must be at least 1".into()));
    }
    let mc = cfg.method_config()?;
    let results = run_experiments(&mc, cfg.base_seed, cfg.repetitions)?;
    let mut stats = aggregate(mc.method, mc.reward_variant, &results);
    let evals = evaluate_smooth_results(&mc, &results, &car::evaluation_problems())?;
    evaluate_solutions(&mut stats, &evals);

    let out = &cfg.out_dir;
    let weights_dir = out.join("weights");
    create_dir(&weights_dir)?;
    write_json(&out.join("config.json"), cfg)?;

    let n_problems = results.first().map_or(0, |r| r.t_in.len());
    let mut w = csv_writer(&out.join("results.csv"))?;
    let mut header: Vec<String> =
        ["method", "reward", "seed", "m_c", "solved_all", "smooth"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=n_problems).map(|k| format!("t_in_{k}")));
    w.write_record(&header)?;
    for r in &results {
        let mut row = vec![
            r.method.name().to_string(),
            r.reward_variant.name().to_string(),
            r.seed.to_string(),
            r.m_c.to_string(),
            r.solved_all.to_string(),
            r.smooth.to_string(),
        ];
        row.extend(r.t_in.iter().map(|t| opt(*t)));
        w.write_record(&row)?;
        write_json(&weights_dir.join(format!("{}.json", r.seed)), &r.final_theta)?;
    }
    w.flush().map_err(|source| Error::Io { path: out.join("results.csv"), source })?;

    let mut w = csv_writer(&out.join("summary.csv"))?;
    w.write_record([
        "method",
        "reward",
        "repetitions",
        "seed_first",
        "seed_last",
        "S",
        "S_c",
        "mean_m_c",
        "mean_m_c_solved",
        "mean_t_in",
        "S_test",
        "S_c_test",
        "mean_t_in_test",
    ])?;
    w.write_record([
        stats.method.name().to_string(),
        stats.reward_variant.name().to_string(),
        stats.repetitions.to_string(),
        stats.seed_first.to_string(),
        stats.seed_last.to_string(),
        stats.solved.to_string(),
        stats.smooth.to_string(),
        opt(stats.mean_m_c),
        opt(stats.mean_m_c_solved),
        opt(stats.mean_t_in),
        opt(stats.test_solved),
        opt(stats.test_smooth),
        opt(stats.mean_t_in_test),
    ])?;
    w.flush().map_err(|source| Error::Io { path: out.join("summary.csv"), source })?;
    Ok(stats)
}

/// Reads a weight file: a JSON array of 20 non-negative weights summing to 1.
pub fn load_weights(path: &Path) -> Result<WeightVector> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let raw: Vec<f64> =
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    let invalid = |reason: String| Error::InvalidFile { path: path.to_path_buf(), reason };
    if raw.len() != CAR_RULE_COUNT {
        return Err(invalid(format!("expected {CAR_RULE_COUNT} weights, found {}", raw.len())));
    }
    WeightVector::from_normalized(raw).map_err(|e| invalid(e.to_string()))
}

/// A weight file, or every `*.json` file in a directory (sorted by name).
pub fn weight_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(Error::Usage(format!("no such weight file or directory: {}", path.display())));
    }
    let entries = fs::read_dir(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut files = Vec::new();
    for entry in entries {
        let p = entry.map_err(|source| Error::Io { path: path.to_path_buf(), source })?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == "json") {
            files.push(p);
        }
    }
    if files.is_empty() {
        return Err(Error::Usage(format!("no weight files in {}", path.display())));
    }
    files.sort();
    Ok(files)
}

/// Evaluates every weight set on the 697 test problems; writes
/// `evaluation.csv` and `evaluation_summary.csv`.
pub fn cmd_evaluate(weights: &Path, cfg: &RunConfig) -> Result<Vec<(String, SolutionEvaluation)>> {
    use rayon::prelude::*;

    let mc = cfg.method_config()?;
    let files = weight_files(weights)?;
    let thetas = files.iter().map(|f| load_weights(f)).collect::<Result<Vec<_>>>()?;
    let problems = car::evaluation_problems();
    let names: Vec<String> =
        files.iter().map(|f| f.file_stem().map_or(String::new(), |s| s.to_string_lossy().into_owned())).collect();
    let evals = thetas
        .par_iter()
        .map(|t| experiment::evaluate_weights(&mc, t, &problems))
        .collect::<Result<Vec<_>>>()?;

    create_dir(&cfg.out_dir)?;
    let mut w = csv_writer(&cfg.out_dir.join("evaluation.csv"))?;
    w.write_record([
        "weights",
        "problem",
        "leading_speed",
        "following_speed_init",
        "distance_init",
        "l1",
        "l2",
        "outcome",
        "passed",
        "smooth",
        "t_in",
    ])?;
    let mut s = csv_writer(&cfg.out_dir.join("evaluation_summary.csv"))?;
    s.write_record(["weights", "problems", "passed", "smooth", "passed_all", "smooth_all", "mean_t_in"])?;
    for (name, eval) in names.iter().zip(&evals) {
        let mut t_sum = 0.0;
        let mut t_n = 0usize;
        for row in &eval.rows {
            let p = &problems[row.index];
            if let Some(t) = row.t_in() {
                t_sum += t as f64;
                t_n += 1;
            }
            w.write_record([
                name.clone(),
                (row.index + 1).to_string(),
                p.leading_speed.to_string(),
                p.following_speed_init.to_string(),
                p.distance_init.to_string(),
                p.l1.to_string(),
                p.l2.to_string(),
                outcome_name(&row.outcome).to_string(),
                row.passed.to_string(),
                row.smooth.to_string(),
                opt(row.t_in()),
            ])?;
        }
        s.write_record([
            name.clone(),
            eval.rows.len().to_string(),
            eval.rows.iter().filter(|r| r.passed).count().to_string(),
            eval.rows.iter().filter(|r| r.passed && r.smooth).count().to_string(),
            eval.passed_all().to_string(),
            eval.smooth_all().to_string(),
            opt((t_n > 0).then(|| t_sum / t_n as f64)),
        ])?;
    }
    w.flush().map_err(|source| Error::Io { path: cfg.out_dir.join("evaluation.csv"), source })?;
    s.flush().map_err(|source| Error::Io { path: cfg.out_dir.join("evaluation_summary.csv"), source })?;
    Ok(names.into_iter().zip(evals).collect())
}

fn outcome_name(o: &car::Outcome) -> &'static str {
    match o {
        car::Outcome::Success { .. } => "success",
        car::Outcome::LateSuccess { .. } => "late_success",
        car::Outcome::NeverEntered { .. } => "never_entered",
        car::Outcome::Collision { .. } => "collision",
        car::Outcome::TooFar { .. } => "too_far",
    }
}

/// `--problem K` picks training problem K; `--spec` gives the five numbers.
pub fn parse_problem(index: Option<usize>, spec: Option<&str>) -> Result<Problem> {
    match (index, spec) {
        (Some(k), None) => {
            let all = car::learning_problems();
            if k == 0 || k > all.len() {
                return Err(Error::Usage(format!("--problem must be in 1..={}, got {k}", all.len())));
            }
            Ok(all[k - 1])
        }
        (None, Some(s)) => {
            let v: Vec<f64> = s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Usage(format!("bad problem spec `{s}`: {e}")))?;
            if v.len() != 5 {
                return Err(Error::Usage(format!(
                    "problem spec needs leading,following,distance,l1,l2; got {} numbers",
                    v.len()
                )));
            }
            Problem::new(v[0], v[1], v[2], v[3], v[4]).map_err(|e| Error::Usage(e.to_string()))
        }
        _ => Err(Error::Usage("give exactly one of --problem or --spec".into())),
    }
}

/// Deterministic rollout written to `trace.csv` under `cfg.out_dir`.
pub fn cmd_trace(weights: &Path, problem: &Problem, cfg: &RunConfig) -> Result<car::EpisodeTrace> {
    let mc = cfg.method_config()?;
    let theta = load_weights(weights)?;
    let model = mc.model_for(problem)?;
    let trace = run_evaluation_episode(&mc, &model, problem, &theta)?;
    create_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join("trace.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["t", "distance", "speed", "y1"])?;
    for (t, d, v, y) in trace.rows() {
        w.write_record([t.to_string(), d.to_string(), v.to_string(), opt(y)])?;
    }
    w.flush().map_err(|source| Error::Io { path, source })?;
    Ok(trace)
}
