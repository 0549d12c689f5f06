//! The learning loop (stochastic learning episodes on the 16 training
//! problems, then a deterministic check of all 16, repeated until solved or
//! out of budget) and the statistics collected over many seeded runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::car::{self, EpisodeTrace, Outcome, Problem, RewardConfig, RewardVariant, EPISODE_LENGTH};
use crate::error::{Error, Result};
use crate::fuzzy::{build_car_rulebase, FuzzyPolicy, OutputGrid, ShapeConfig};
use crate::gradient::{
    deterministic_output, eligibility_base_at, eligibility_smoothed_at, sample_index, smoothed_policy, update_weights,
    EligibilityTrace, LearnParams, PolicyParams, PolicyState, WeightVector,
};

/// Output before the first step of an episode ("doing nothing").
pub const INITIAL_PREVIOUS_OUTPUT: f64 = 0.0;

/// Speed tolerance (km/h) for the two end-of-episode smoothness conditions.
pub const SMOOTHNESS_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Sample from the rule-energy policy; act on its gravity center.
    I,
    /// Sample around the gravity center without smoothing; act on it.
    Ii,
    /// Gravity center with the time-smoothing penalty.
    Iii,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::I, Method::Ii, Method::Iii];

    pub fn name(&self) -> &'static str {
        match self {
            Method::I => "i",
            Method::Ii => "ii",
            Method::Iii => "iii",
        }
    }

    /// Whether learning uses the smoothed (gravity-center) policy.
    pub fn is_smoothed(&self) -> bool {
        !matches!(self, Method::I)
    }

    pub fn default_lambda(&self) -> f64 {
        match self {
            Method::Iii => 0.06,
            _ => 0.0,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" | "1" => Ok(Method::I),
            "ii" | "2" => Ok(Method::Ii),
            "iii" | "3" => Ok(Method::Iii),
            _ => Err(Error::Usage(format!("unknown method `{s}` (expected i, ii or iii)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    pub reward_variant: RewardVariant,
    pub policy: PolicyParams,
    pub learn: LearnParams,
    pub reward: RewardConfig,
    pub shape: ShapeConfig,
    /// Round deterministic evaluation outputs to the nearest grid point, so
    /// both phases act on the same discrete output set.
    pub discrete_evaluation: bool,
}

impl MethodConfig {
    pub fn new(method: Method, reward_variant: RewardVariant) -> Self {
        MethodConfig {
            method,
            reward_variant,
            policy: PolicyParams { lambda: method.default_lambda(), ..PolicyParams::default() },
            learn: LearnParams::default(),
            reward: RewardConfig::default(),
            shape: ShapeConfig::default(),
            discrete_evaluation: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        self.learn.validate()?;
        if !self.reward.c.is_finite() {
            return Err(Error::param("reward constant must be finite"));
        }
        Ok(())
    }

    pub fn learning_rate(&self) -> f64 {
        if self.method.is_smoothed() {
            self.learn.epsilon_smoothed
        } else {
            self.learn.epsilon
        }
    }

    /// Rule base for one problem, bound to the default output grid.
    pub fn model_for(&self, problem: &Problem) -> Result<FuzzyPolicy> {
        let rb = build_car_rulebase(problem.l1, problem.l2, problem.leading_speed, &self.shape)?;
        FuzzyPolicy::new(rb, OutputGrid::default())
    }

    pub fn reward_of(&self, trace: &EpisodeTrace) -> f64 {
        car::reward(&trace.outcome, self.reward_variant, &self.reward, trace.problem.l1, trace.problem.l2)
    }
}

/// One stochastic episode, accumulating the eligibility that matches the
/// method's policy.
pub fn run_learning_episode<R: rand::Rng + ?Sized>(
    cfg: &MethodConfig,
    model: &FuzzyPolicy,
    problem: &Problem,
    theta: &WeightVector,
    rng: &mut R,
) -> Result<(EpisodeTrace, EligibilityTrace)> {
    let params = cfg.policy;
    let grid = model.grid();
    let mut elig = EligibilityTrace::new(model.n_rules());
    let mut y_prev = INITIAL_PREVIOUS_OUTPUT;
    let mut failure = None;
    let trace = car::run_episode(problem, |state| {
        if failure.is_some() {
            return 0.0;
        }
        let st = match PolicyState::new(model, theta, &state.input(), params.temperature) {
            Ok(st) => st,
            Err(e) => {
                failure = Some(e);
                return 0.0;
            }
        };
        let index = if cfg.method.is_smoothed() {
            let pi_s = match smoothed_policy(st.gravity_center, y_prev, &params, grid) {
                Ok(d) => d,
                Err(e) => {
                    failure = Some(e);
                    return 0.0;
                }
            };
            let index = sample_index(&pi_s, rng);
            elig.accumulate(&eligibility_smoothed_at(model, &st, &pi_s, index, &params));
            index
        } else {
            let index = sample_index(&st.pi, rng);
            elig.accumulate(&eligibility_base_at(model, &st, index, params.temperature));
            index
        };
        y_prev = grid.values()[index];
        y_prev
    });
    match failure {
        Some(e) => Err(e),
        None => Ok((trace, elig)),
    }
}

/// Deterministic rollout: the gravity center for method (i), its smoothed
/// minimizer for methods (ii)/(iii), rounded to the output grid when
/// `discrete_evaluation` is set.
pub fn run_evaluation_episode(
    cfg: &MethodConfig,
    model: &FuzzyPolicy,
    problem: &Problem,
    theta: &[f64],
) -> Result<EpisodeTrace> {
    let params = cfg.policy;
    let mut y_prev = INITIAL_PREVIOUS_OUTPUT;
    let mut failure = None;
    let trace = car::run_episode(problem, |state| {
        if failure.is_some() {
            return 0.0;
        }
        match PolicyState::new(model, theta, &state.input(), params.temperature) {
            Ok(st) => {
                let mut y = if cfg.method.is_smoothed() {
                    deterministic_output(st.gravity_center, y_prev, params.lambda)
                } else {
                    st.gravity_center
                };
                if cfg.discrete_evaluation {
                    let grid = model.grid();
                    y = grid.values()[grid.nearest_index(y)];
                }
                y_prev = y;
                y
            }
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(trace),
    }
}

/// Both end-of-episode conditions: the last speed change and the final speed
/// gap to the leader are under 0.1 km/h. Early-terminated traces fail.
pub fn check_smoothness(trace: &EpisodeTrace) -> bool {
    let n = trace.states.len();
    if n != EPISODE_LENGTH as usize + 1 {
        return false;
    }
    let last = trace.states[n - 1].following_speed;
    let prev = trace.states[n - 2].following_speed;
    (last - prev).abs() < SMOOTHNESS_TOLERANCE && (last - trace.problem.leading_speed).abs() < SMOOTHNESS_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub method: Method,
    pub reward_variant: RewardVariant,
    pub seed: u64,
    pub final_theta: WeightVector,
    /// Learning iterations performed (each is one learning pass plus one
    /// evaluation pass over the training problems).
    pub m_c: u32,
    /// Every training problem met the goal at the final evaluation.
    pub solved_all: bool,
    /// `solved_all` and every final evaluation episode was smooth.
    pub smooth: bool,
    /// Entry time per training problem at the final evaluation; `None` unless
    /// that problem met the goal.
    pub t_in: Vec<Option<u32>>,
}

/// Training problems with their rule bases, built once per configuration.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    problems: Vec<Problem>,
    models: Vec<FuzzyPolicy>,
}

impl TrainingSet {
    pub fn new(cfg: &MethodConfig, problems: Vec<Problem>) -> Result<Self> {
        let models = problems.iter().map(|p| cfg.model_for(p)).collect::<Result<Vec<_>>>()?;
        Ok(TrainingSet { problems, models })
    }

    pub fn standard(cfg: &MethodConfig) -> Result<Self> {
        Self::new(cfg, car::learning_problems())
    }

    pub fn problems(&self) -> &[Problem] {
        &self.problems
    }

    fn iter(&self) -> impl Iterator<Item = (&Problem, &FuzzyPolicy)> {
        self.problems.iter().zip(&self.models)
    }
}

pub fn learning_experiment(cfg: &MethodConfig, seed: u64) -> Result<ExperimentResult> {
    let set = TrainingSet::standard(cfg)?;
    learning_experiment_with(cfg, &set, seed, |c, tr| c.reward_of(tr))
}

/// Learning loop with a pluggable episode reward.
pub fn learning_experiment_with<F>(cfg: &MethodConfig, set: &TrainingSet, seed: u64, reward: F) -> Result<ExperimentResult>
where
    F: Fn(&MethodConfig, &EpisodeTrace) -> f64,
{
    cfg.validate()?;
    let n_rules = set.models.first().map_or(0, |m| m.n_rules());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = WeightVector::uniform(n_rules);
    let rate = cfg.learning_rate();

    let mut m_c = 0;
    let mut finals = Vec::new();
    while m_c < cfg.learn.max_learning_iterations {
        m_c += 1;
        for (problem, model) in set.iter() {
            let (trace, elig) = run_learning_episode(cfg, model, problem, &theta, &mut rng)?;
            theta = update_weights(&theta, &elig, reward(cfg, &trace), rate);
        }
        finals = set
            .iter()
            .map(|(p, m)| run_evaluation_episode(cfg, m, p, &theta))
            .collect::<Result<Vec<_>>>()?;
        if finals.iter().all(|t| t.outcome.is_success()) {
            break;
        }
    }

    let solved_all = !finals.is_empty() && finals.iter().all(|t| t.outcome.is_success());
    let smooth = solved_all && finals.iter().all(check_smoothness);
    let t_in = finals.iter().map(|t| if t.outcome.is_success() { t.outcome.t_in() } else { None }).collect();
    Ok(ExperimentResult {
        method: cfg.method,
        reward_variant: cfg.reward_variant,
        seed,
        final_theta: theta,
        m_c,
        solved_all,
        smooth,
        t_in,
    })
}

/// Runs seeds `base_seed .. base_seed + repetitions`, in parallel, returning
/// results in seed order.
pub fn run_experiments(cfg: &MethodConfig, base_seed: u64, repetitions: u32) -> Result<Vec<ExperimentResult>> {
    cfg.validate()?;
    let set = TrainingSet::standard(cfg)?;
    (0..repetitions as u64)
        .into_par_iter()
        .map(|k| learning_experiment_with(cfg, &set, base_seed.wrapping_add(k), |c, tr| c.reward_of(tr)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemEvaluation {
    pub index: usize,
    pub outcome: Outcome,
    pub passed: bool,
    pub smooth: bool,
}

impl ProblemEvaluation {
    pub fn t_in(&self) -> Option<u32> {
        if self.passed {
            self.outcome.t_in()
        } else {
            None
        }
    }
}

/// Deterministic evaluation of one weight vector on a problem set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionEvaluation {
    pub rows: Vec<ProblemEvaluation>,
}

impl SolutionEvaluation {
    pub fn passed_all(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn smooth_all(&self) -> bool {
        self.passed_all() && self.rows.iter().all(|r| r.smooth)
    }
}

pub fn evaluate_weights(cfg: &MethodConfig, theta: &[f64], problems: &[Problem]) -> Result<SolutionEvaluation> {
    let rows = problems
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let model = cfg.model_for(p)?;
            let tr = run_evaluation_episode(cfg, &model, p, theta)?;
            Ok(ProblemEvaluation {
                index,
                outcome: tr.outcome,
                passed: tr.outcome.is_success(),
                smooth: check_smoothness(&tr),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SolutionEvaluation { rows })
}

/// Counts and means for one (method, reward) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionStats {
    pub method: Method,
    pub reward_variant: RewardVariant,
    pub repetitions: u32,
    pub seed_first: u64,
    pub seed_last: u64,
    /// Runs solving every training problem.
    pub solved: u32,
    /// Solved runs whose training episodes all end smoothly.
    pub smooth: u32,
    /// Mean learning count over smooth runs.
    pub mean_m_c: Option<f64>,
    /// Mean learning count over all solved runs.
    pub mean_m_c_solved: Option<f64>,
    /// Mean entry time over (smooth run, training problem) pairs.
    pub mean_t_in: Option<f64>,
    /// Smooth runs also solving every test problem (`None` before evaluation).
    pub test_solved: Option<u32>,
    /// ... and ending every test episode smoothly.
    pub test_smooth: Option<u32>,
    /// Mean entry time over (test-smooth run, test problem) pairs.
    pub mean_t_in_test: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(method: Method, reward_variant: RewardVariant, results: &[ExperimentResult]) -> SolutionStats {
    let solved: Vec<_> = results.iter().filter(|r| r.solved_all).collect();
    let smooth: Vec<_> = results.iter().filter(|r| r.smooth).collect();
    SolutionStats {
        method,
        reward_variant,
        repetitions: results.len() as u32,
        seed_first: results.iter().map(|r| r.seed).min().unwrap_or(0),
        seed_last: results.iter().map(|r| r.seed).max().unwrap_or(0),
        solved: solved.len() as u32,
        smooth: smooth.len() as u32,
        mean_m_c: mean(smooth.iter().map(|r| r.m_c as f64)),
        mean_m_c_solved: mean(solved.iter().map(|r| r.m_c as f64)),
        mean_t_in: mean(smooth.iter().flat_map(|r| r.t_in.iter().flatten().map(|&t| t as f64))),
        test_solved: None,
        test_smooth: None,
        mean_t_in_test: None,
    }
}

/// Fills in the test-set counts from evaluations of the smooth runs.
pub fn evaluate_solutions(stats: &mut SolutionStats, evaluations: &[SolutionEvaluation]) {
    let passed: Vec<_> = evaluations.iter().filter(|e| e.passed_all()).collect();
    let smooth: Vec<_> = passed.iter().filter(|e| e.smooth_all()).collect();
    stats.test_solved = Some(passed.len() as u32);
    stats.test_smooth = Some(smooth.len() as u32);
    stats.mean_t_in_test = mean(smooth.iter().flat_map(|e| e.rows.iter().filter_map(|r| r.t_in()).map(|t| t as f64)));
}

/// Evaluates every smooth run of `results` on `problems` (in parallel).
pub fn evaluate_smooth_results(
    cfg: &MethodConfig,
    results: &[ExperimentResult],
    problems: &[Problem],
) -> Result<Vec<SolutionEvaluation>> {
    results
        .par_iter()
        .filter(|r| r.smooth)
        .map(|r| evaluate_weights(cfg, &r.final_theta, problems))
        .collect()
}
