//! Two cars on a straight road: the leader cruises at constant speed, the
//! follower is driven by the controller's pedal output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Control steps per episode; states are recorded for `t = 0..=EPISODE_LENGTH`.
pub const EPISODE_LENGTH: u32 = 110;
/// Last time at which entering the target interval still meets the goal.
pub const GOAL_DEADLINE: u32 = 80;
/// Gap (m) at which the episode is abandoned.
pub const MAX_DISTANCE: f64 = 200.0;
/// Speed gained per step (km/h) per unit of pedal output.
pub const ACCEL_PER_UNIT: f64 = 2.0;
const KMH_TO_MPS: f64 = 1.0 / 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    /// km/h
    pub leading_speed: f64,
    /// km/h
    pub following_speed_init: f64,
    /// m
    pub distance_init: f64,
    pub l1: f64,
    pub l2: f64,
}

impl Problem {
    pub fn new(leading_speed: f64, following_speed_init: f64, distance_init: f64, l1: f64, l2: f64) -> Result<Self> {
        let p = Problem { leading_speed, following_speed_init, distance_init, l1, l2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.leading_speed, self.following_speed_init, self.distance_init, self.l1, self.l2];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param(format!("problem fields must be finite and non-negative: {self:?}")));
        }
        if self.l1 >= self.l2 {
            return Err(Error::param(format!("target interval needs l1 < l2: {self:?}")));
        }
        Ok(())
    }

    pub fn in_target(&self, distance: f64) -> bool {
        distance >= self.l1 && distance <= self.l2
    }

    pub fn initial_state(&self) -> CarState {
        CarState { t: 0, distance: self.distance_init, following_speed: self.following_speed_init }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarState {
    pub t: u32,
    /// Gap to the leading car, m.
    pub distance: f64,
    /// km/h
    pub following_speed: f64,
}

impl CarState {
    /// Controller input `(distance, own speed)`.
    pub fn input(&self) -> [f64; 2] {
        [self.distance, self.following_speed]
    }
}

/// One second of motion. Speed is updated first (and clamped at 0), then the
/// gap moves by the relative speed at the new following speed.
pub fn step(state: &CarState, y1: f64, leading_speed: f64) -> CarState {
    let following_speed = (state.following_speed + ACCEL_PER_UNIT * y1).max(0.0);
    let distance = state.distance + (leading_speed - following_speed) * KMH_TO_MPS;
    CarState { t: state.t + 1, distance, following_speed }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Outcome {
    /// In the target interval from `t_in <= 80` through the end.
    Success { t_in: u32 },
    /// In the target interval from `t_in > 80` through the end.
    LateSuccess { t_in: u32 },
    /// Outside the target interval at the end. `distance` is the final gap.
    NeverEntered { distance: f64 },
    /// Gap went negative; `distance` is the (negative) gap at impact.
    Collision { distance: f64 },
    /// Gap reached 200 m at `t_far`.
    TooFar { t_far: u32 },
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success { .. })
    }

    pub fn t_in(&self) -> Option<u32> {
        match *self {
            Outcome::Success { t_in } | Outcome::LateSuccess { t_in } => Some(t_in),
            _ => None,
        }
    }

    /// Reward case number, 1 through 5.
    pub fn case(&self) -> u8 {
        match self {
            Outcome::Success { .. } => 1,
            Outcome::LateSuccess { .. } => 2,
            Outcome::NeverEntered { .. } => 3,
            Outcome::Collision { .. } => 4,
            Outcome::TooFar { .. } => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub problem: Problem,
    /// `states[0]` is the initial condition; one more entry per control step.
    pub states: Vec<CarState>,
    /// Pedal output applied at each step.
    pub outputs: Vec<f64>,
    pub outcome: Outcome,
}

impl EpisodeTrace {
    pub fn episode_length_used(&self) -> usize {
        self.outputs.len()
    }

    pub fn final_state(&self) -> &CarState {
        self.states.last().expect("trace always holds the initial state")
    }

    /// Rows `(t, distance, speed, y1)`; the final state has no output.
    pub fn rows(&self) -> impl Iterator<Item = (u32, f64, f64, Option<f64>)> + '_ {
        self.states
            .iter()
            .enumerate()
            .map(|(k, s)| (s.t, s.distance, s.following_speed, self.outputs.get(k).copied()))
    }
}

/// Classify a trace that ran all 110 steps.
pub fn classify_outcome(problem: &Problem, states: &[CarState]) -> Outcome {
    let last = states.last().expect("non-empty trace");
    if !problem.in_target(last.distance) {
        return Outcome::NeverEntered { distance: last.distance };
    }
    // start of the in-range suffix
    let start = states.iter().rposition(|s| !problem.in_target(s.distance)).map_or(0, |k| k + 1);
    let t_in = states[start].t;
    if t_in <= GOAL_DEADLINE {
        Outcome::Success { t_in }
    } else {
        Outcome::LateSuccess { t_in }
    }
}

/// Roll out a controller from the problem's initial state. Pedal outputs are
/// clamped to `[-5, 5]`.
pub fn run_episode<F>(problem: &Problem, mut controller: F) -> EpisodeTrace
where
    F: FnMut(&CarState) -> f64,
{
    let mut states = Vec::with_capacity(EPISODE_LENGTH as usize + 1);
    let mut outputs = Vec::with_capacity(EPISODE_LENGTH as usize);
    let mut state = problem.initial_state();
    states.push(state);
    for _ in 0..EPISODE_LENGTH {
        let y = controller(&state).clamp(-5.0, 5.0);
        state = step(&state, y, problem.leading_speed);
        outputs.push(y);
        states.push(state);
        if state.distance < 0.0 {
            let outcome = Outcome::Collision { distance: state.distance };
            return EpisodeTrace { problem: *problem, states, outputs, outcome };
        }
        if state.distance >= MAX_DISTANCE {
            let outcome = Outcome::TooFar { t_far: state.t };
            return EpisodeTrace { problem: *problem, states, outputs, outcome };
        }
    }
    let outcome = classify_outcome(problem, &states);
    EpisodeTrace { problem: *problem, states, outputs, outcome }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardVariant {
    /// Penalties only.
    R1,
    /// Penalties plus a bonus for reaching the target early.
    R2,
}

impl RewardVariant {
    pub fn name(&self) -> &'static str {
        match self {
            RewardVariant::R1 => "r1",
            RewardVariant::R2 => "r2",
        }
    }
}

impl std::str::FromStr for RewardVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r1" => Ok(RewardVariant::R1),
            "r2" => Ok(RewardVariant::R2),
            _ => Err(Error::Usage(format!("unknown reward variant `{s}` (expected r1 or r2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Constant added to every penalty.
    pub c: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig { c: -0.01 }
    }
}

pub fn reward(outcome: &Outcome, variant: RewardVariant, cfg: &RewardConfig, l1: f64, l2: f64) -> f64 {
    let c = cfg.c;
    match *outcome {
        Outcome::Success { t_in } => match variant {
            RewardVariant::R1 => 0.0,
            RewardVariant::R2 => 0.01 / (t_in as f64 + 1.0),
        },
        Outcome::LateSuccess { t_in } => match variant {
            RewardVariant::R1 => (GOAL_DEADLINE as f64 - t_in as f64) / 100.0 + c,
            RewardVariant::R2 => 0.01 / (t_in as f64 + 1.0),
        },
        Outcome::NeverEntered { distance } => -(((l1 + l2) / 2.0 - distance) / 20000.0).abs() + c,
        Outcome::Collision { distance } => -distance * distance / 100.0 + c,
        Outcome::TooFar { t_far } => (t_far as f64 - EPISODE_LENGTH as f64) / 100.0 + c,
    }
}

/// The 16 training problems.
pub fn learning_problems() -> Vec<Problem> {
    let mut out = Vec::with_capacity(16);
    for leading in [20.0, 30.0, 50.0, 60.0] {
        for distance in [50.0, 10.0] {
            for (l1, l2) in [(30.0, 45.0), (10.0, 15.0)] {
                out.push(Problem { leading_speed: leading, following_speed_init: 30.0, distance_init: distance, l1, l2 });
            }
        }
    }
    out
}

/// The 697 held-out test problems: a 625-problem grid plus an 81-problem grid
/// with its 9 (leading 50 km/h, gap 20 m) combinations removed.
pub fn evaluation_problems() -> Vec<Problem> {
    let mut out = Vec::with_capacity(697);
    for leading in [45.0, 55.0, 65.0, 75.0, 85.0] {
        for following in [0.0, 10.0, 30.0, 50.0, 70.0] {
            for distance in [30.0, 45.0, 65.0, 70.0, 80.0] {
                for (l1, l2) in [(10.0, 30.0), (20.0, 40.0), (40.0, 60.0), (50.0, 60.0), (60.0, 70.0)] {
                    out.push(Problem { leading_speed: leading, following_speed_init: following, distance_init: distance, l1, l2 });
                }
            }
        }
    }
    for leading in [40.0, 50.0, 60.0] {
        for following in [20.0, 40.0, 60.0] {
            for distance in [20.0, 40.0, 60.0] {
                if leading == 50.0 && distance == 20.0 {
                    continue;
                }
                for (l1, l2) in [(10.0, 20.0), (40.0, 50.0), (45.0, 60.0)] {
                    out.push(Problem { leading_speed: leading, following_speed_init: following, distance_init: distance, l1, l2 });
                }
            }
        }
    }
    out
}
