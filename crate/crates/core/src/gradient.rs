//! Characteristic eligibilities (`d ln pi / d theta`) for the plain Boltzmann
//! policy and for the gravity-center policy with a time-smoothing penalty,
//! plus the episodic REINFORCE-style weight update.

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{gravity_center, FuzzyPolicy, OutputGrid, PolicyDistribution};

/// Non-negative rule weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        WeightVector(vec![1.0 / n as f64; n])
    }

    /// Accepts an already-normalized vector (tolerance 1e-9 on the sum).
    pub fn from_normalized(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::param("weight vector is empty"));
        }
        if theta.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("weights must be finite and non-negative"));
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("weights sum to {sum}, expected 1")));
        }
        Ok(WeightVector(theta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Clip at zero and rescale to unit sum. An all-non-positive input maps to
/// the uniform vector.
pub fn normalize_weights(theta_raw: &[f64]) -> WeightVector {
    let clipped: Vec<f64> = theta_raw.iter().map(|&w| if w > 0.0 { w } else { 0.0 }).collect();
    let sum: f64 = clipped.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return WeightVector::uniform(theta_raw.len());
    }
    WeightVector(clipped.into_iter().map(|w| w / sum).collect())
}

/// Temperatures and smoothing strength for the two policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyParams {
    /// Temperature of the rule-energy Boltzmann policy.
    pub temperature: f64,
    /// Temperature of the smoothed policy.
    pub temperature_smoothed: f64,
    /// Weight of the `(y - y_prev)^2` penalty.
    pub lambda: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams { temperature: 0.04, temperature_smoothed: 0.04, lambda: 0.0 }
    }
}

impl PolicyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature_smoothed > 0.0) {
            return Err(Error::param("temperatures must be > 0"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnParams {
    /// Learning rate for the plain Boltzmann policy.
    pub epsilon: f64,
    /// Learning rate for the smoothed policy.
    pub epsilon_smoothed: f64,
    pub max_learning_iterations: u32,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams { epsilon: 0.0075, epsilon_smoothed: 0.0003, max_learning_iterations: 200 }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon_smoothed > 0.0) {
            return Err(Error::param("learning rates must be > 0"));
        }
        if self.max_learning_iterations == 0 {
            return Err(Error::param("max_learning_iterations must be > 0"));
        }
        Ok(())
    }
}

/// Per-rule eligibility sums over one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EligibilityTrace {
    sums: Vec<f64>,
    steps: usize,
}

impl EligibilityTrace {
    pub fn new(n_rules: usize) -> Self {
        EligibilityTrace { sums: vec![0.0; n_rules], steps: 0 }
    }

    pub fn from_sums(sums: Vec<f64>) -> Self {
        EligibilityTrace { sums, steps: 0 }
    }

    pub fn accumulate(&mut self, e: &[f64]) {
        debug_assert_eq!(e.len(), self.sums.len());
        for (s, &v) in self.sums.iter_mut().zip(e) {
            *s += v;
        }
        self.steps += 1;
    }

    pub fn reset(&mut self) {
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        self.steps = 0;
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Number of time steps accumulated.
    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// `theta + rate * r * trace`, projected back onto the simplex.
pub fn update_weights(theta: &WeightVector, trace: &EligibilityTrace, reward: f64, rate: f64) -> WeightVector {
    debug_assert_eq!(theta.len(), trace.sums.len());
    let raw: Vec<f64> = theta.iter().zip(&trace.sums).map(|(&w, &e)| w + rate * reward * e).collect();
    normalize_weights(&raw)
}

/// `E'(y) = (y - y_G)^2 / 2 + lambda (y - y_prev)^2`.
pub fn smoothed_energy(y: f64, y_g: f64, y_prev: f64, lambda: f64) -> f64 {
    let a = y - y_g;
    let b = y - y_prev;
    0.5 * a * a + lambda * b * b
}

/// Closed-form minimizer of [`smoothed_energy`].
pub fn deterministic_output(y_g: f64, y_prev: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return y_g;
    }
    (y_g + 2.0 * lambda * y_prev) / (1.0 + 2.0 * lambda)
}

/// Boltzmann policy of [`smoothed_energy`] at temperature `T'`.
pub fn smoothed_policy(y_g: f64, y_prev: f64, params: &PolicyParams, grid: &OutputGrid) -> Result<PolicyDistribution> {
    let e: Vec<f64> = grid.values().iter().map(|&y| smoothed_energy(y, y_g, y_prev, params.lambda)).collect();
    PolicyDistribution::from_energies(&e, params.temperature_smoothed)
}

/// Everything the eligibilities need about the rule policy at one state.
#[derive(Debug, Clone)]
pub struct PolicyState {
    pub antecedents: Vec<f64>,
    pub pi: PolicyDistribution,
    pub gravity_center: f64,
}

impl PolicyState {
    pub fn new(model: &FuzzyPolicy, theta: &[f64], x: &[f64], temperature: f64) -> Result<Self> {
        let antecedents = model.antecedents(x)?;
        let pi = model.policy_from_antecedents(theta, &antecedents, temperature)?;
        let gravity_center = gravity_center(&pi, model.grid());
        Ok(PolicyState { antecedents, pi, gravity_center })
    }
}

/// `e_i = A^i(x) (B^i(y_t) - <B^i>_pi) / T` for the output at grid index `y_index`.
pub fn eligibility_base(
    model: &FuzzyPolicy,
    theta: &[f64],
    x: &[f64],
    y_index: usize,
    temperature: f64,
) -> Result<Vec<f64>> {
    let st = PolicyState::new(model, theta, x, temperature)?;
    Ok(eligibility_base_at(model, &st, y_index, temperature))
}

/// `<B^i(y)>` under `pi`.
pub fn consequent_mean(model: &FuzzyPolicy, pi: &PolicyDistribution, i: usize) -> f64 {
    model.consequent_row(i).iter().zip(pi.probs()).map(|(b, q)| b * q).sum()
}

pub(crate) fn eligibility_base_at(model: &FuzzyPolicy, st: &PolicyState, y_index: usize, temperature: f64) -> Vec<f64> {
    (0..model.n_rules())
        .map(|i| {
            let a = st.antecedents[i];
            if a == 0.0 {
                return 0.0;
            }
            let b = model.consequent_row(i)[y_index];
            a * (b - consequent_mean(model, &st.pi, i)) / temperature
        })
        .collect()
}

/// Eligibility of the smoothed policy:
/// `e'_i = A^i(x) <(y - y_G) B^i(y)>_pi (y_t - <y>_pi') / (T T')`.
///
/// `y_prev` is held fixed; it is the previous (already realized) output.
pub fn eligibility_smoothed(
    model: &FuzzyPolicy,
    theta: &[f64],
    x: &[f64],
    y_index: usize,
    y_prev: f64,
    params: &PolicyParams,
) -> Result<Vec<f64>> {
    let st = PolicyState::new(model, theta, x, params.temperature)?;
    let pi_s = smoothed_policy(st.gravity_center, y_prev, params, model.grid())?;
    Ok(eligibility_smoothed_at(model, &st, &pi_s, y_index, params))
}

pub(crate) fn eligibility_smoothed_at(
    model: &FuzzyPolicy,
    st: &PolicyState,
    pi_s: &PolicyDistribution,
    y_index: usize,
    params: &PolicyParams,
) -> Vec<f64> {
    let grid = model.grid().values();
    let p = st.pi.probs();
    let mean_s = gravity_center(pi_s, model.grid());
    let dev = grid[y_index] - mean_s;
    let scale = dev / (params.temperature * params.temperature_smoothed);
    (0..model.n_rules())
        .map(|i| {
            let a = st.antecedents[i];
            if a == 0.0 || dev == 0.0 {
                return 0.0;
            }
            let row = model.consequent_row(i);
            let cov: f64 = row.iter().zip(p).zip(grid).map(|((b, q), y)| (y - st.gravity_center) * b * q).sum();
            a * cov * scale
        })
        .collect()
}

/// Inverse-CDF draw of a grid index.
pub fn sample_index<R: Rng + ?Sized>(dist: &PolicyDistribution, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let probs = dist.probs();
    for (h, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return h;
        }
    }
    // u landed in the rounding slack above the last partial sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

pub fn sample_action<R: Rng + ?Sized>(dist: &PolicyDistribution, grid: &OutputGrid, rng: &mut R) -> f64 {
    grid.values()[sample_index(dist, rng)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{build_car_rulebase, FuzzyRule, MembershipFunction, RuleBase, ShapeConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn car() -> FuzzyPolicy {
        FuzzyPolicy::new(build_car_rulebase(30.0, 45.0, 20.0, &ShapeConfig::default()).unwrap(), OutputGrid::default())
            .unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_weights(&[0.2, 0.2]).as_slice(), &[0.5, 0.5]);
        assert_eq!(normalize_weights(&[-0.1, 0.3]).as_slice(), &[0.0, 1.0]);
        assert_eq!(normalize_weights(&[-0.1, -0.3, -1.0, 0.0]).as_slice(), &[0.25; 4]);
    }

    #[test]
    fn update_no_ops() {
        let theta = WeightVector::uniform(20);
        let trace = EligibilityTrace::from_sums((0..20).map(|i| i as f64).collect());
        let same = |a: &WeightVector| a.iter().zip(theta.iter()).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(same(&update_weights(&theta, &trace, 0.0, 0.0075)));
        assert!(same(&update_weights(&theta, &EligibilityTrace::new(20), -0.3, 0.0075)));
    }

    #[test]
    fn update_hand_computed() {
        let theta = WeightVector::uniform(20);
        let mut sums = vec![0.0; 20];
        sums[5] = -100.0; // pushed up by a negative reward
        sums[7] = 300.0; // pushed down, clipped to zero
        sums[12] = 40.0;
        let out = update_weights(&theta, &EligibilityTrace::from_sums(sums), -0.01, 0.0075);
        // raw: rule 6 -> 0.05 + 0.0075, rule 8 -> 0.05 - 0.0225, rule 13 -> 0.05 - 0.003
        let mut raw = vec![0.05; 20];
        raw[5] = 0.0575;
        raw[7] = 0.0275;
        raw[12] = 0.047;
        let z: f64 = raw.iter().sum();
        for (o, r) in out.iter().zip(&raw) {
            assert!((o - r / z).abs() < 1e-15);
        }
        // a step large enough to drive a weight negative
        let mut sums = vec![0.0; 20];
        sums[7] = 1000.0;
        let out = update_weights(&theta, &EligibilityTrace::from_sums(sums), -0.01, 0.0075);
        assert_eq!(out[7], 0.0);
        assert!((out[0] - 1.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::from_normalized(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::from_normalized(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::from_normalized(vec![-0.5, 1.5]).is_err());
        let json = serde_json::to_string(&WeightVector::uniform(4)).unwrap();
        assert_eq!(json, "[0.25,0.25,0.25,0.25]");
    }

    #[test]
    fn smoothed_energy_examples() {
        assert_eq!(smoothed_energy(1.3, 1.3, 0.0, 0.0), 0.0);
        assert_eq!(smoothed_energy(0.7, 0.7, 0.7, 3.0), 0.0);
        // 0.5 * 1 + 0.06 * 1
        assert!((smoothed_energy(1.0, 0.0, 0.0, 0.06) - 0.56).abs() < 1e-15);
    }

    #[test]
    fn deterministic_output_examples() {
        assert_eq!(deterministic_output(1.2345, -3.0, 0.0), 1.2345);
        assert!((deterministic_output(-0.8, -0.8, 0.06) + 0.8).abs() < 1e-15);
        // brute-force minimizer on a 1e-4 grid
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=100_000 {
            let y = -5.0 + 1e-4 * k as f64;
            let e = smoothed_energy(y, 2.0, 0.0, 0.06);
            if e < best.0 {
                best = (e, y);
            }
        }
        assert!((deterministic_output(2.0, 0.0, 0.06) - best.1).abs() <= 1e-4);
    }

    #[test]
    fn smoothed_policy_limits() {
        let grid = OutputGrid::default();
        let flat = smoothed_policy(1.0, -2.0, &PolicyParams { temperature_smoothed: 1e9, ..Default::default() }, &grid)
            .unwrap();
        let (lo, hi) = flat.probs().iter().fold((1.0f64, 0.0f64), |(l, h), &p| (l.min(p), h.max(p)));
        assert!(hi - lo < 1e-6);

        let params = PolicyParams { lambda: 0.06, ..Default::default() };
        let d = smoothed_policy(2.0, 0.0, &params, &grid).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let y_o = deterministic_output(2.0, 0.0, 0.06);
        assert_eq!(d.argmax(), grid.nearest_index(y_o));
    }

    #[test]
    fn eligibility_vanishing_factors() {
        let model = car();
        let theta: Vec<f64> = normalize_weights(&(0..20).map(|i| 1.0 + (i % 3) as f64).collect::<Vec<_>>()).into_inner();
        // distance far beyond l2: every "short" rule has A = 0
        let x = [80.0, 25.0];
        let e = eligibility_base(&model, &theta, &x, 63, 0.04).unwrap();
        for i in 10..20 {
            assert_eq!(e[i], 0.0);
        }
        assert!(e[..10].iter().any(|v| *v != 0.0));
        let params = PolicyParams { lambda: 0.06, ..Default::default() };
        let e = eligibility_smoothed(&model, &theta, &x, 63, 0.4, &params).unwrap();
        for i in 10..20 {
            assert_eq!(e[i], 0.0);
        }
    }

    #[test]
    fn constant_consequent_has_zero_base_eligibility() {
        let flat = MembershipFunction::piecewise(vec![(0.0, 0.6)]).unwrap();
        let ramp = MembershipFunction::ramp(-5.0, 5.0).unwrap();
        let a = MembershipFunction::piecewise(vec![(0.0, 0.9)]).unwrap();
        let rb = RuleBase::new(
            vec![
                FuzzyRule { antecedents: vec![a.clone()], consequents: vec![flat], label: "flat".into() },
                FuzzyRule { antecedents: vec![a], consequents: vec![ramp], label: "ramp".into() },
            ],
            1,
            1,
        )
        .unwrap();
        let model = FuzzyPolicy::new(rb, OutputGrid::default()).unwrap();
        let e = eligibility_base(&model, &[0.3, 0.7], &[0.0], 80, 0.04).unwrap();
        assert!(e[0].abs() < 1e-12);
        assert!(e[1].abs() > 1e-3);
    }

    #[test]
    fn smoothed_eligibility_zero_at_smoothed_mean() {
        // a grid symmetric about y_prev = y_G = 0 puts <y>_pi' exactly on 0
        let model = car();
        let theta = WeightVector::uniform(20);
        let params = PolicyParams { lambda: 0.06, ..Default::default() };
        let st = PolicyState::new(&model, &theta, &[37.5, 20.0], params.temperature).unwrap();
        let pi_s = smoothed_policy(st.gravity_center, 0.0, &params, model.grid()).unwrap();
        let mean = gravity_center(&pi_s, model.grid());
        assert!(mean.abs() < 1e-12);
        let e = eligibility_smoothed(&model, &theta, &[37.5, 20.0], 50, 0.0, &params).unwrap();
        for v in e {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn sampling() {
        let grid = OutputGrid::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pm = PolicyDistribution::point_mass(101, 7);
        for _ in 0..100 {
            assert_eq!(sample_action(&pm, &grid, &mut rng), grid.values()[7]);
        }

        let uni = PolicyDistribution::uniform(101);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 100_000;
        let mut counts = vec![0usize; 101];
        for _ in 0..draws {
            counts[sample_index(&uni, &mut rng)] += 1;
        }
        let p = 1.0 / 101.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 4.0 * sigma, "{c} vs {}", draws as f64 * p);
        }

        let a: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(99);
            (0..50).map(|_| sample_action(&uni, &grid, &mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(99);
            (0..50).map(|_| sample_action(&uni, &grid, &mut r)).collect()
        };
        assert_eq!(a, b);
    }
}
