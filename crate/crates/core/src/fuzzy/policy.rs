use serde::{Deserialize, Serialize};

use super::RuleBase;
use crate::error::{Error, Result};

/// Admissible discrete values of the (scalar) control output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputGrid {
    values: Vec<f64>,
}

impl Default for OutputGrid {
    /// `-5.0, -4.9, ..., 4.9, 5.0` (101 points). Values are built as
    /// `(h - 50) / 10` so the grid is exactly symmetric and contains 0.
    fn default() -> Self {
        OutputGrid { values: (0..=100).map(|h| (h as f64 - 50.0) / 10.0).collect() }
    }
}

impl OutputGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("output grid is empty"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("output grid must be strictly increasing"));
        }
        Ok(OutputGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Index of the grid point closest to `y` (lower index on ties).
    pub fn nearest_index(&self, y: f64) -> usize {
        let k = self.values.partition_point(|&v| v < y);
        if k == 0 {
            0
        } else if k == self.values.len() || (y - self.values[k - 1]) <= (self.values[k] - y) {
            k - 1
        } else {
            k
        }
    }
}

/// Probability mass over the points of an [`OutputGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    probs: Vec<f64>,
}

impl PolicyDistribution {
    /// Boltzmann weights `exp(-E_h / T)`, normalized. Energies are shifted by
    /// their minimum before exponentiation.
    pub fn from_energies(energies: &[f64], temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::param(format!("temperature must be > 0, got {temperature}")));
        }
        if energies.is_empty() {
            return Err(Error::param("no energies to normalize"));
        }
        let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return Err(Error::Numerical("non-finite energy".into()));
        }
        let mut probs: Vec<f64> = energies.iter().map(|&e| (-(e - min) / temperature).exp()).collect();
        let z: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= z);
        Ok(PolicyDistribution { probs })
    }

    /// Wraps an explicit mass vector; rejects negative entries and rescales
    /// to unit sum.
    pub fn from_probs(mut probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::param("probabilities must be finite and non-negative"));
        }
        let z: f64 = probs.iter().sum();
        if !(z > 0.0) {
            return Err(Error::param("probabilities sum to zero"));
        }
        probs.iter_mut().for_each(|p| *p /= z);
        Ok(PolicyDistribution { probs })
    }

    pub fn uniform(n: usize) -> Self {
        PolicyDistribution { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(n: usize, index: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        PolicyDistribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (h, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = h;
            }
        }
        best
    }

    /// Expectation of `f(y_h)` under this distribution.
    pub fn expect(&self, grid: &OutputGrid, f: impl Fn(usize, f64) -> f64) -> f64 {
        debug_assert_eq!(self.probs.len(), grid.len());
        self.probs.iter().zip(grid.values()).enumerate().map(|(h, (&p, &y))| p * f(h, y)).sum()
    }
}

/// Expected output under `dist`; the defuzzified (gravity-center) output.
pub fn gravity_center(dist: &PolicyDistribution, grid: &OutputGrid) -> f64 {
    dist.expect(grid, |_, y| y)
}

/// Boltzmann policy over `grid`, evaluating every rule membership directly.
///
/// Only valid for single-output rule bases. [`FuzzyPolicy`] computes the same
/// distribution from cached consequent degrees and is what the learning loop
/// uses.
pub fn boltzmann_policy(
    rb: &RuleBase,
    theta: &[f64],
    x: &[f64],
    temperature: f64,
    grid: &OutputGrid,
) -> Result<PolicyDistribution> {
    if !(temperature > 0.0) {
        return Err(Error::param(format!("temperature must be > 0, got {temperature}")));
    }
    let energies = grid
        .values()
        .iter()
        .map(|&y| rb.energy(theta, x, &[y]))
        .collect::<Result<Vec<_>>>()?;
    PolicyDistribution::from_energies(&energies, temperature)
}

/// A single-output rule base bound to an output grid, with every consequent
/// degree `B^i(y_h)` precomputed.
#[derive(Debug, Clone)]
pub struct FuzzyPolicy {
    rules: RuleBase,
    grid: OutputGrid,
    // row-major: rule i occupies [i * grid.len(), (i + 1) * grid.len())
    consequents: Vec<f64>,
}

impl FuzzyPolicy {
    pub fn new(rules: RuleBase, grid: OutputGrid) -> Result<Self> {
        if rules.output_dim() != 1 {
            return Err(Error::param(format!(
                "grid policies need a single output, rule base has {}",
                rules.output_dim()
            )));
        }
        let mut consequents = Vec::with_capacity(rules.len() * grid.len());
        for rule in rules.rules() {
            for &y in grid.values() {
                consequents.push(rule.consequent_truth(&[y])?);
            }
        }
        Ok(FuzzyPolicy { rules, grid, consequents })
    }

    pub fn rules(&self) -> &RuleBase {
        &self.rules
    }

    pub fn grid(&self) -> &OutputGrid {
        &self.grid
    }

    pub fn n_rules(&self) -> usize {
        self.rules.len()
    }

    /// `B^i(y_h)` for every grid point `h`.
    pub fn consequent_row(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.consequents[i * n..(i + 1) * n]
    }

    pub fn antecedents(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.rules.antecedent_truths(x)
    }

    /// Energy at every grid point given antecedent degrees `a`.
    pub fn energies(&self, theta: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n_rules(), theta.len())?;
        Error::check_len(self.n_rules(), a.len())?;
        let mut e = vec![0.0; self.grid.len()];
        for (i, (&w, &ai)) in theta.iter().zip(a).enumerate() {
            let s = w * ai;
            if s == 0.0 {
                continue;
            }
            for (eh, &b) in e.iter_mut().zip(self.consequent_row(i)) {
                *eh -= s * b;
            }
        }
        Ok(e)
    }

    pub fn policy_from_antecedents(&self, theta: &[f64], a: &[f64], temperature: f64) -> Result<PolicyDistribution> {
        PolicyDistribution::from_energies(&self.energies(theta, a)?, temperature)
    }

    pub fn policy(&self, theta: &[f64], x: &[f64], temperature: f64) -> Result<PolicyDistribution> {
        let a = self.antecedents(x)?;
        self.policy_from_antecedents(theta, &a, temperature)
    }
}
