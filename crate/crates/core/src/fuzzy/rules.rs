use serde::{Deserialize, Serialize};

use super::MembershipFunction;
use crate::error::{Error, Result};

/// `if x_1 is A_1 and ... and x_M is A_M then y_1 is B_1 and ... and y_N is B_N`.
///
/// The rule weight is not stored here; weights live in a separate vector
/// indexed by rule position so they can be learned independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub antecedents: Vec<MembershipFunction>,
    pub consequents: Vec<MembershipFunction>,
    pub label: String,
}

impl FuzzyRule {
    /// Product of the antecedent degrees at input `x`.
    pub fn antecedent_truth(&self, x: &[f64]) -> Result<f64> {
        Error::check_len(self.antecedents.len(), x.len())?;
        Ok(self.antecedents.iter().zip(x).map(|(mf, &xj)| mf.eval(xj)).product())
    }

    /// Product of the consequent degrees at output `y`.
    pub fn consequent_truth(&self, y: &[f64]) -> Result<f64> {
        Error::check_len(self.consequents.len(), y.len())?;
        Ok(self.consequents.iter().zip(y).map(|(mf, &yk)| mf.eval(yk)).product())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleBaseRepr", into = "RuleBaseRepr")]
pub struct RuleBase {
    rules: Vec<FuzzyRule>,
    input_dim: usize,
    output_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct RuleBaseRepr {
    rules: Vec<FuzzyRule>,
    input_dim: usize,
    output_dim: usize,
}

impl TryFrom<RuleBaseRepr> for RuleBase {
    type Error = Error;

    fn try_from(r: RuleBaseRepr) -> Result<Self> {
        RuleBase::new(r.rules, r.input_dim, r.output_dim)
    }
}

impl From<RuleBase> for RuleBaseRepr {
    fn from(rb: RuleBase) -> Self {
        RuleBaseRepr { rules: rb.rules, input_dim: rb.input_dim, output_dim: rb.output_dim }
    }
}

impl RuleBase {
    pub fn new(rules: Vec<FuzzyRule>, input_dim: usize, output_dim: usize) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::param("rule base must contain at least one rule"));
        }
        for (i, rule) in rules.iter().enumerate() {
            if rule.antecedents.len() != input_dim || rule.consequents.len() != output_dim {
                return Err(Error::param(format!(
                    "rule {} ({}) has {}/{} antecedents/consequents, rule base declares {}/{}",
                    i + 1,
                    rule.label,
                    rule.antecedents.len(),
                    rule.consequents.len(),
                    input_dim,
                    output_dim
                )));
            }
            for mf in rule.antecedents.iter().chain(&rule.consequents) {
                mf.validate()?;
            }
        }
        Ok(RuleBase { rules, input_dim, output_dim })
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn antecedent_truths(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.rules.iter().map(|r| r.antecedent_truth(x)).collect()
    }

    /// How strongly the weighted rules jointly support output `y` at input
    /// `x`, negated so that preferred outputs have low energy.
    pub fn energy(&self, theta: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
        Error::check_len(self.rules.len(), theta.len())?;
        let mut sum = 0.0;
        for (rule, &w) in self.rules.iter().zip(theta) {
            sum += w * rule.antecedent_truth(x)? * rule.consequent_truth(y)?;
        }
        Ok(-sum)
    }
}
