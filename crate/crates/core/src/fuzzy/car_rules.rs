//! The twenty-rule speed controller for the car-following task.
//!
//! Inputs are the gap to the leading car (m) and the following car's own
//! speed (km/h); the single output is pedal intensity in `[-5, 5]`.

use serde::{Deserialize, Serialize};

use super::{FuzzyRule, MembershipFunction, RuleBase};
use crate::error::{Error, Result};

/// Membership-shape knobs for [`build_car_rulebase`].
///
/// Distance terms are fixed by the target interval: "short" is 1 up to `l1`
/// and falls linearly to 0 at `l2`; "long" is its complement. Speed terms are
/// centered on the leading car's speed `v`: "slow" is 1 up to `v - speed_margin`
/// and falls to 0 at `v + speed_margin`; "fast" is its complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeConfig {
    /// Half-width of the slow/fast transition, km/h.
    pub speed_margin: f64,
    pub strong_accel: MembershipFunction,
    pub weak_accel: MembershipFunction,
    pub strong_decel: MembershipFunction,
    pub weak_decel: MembershipFunction,
    pub none: MembershipFunction,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            speed_margin: 10.0,
            strong_accel: MembershipFunction::PiecewiseLinear { breakpoints: vec![(0.0, 0.0), (5.0, 1.0)] },
            weak_accel: MembershipFunction::PiecewiseLinear { breakpoints: vec![(0.0, 0.0), (2.5, 1.0), (5.0, 0.0)] },
            strong_decel: MembershipFunction::PiecewiseLinear { breakpoints: vec![(-5.0, 1.0), (0.0, 0.0)] },
            weak_decel: MembershipFunction::PiecewiseLinear {
                breakpoints: vec![(-5.0, 0.0), (-2.5, 1.0), (0.0, 0.0)],
            },
            none: MembershipFunction::CrispPoint { location: 0.0 },
        }
    }
}

const DISTANCE_TERMS: [&str; 2] = ["long", "short"];
const SPEED_TERMS: [&str; 2] = ["fast", "slow"];
const OPERATION_TERMS: [&str; 5] = ["strong ac.", "weak ac.", "strong de.", "weak de.", "none"];

/// Number of rules produced by [`build_car_rulebase`].
pub const CAR_RULE_COUNT: usize = 20;

/// Builds the 20 rules `{long, short} x {fast, slow} x {strong ac., weak ac.,
/// strong de., weak de., none}` in that nesting order (rule 1 is
/// "long / fast / strong ac.", rule 20 is "short / slow / none").
pub fn build_car_rulebase(l1: f64, l2: f64, v: f64, shape: &ShapeConfig) -> Result<RuleBase> {
    if !(l1.is_finite() && l2.is_finite() && l1 < l2) {
        return Err(Error::param(format!("target interval needs l1 < l2, got [{l1}, {l2}]")));
    }
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::param(format!("leading speed must be >= 0, got {v}")));
    }
    if !(shape.speed_margin > 0.0) {
        return Err(Error::param("speed_margin must be > 0"));
    }

    let short = MembershipFunction::piecewise(vec![(l1, 1.0), (l2, 0.0)])?;
    let long = MembershipFunction::piecewise(vec![(l1, 0.0), (l2, 1.0)])?;
    let slow = MembershipFunction::piecewise(vec![(v - shape.speed_margin, 1.0), (v + shape.speed_margin, 0.0)])?;
    let fast = MembershipFunction::piecewise(vec![(v - shape.speed_margin, 0.0), (v + shape.speed_margin, 1.0)])?;
    let operations = [&shape.strong_accel, &shape.weak_accel, &shape.strong_decel, &shape.weak_decel, &shape.none];

    let mut rules = Vec::with_capacity(CAR_RULE_COUNT);
    for (dist_name, dist) in DISTANCE_TERMS.iter().zip([&long, &short]) {
        for (speed_name, speed) in SPEED_TERMS.iter().zip([&fast, &slow]) {
            for (op_name, op) in OPERATION_TERMS.iter().zip(operations) {
                rules.push(FuzzyRule {
                    antecedents: vec![dist.clone(), speed.clone()],
                    consequents: vec![op.clone()],
                    label: format!("{dist_name} / {speed_name} / {op_name}"),
                });
            }
        }
    }
    RuleBase::new(rules, 2, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_rules_in_table_order() {
        let rb = build_car_rulebase(30.0, 45.0, 20.0, &ShapeConfig::default()).unwrap();
        assert_eq!(rb.len(), 20);
        let labels: Vec<_> = rb.rules().iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels[0], "long / fast / strong ac.");
        assert_eq!(labels[5], "long / slow / strong ac.");
        assert_eq!(labels[7], "long / slow / strong de.");
        assert_eq!(labels[10], "short / fast / strong ac.");
        assert_eq!(labels[12], "short / fast / strong de.");
        assert_eq!(labels[19], "short / slow / none");
    }

    #[test]
    fn complementary_terms() {
        let rb = build_car_rulebase(10.0, 15.0, 60.0, &ShapeConfig::default()).unwrap();
        let long = &rb.rules()[0].antecedents[0];
        let short = &rb.rules()[10].antecedents[0];
        let fast = &rb.rules()[0].antecedents[1];
        let slow = &rb.rules()[5].antecedents[1];
        for k in 0..=400 {
            let x = -20.0 + 0.5 * k as f64;
            assert!((long.eval(x) + short.eval(x) - 1.0).abs() < 1e-15);
            assert!((fast.eval(x) + slow.eval(x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(short.eval(10.0), 1.0);
        assert_eq!(short.eval(12.5), 0.5);
        assert_eq!(long.eval(15.0), 1.0);
        assert_eq!(slow.eval(50.0), 1.0);
        assert_eq!(slow.eval(60.0), 0.5);
        assert_eq!(fast.eval(70.0), 1.0);
    }

    #[test]
    fn long_fast_truth_is_product_of_terms() {
        let rb = build_car_rulebase(30.0, 45.0, 20.0, &ShapeConfig::default()).unwrap();
        // long(37.5) = 0.5 on the 30..45 ramp; fast(20) = 0.5 at the centre
        let x = [37.5, 20.0];
        assert!((rb.rules()[0].antecedent_truth(&x).unwrap() - 0.25).abs() < 1e-15);
        // fast(25) = 0.75
        assert!((rb.rules()[0].antecedent_truth(&[37.5, 25.0]).unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn output_terms() {
        let rb = build_car_rulebase(30.0, 45.0, 20.0, &ShapeConfig::default()).unwrap();
        let none = &rb.rules()[4];
        assert_eq!(none.consequent_truth(&[0.0]).unwrap(), 1.0);
        assert_eq!(none.consequent_truth(&[1.0]).unwrap(), 0.0);
        let strong_de = &rb.rules()[2].consequents[0];
        assert_eq!(strong_de.eval(-5.0), 1.0);
        assert_eq!(strong_de.eval(-2.5), 0.5);
        assert_eq!(strong_de.eval(1.0), 0.0);
        let weak_ac = &rb.rules()[1].consequents[0];
        assert_eq!(weak_ac.eval(2.5), 1.0);
    }

    #[test]
    fn parameter_errors() {
        let s = ShapeConfig::default();
        assert!(build_car_rulebase(45.0, 30.0, 20.0, &s).is_err());
        assert!(build_car_rulebase(30.0, 30.0, 20.0, &s).is_err());
        assert!(build_car_rulebase(30.0, 45.0, -1.0, &s).is_err());
    }

    #[test]
    fn energy_matches_term_by_term_sum() {
        let rb = build_car_rulebase(30.0, 45.0, 20.0, &ShapeConfig::default()).unwrap();
        let theta = vec![0.05; 20];
        let (x1, x2, y) = (33.0, 26.0, 1.7);
        // long=0.2 short=0.8, fast=0.8 slow=0.2
        let a = [0.2 * 0.8, 0.2 * 0.2, 0.8 * 0.8, 0.8 * 0.2];
        // strong ac 0.34, weak ac 0.68, de terms 0, none 0
        let b = [0.34, 0.68, 0.0, 0.0, 0.0];
        let mut expected = 0.0;
        for ai in a {
            for bk in b {
                expected -= 0.05 * ai * bk;
            }
        }
        let e = rb.energy(&theta, &[x1, x2], &[y]).unwrap();
        assert!((e - expected).abs() < 1e-15, "{e} vs {expected}");
    }

    #[test]
    fn json_round_trip() {
        let s = ShapeConfig::default();
        let rb = build_car_rulebase(30.0, 45.0, 20.0, &s).unwrap();
        let back: RuleBase = serde_json::from_str(&serde_json::to_string(&rb).unwrap()).unwrap();
        assert_eq!(back, rb);
        let partial: ShapeConfig = serde_json::from_str(r#"{"speed_margin": 5.0}"#).unwrap();
        assert_eq!(partial.speed_margin, 5.0);
        assert_eq!(partial.none, s.none);
    }
}
