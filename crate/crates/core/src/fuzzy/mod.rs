//! Weighted fuzzy rules, their energy function, and the Boltzmann policy
//! they induce over a discrete output grid.

mod car_rules;
mod membership;
mod policy;
mod rules;

pub use car_rules::{build_car_rulebase, ShapeConfig, CAR_RULE_COUNT};
pub use membership::MembershipFunction;
pub use policy::{boltzmann_policy, gravity_center, FuzzyPolicy, OutputGrid, PolicyDistribution};
pub use rules::{FuzzyRule, RuleBase};
