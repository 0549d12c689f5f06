//! The twenty car-control rules and the Boltzmann policy they induce at one
//! state.
//!
//!     cargo run --example rule_base -- [distance] [speed]

use fuzzypg::fuzzy::{build_car_rulebase, gravity_center, FuzzyPolicy, OutputGrid, ShapeConfig};
use fuzzypg::gradient::WeightVector;

fn main() -> fuzzypg::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let x = [args.first().copied().unwrap_or(12.0), args.get(1).copied().unwrap_or(40.0)];

    // problem 2 of the training set: leader at 20 km/h, target gap [10, 15] m
    let rb = build_car_rulebase(10.0, 15.0, 20.0, &ShapeConfig::default())?;
    let model = FuzzyPolicy::new(rb, OutputGrid::default())?;
    let a = model.antecedents(&x)?;
    println!("state: distance {} m, speed {} km/h", x[0], x[1]);
    for (i, rule) in model.rules().rules().iter().enumerate() {
        println!("rule {:2}  {:<28} A = {:.3}", i + 1, rule.label, a[i]);
    }

    let uniform = WeightVector::uniform(model.n_rules());
    let mut tuned = vec![0.02; model.n_rules()];
    tuned[5] = 0.2; // long / slow / strong ac.
    tuned[12] = 0.2; // short / fast / strong de.
    let s: f64 = tuned.iter().sum();
    tuned.iter_mut().for_each(|w| *w /= s);

    for (name, theta) in [("uniform", uniform.as_slice()), ("rules 6 and 13 boosted", &tuned[..])] {
        for t in [0.04, 0.4] {
            let pi = model.policy(theta, &x, t)?;
            let y = model.grid().values()[pi.argmax()];
            println!(
                "{name:<24} T = {t:<4}  gravity center {:+.3}  mode {y:+.1}  p(mode) {:.3}",
                gravity_center(&pi, model.grid()),
                pi.probs()[pi.argmax()]
            );
        }
    }
    Ok(())
}
