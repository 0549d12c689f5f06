//! Learn one solution, then break its test-set failures down by outcome and
//! by leading-car speed.
//!
//!     cargo run --release --example evaluate_weights -- [seed]

use std::collections::BTreeMap;

use fuzzypg::car::{evaluation_problems, RewardVariant};
use fuzzypg::experiment::{evaluate_weights, learning_experiment, Method, MethodConfig};

fn main() -> fuzzypg::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let cfg = MethodConfig::new(Method::Iii, RewardVariant::R1);
    let r = learning_experiment(&cfg, seed)?;
    println!("seed {seed}: m_c {}, solved {}, smooth {}", r.m_c, r.solved_all, r.smooth);

    let problems = evaluation_problems();
    for (name, theta) in [("uniform", vec![0.05; 20]), ("learned", r.final_theta.to_vec())] {
        let eval = evaluate_weights(&cfg, &theta, &problems)?;
        let mut by_case: BTreeMap<u8, usize> = BTreeMap::new();
        let mut by_speed: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
        for row in &eval.rows {
            *by_case.entry(row.outcome.case()).or_default() += 1;
            let e = by_speed.entry(problems[row.index].leading_speed as u32).or_default();
            e.1 += 1;
            if row.passed {
                e.0 += 1;
            }
        }
        let passed = eval.rows.iter().filter(|r| r.passed).count();
        println!("\n{name}: {passed}/{} passed, all passed {}, all smooth {}", eval.rows.len(), eval.passed_all(), eval.smooth_all());
        println!("  outcome case counts {by_case:?}");
        for (v, (p, n)) in by_speed {
            println!("  leader {v:3} km/h: {p:3}/{n}");
        }
    }
    Ok(())
}
