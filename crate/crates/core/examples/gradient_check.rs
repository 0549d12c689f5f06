//! Analytic eligibilities against central finite differences of the log
//! policy, then the full oracle suite.
//!
//!     cargo run --release --example gradient_check -- [cases]

use fuzzypg::fuzzy::{build_car_rulebase, FuzzyPolicy, OutputGrid, ShapeConfig};
use fuzzypg::gradient::{eligibility_base, eligibility_smoothed, PolicyParams, PolicyState, smoothed_policy};
use fuzzypg::oracle::{finite_difference_log_policy_gradient, validation_suite, LogPolicy};

fn main() -> fuzzypg::Result<()> {
    let cases = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);

    let model = FuzzyPolicy::new(build_car_rulebase(30.0, 45.0, 50.0, &ShapeConfig::default())?, OutputGrid::default())?;
    let theta: Vec<f64> = (1..=20).map(|i| i as f64 / 210.0).collect();
    let x = [38.0, 47.0];
    let y_prev = 0.3;
    let params = PolicyParams { lambda: 0.06, ..PolicyParams::default() };
    let st = PolicyState::new(&model, &theta, &x, params.temperature)?;
    let y_index = st.pi.argmax();
    let j = smoothed_policy(st.gravity_center, y_prev, &params, model.grid())?.argmax();

    let e = eligibility_base(&model, &theta, &x, y_index, params.temperature)?;
    let fd = finite_difference_log_policy_gradient(
        model.rules(), &theta, &x, y_index, y_prev, &params, model.grid(), LogPolicy::Pi, 1e-6,
    )?;
    let e2 = eligibility_smoothed(&model, &theta, &x, j, y_prev, &params)?;
    let fd2 = finite_difference_log_policy_gradient(
        model.rules(), &theta, &x, j, y_prev, &params, model.grid(), LogPolicy::PiPrime, 1e-6,
    )?;
    println!("rule   e (analytic)   e (numeric)    e' (analytic)  e' (numeric)");
    for i in 0..model.n_rules() {
        println!("{:4}  {:+.6e}  {:+.6e}  {:+.6e}  {:+.6e}", i + 1, e[i], fd[i], e2[i], fd2[i]);
    }

    println!("\n{cases} random configurations:");
    for c in validation_suite(cases, 7)? {
        println!(
            "{} {:<44} max abs {:.2e}  max rel {:.2e}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.report.max_abs_error,
            c.report.max_rel_error
        );
    }
    Ok(())
}
