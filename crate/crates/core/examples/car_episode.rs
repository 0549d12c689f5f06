//! One deterministic episode on a training problem with hand-set weights,
//! its outcome and the reward under both reward variants.
//!
//!     cargo run --example car_episode -- [problem 1..16]

use fuzzypg::car::{learning_problems, reward, RewardConfig, RewardVariant};
use fuzzypg::experiment::{check_smoothness, run_evaluation_episode, Method, MethodConfig};

fn main() -> fuzzypg::Result<()> {
    let k: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let problem = learning_problems()[k.clamp(1, 16) - 1];
    println!("{problem:?}");

    let cfg = MethodConfig::new(Method::I, RewardVariant::R1);
    let model = cfg.model_for(&problem)?;

    let mut theta = vec![0.01; 20];
    for (rule, w) in [(6, 0.2), (13, 0.2), (1, 0.1), (20, 0.1), (10, 0.1), (16, 0.1)] {
        theta[rule - 1] = w;
    }
    let s: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|w| *w /= s);

    for (name, th) in [("uniform", vec![0.05; 20]), ("hand-set", theta)] {
        let tr = run_evaluation_episode(&cfg, &model, &problem, &th)?;
        let rc = RewardConfig::default();
        println!(
            "\n{name}: {:?}, smooth {}, r1 {:+.4}, r2 {:+.4}",
            tr.outcome,
            check_smoothness(&tr),
            reward(&tr.outcome, RewardVariant::R1, &rc, problem.l1, problem.l2),
            reward(&tr.outcome, RewardVariant::R2, &rc, problem.l1, problem.l2),
        );
        for (t, d, v, y) in tr.rows().step_by(10) {
            println!("  t {t:3}  distance {d:7.2}  speed {v:6.1}  y1 {}", y.map_or("-".into(), |y| format!("{y:+.1}")));
        }
    }
    Ok(())
}
