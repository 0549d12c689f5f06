//! Repeated learning experiments for every (method, reward) cell, with the
//! smooth solutions re-tested on the 697 held-out problems.
//!
//!     cargo run --release --example results_table -- [reps] [base seed]

use fuzzypg::car::{evaluation_problems, RewardVariant};
use fuzzypg::experiment::{aggregate, evaluate_smooth_results, evaluate_solutions, run_experiments, Method, MethodConfig};

fn main() -> fuzzypg::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps: u32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);
    let tests = evaluation_problems();

    let fmt = |v: Option<f64>| v.map_or("   -".to_string(), |v| format!("{v:5.1}"));
    println!("meth reward  |S|  |S_c|  m_c   t_in  |S'| |S'_c| t'_in");
    for method in Method::ALL {
        for reward in [RewardVariant::R1, RewardVariant::R2] {
            let cfg = MethodConfig::new(method, reward);
            let results = run_experiments(&cfg, seed, reps)?;
            let mut stats = aggregate(method, reward, &results);
            evaluate_solutions(&mut stats, &evaluate_smooth_results(&cfg, &results, &tests)?);
            println!(
                "{:<4} {:<6} {:4} {:5} {} {} {:5} {:5} {}",
                method.name(),
                reward.name(),
                stats.solved,
                stats.smooth,
                fmt(stats.mean_m_c),
                fmt(stats.mean_t_in),
                stats.test_solved.unwrap_or(0),
                stats.test_smooth.unwrap_or(0),
                fmt(stats.mean_t_in_test)
            );
        }
    }
    Ok(())
}
