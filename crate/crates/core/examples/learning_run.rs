//! A single learning experiment per method: iterations to success and the
//! learned weights of the four rules that matter most.
//!
//!     cargo run --release --example learning_run -- [seed] [r1|r2]

use fuzzypg::car::RewardVariant;
use fuzzypg::experiment::{learning_experiment, Method, MethodConfig};

fn main() -> fuzzypg::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let reward: RewardVariant = args.next().map(|a| a.parse()).transpose()?.unwrap_or(RewardVariant::R1);

    for method in Method::ALL {
        let cfg = MethodConfig::new(method, reward);
        let r = learning_experiment(&cfg, seed)?;
        let th = &r.final_theta;
        println!(
            "method {:<3} m_c {:3}  solved {:<5} smooth {:<5} theta6 {:.3} theta8 {:.3} theta11 {:.3} theta13 {:.3}",
            method.name(),
            r.m_c,
            r.solved_all,
            r.smooth,
            th[5],
            th[7],
            th[10],
            th[12]
        );
        let t_in: Vec<String> = r.t_in.iter().map(|t| t.map_or("-".into(), |t| t.to_string())).collect();
        println!("           t_in {}", t_in.join(" "));
    }
    Ok(())
}
