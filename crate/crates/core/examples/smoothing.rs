//! How the smoothing penalty pulls the deterministic output towards the
//! previous one, and what the smoothed sampling distribution looks like.

use fuzzypg::fuzzy::{gravity_center, OutputGrid};
use fuzzypg::gradient::{deterministic_output, smoothed_policy, PolicyParams};

fn main() -> fuzzypg::Result<()> {
    let grid = OutputGrid::default();
    let (y_g, y_prev) = (2.0, -1.0);
    println!("y_G = {y_g}, y_prev = {y_prev}");
    for lambda in [0.0, 0.06, 0.5, 2.0] {
        let params = PolicyParams { lambda, ..PolicyParams::default() };
        let pi = smoothed_policy(y_g, y_prev, &params, &grid)?;
        let mean = gravity_center(&pi, &grid);
        let sd = pi.expect(&grid, |_, y| (y - mean).powi(2)).sqrt();
        println!(
            "lambda {lambda:<5} y_O {:+.4}  sampling mean {mean:+.4}  sd {sd:.3}",
            deterministic_output(y_g, y_prev, lambda)
        );
    }
    Ok(())
}
