//! Reference computations for checking the analytic gradients and
//! minimizers numerically.
//!
//! Nothing here calls into the cached [`FuzzyPolicy`](crate::fuzzy::FuzzyPolicy)
//! tables, the softmax in [`PolicyDistribution`], or the closed forms in
//! [`gradient`](crate::gradient): energies are evaluated rule by rule and the
//! log-partition function with a separate log-sum-exp.

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fuzzy::{build_car_rulebase, FuzzyPolicy, OutputGrid, PolicyDistribution, RuleBase, ShapeConfig};
use crate::gradient::{
    deterministic_output, eligibility_base, eligibility_smoothed, normalize_weights, sample_index, smoothed_policy,
    PolicyParams, PolicyState,
};

/// Which policy's log-probability to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogPolicy {
    /// The Boltzmann policy of the rule energy.
    Pi,
    /// The Boltzmann policy of the smoothed gravity-center energy.
    PiPrime,
}

/// Worst-case agreement between an implementation and its oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub max_abs_error: f64,
    /// Largest relative error among components whose absolute error exceeds
    /// the absolute floor used in [`OracleReport::record`].
    pub max_rel_error: f64,
    pub cases_checked: usize,
}

impl OracleReport {
    pub fn record(&mut self, actual: &[f64], reference: &[f64], abs_floor: f64) {
        debug_assert_eq!(actual.len(), reference.len());
        for (&a, &r) in actual.iter().zip(reference) {
            let abs = (a - r).abs();
            self.max_abs_error = self.max_abs_error.max(abs);
            if abs > abs_floor {
                self.max_rel_error = self.max_rel_error.max(abs / r.abs());
            }
        }
        self.cases_checked += 1;
    }

    pub fn merge(&mut self, other: &OracleReport) {
        self.max_abs_error = self.max_abs_error.max(other.max_abs_error);
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
        self.cases_checked += other.cases_checked;
    }

    pub fn passes(&self, rel_tol: f64) -> bool {
        self.max_rel_error <= rel_tol
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `ln pi(y_t)` or `ln pi'(y_t)` at weights `theta`, recomputed from scratch.
#[allow(clippy::too_many_arguments)]
pub fn log_policy(
    rb: &RuleBase,
    theta: &[f64],
    x: &[f64],
    y_index: usize,
    y_prev: f64,
    params: &PolicyParams,
    grid: &OutputGrid,
    which: LogPolicy,
) -> Result<f64> {
    let ys = grid.values();
    let mut logits = Vec::with_capacity(ys.len());
    for &y in ys {
        logits.push(-rb.energy(theta, x, &[y])? / params.temperature);
    }
    let log_z = log_sum_exp(&logits);
    if which == LogPolicy::Pi {
        return Ok(logits[y_index] - log_z);
    }
    let mut y_g = 0.0;
    for (l, &y) in logits.iter().zip(ys) {
        y_g += y * (l - log_z).exp();
    }
    let smoothed: Vec<f64> = ys
        .iter()
        .map(|&y| -(0.5 * (y - y_g).powi(2) + params.lambda * (y - y_prev).powi(2)) / params.temperature_smoothed)
        .collect();
    Ok(smoothed[y_index] - log_sum_exp(&smoothed))
}

/// Central differences of the log-policy with respect to each rule weight.
/// The weights are perturbed one at a time without renormalizing.
#[allow(clippy::too_many_arguments)]
pub fn finite_difference_log_policy_gradient(
    rb: &RuleBase,
    theta: &[f64],
    x: &[f64],
    y_index: usize,
    y_prev: f64,
    params: &PolicyParams,
    grid: &OutputGrid,
    which: LogPolicy,
    delta: f64,
) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta <= 1e-3) {
        return Err(Error::param(format!("finite-difference step must lie in (0, 1e-3], got {delta}")));
    }
    let base = log_policy(rb, theta, x, y_index, y_prev, params, grid, which)?;
    if base < (1e-300f64).ln() {
        return Err(Error::Numerical(format!("probability of output index {y_index} underflows (ln p = {base})")));
    }
    let mut plus = theta.to_vec();
    let mut minus = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        plus[i] = theta[i] + delta;
        minus[i] = theta[i] - delta;
        let fp = log_policy(rb, &plus, x, y_index, y_prev, params, grid, which)?;
        let fm = log_policy(rb, &minus, x, y_index, y_prev, params, grid, which)?;
        grad.push((fp - fm) / (2.0 * delta));
        plus[i] = theta[i];
        minus[i] = theta[i];
    }
    Ok(grad)
}

/// `sum_h f(y_h) p_h`, one term at a time.
pub fn brute_force_expectation(f: impl Fn(f64) -> f64, dist: &PolicyDistribution, grid: &OutputGrid) -> f64 {
    let mut acc = 0.0;
    for h in 0..grid.len() {
        acc += f(grid.values()[h]) * dist.probs()[h];
    }
    acc
}

/// Exhaustive minimizer of `(y - y_G)^2 / 2 + lambda (y - y_prev)^2` on a
/// uniform grid of spacing `resolution` over `[-5, 5]`.
pub fn grid_argmin_smoothed_energy(y_g: f64, y_prev: f64, lambda: f64, resolution: f64) -> Result<f64> {
    if !(resolution > 0.0 && resolution <= 1e-3) {
        return Err(Error::param(format!("resolution must lie in (0, 1e-3], got {resolution}")));
    }
    let n = (10.0 / resolution).round() as usize;
    let mut best_y = -5.0;
    let mut best_e = f64::INFINITY;
    for k in 0..=n {
        let y = -5.0 + 10.0 * k as f64 / n as f64;
        let e = 0.5 * (y - y_g) * (y - y_g) + lambda * (y - y_prev) * (y - y_prev);
        if e < best_e {
            best_e = e;
            best_y = y;
        }
    }
    Ok(best_y)
}

/// One line of the validation suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub name: String,
    pub report: OracleReport,
    pub tolerance: f64,
    pub passed: bool,
}

type Case = (FuzzyPolicy, Vec<f64>, [f64; 2], f64, PolicyParams);

/// Random car rule base, weights on the simplex, state, previous output and
/// smoothing parameters, as used by [`validation_suite`].
fn random_case<R: Rng>(rng: &mut R, grid: &OutputGrid) -> Result<Case> {
    let l1 = rng.gen_range(5.0..40.0);
    let l2 = l1 + rng.gen_range(3.0..20.0);
    let v = rng.gen_range(20.0..80.0);
    let model = FuzzyPolicy::new(build_car_rulebase(l1, l2, v, &ShapeConfig::default())?, grid.clone())?;
    // exponential draws give a uniform point on the simplex
    let raw: Vec<f64> = (0..model.n_rules()).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let theta = normalize_weights(&raw).into_inner();
    let x = [rng.gen_range(0.0..2.5 * l2), rng.gen_range(0.0..v + 30.0)];
    let y_prev = grid.values()[rng.gen_range(0..grid.len())];
    let params = PolicyParams { lambda: rng.gen_range(0.0..0.2), ..PolicyParams::default() };
    Ok((model, theta, x, y_prev, params))
}

/// Runs every oracle comparison on `cases` random configurations.
///
/// Gradient checks use central differences with step 1e-6 and compare at
/// 1e-4 relative error above a 1e-8 absolute floor. The zero-mean checks sum
/// the eligibility exactly over the grid on a tenth of the cases.
pub fn validation_suite(cases: usize, seed: u64) -> Result<Vec<SuiteCheck>> {
    const FD_STEP: f64 = 1e-6;
    const REL_TOL: f64 = 1e-4;
    const ABS_FLOOR: f64 = 1e-8;
    const ARGMIN_RES: f64 = 1e-4;

    let grid = OutputGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base = OracleReport::default();
    let mut smooth = OracleReport::default();
    let mut sums = OracleReport::default();
    let mut zero_base = OracleReport::default();
    let mut zero_smooth = OracleReport::default();
    let mut argmin = OracleReport::default();
    let mut lambda_zero = OracleReport::default();

    for case in 0..cases {
        let (model, theta, x, y_prev, params) = random_case(&mut rng, &grid)?;
        let st = PolicyState::new(&model, &theta, &x, params.temperature)?;
        let pi_s = smoothed_policy(st.gravity_center, y_prev, &params, &grid)?;
        sums.record(&[st.pi.probs().iter().sum::<f64>(), pi_s.probs().iter().sum::<f64>()], &[1.0, 1.0], 0.0);

        let y_index = sample_index(&st.pi, &mut rng);
        let fd = finite_difference_log_policy_gradient(
            model.rules(), &theta, &x, y_index, y_prev, &params, &grid, LogPolicy::Pi, FD_STEP,
        )?;
        base.record(&eligibility_base(&model, &theta, &x, y_index, params.temperature)?, &fd, ABS_FLOOR);

        let y_index = sample_index(&pi_s, &mut rng);
        let fd = finite_difference_log_policy_gradient(
            model.rules(), &theta, &x, y_index, y_prev, &params, &grid, LogPolicy::PiPrime, FD_STEP,
        )?;
        smooth.record(&eligibility_smoothed(&model, &theta, &x, y_index, y_prev, &params)?, &fd, ABS_FLOOR);

        if case % 10 == 0 {
            let n = model.n_rules();
            let mut mean_b = vec![0.0; n];
            let mut mean_s = vec![0.0; n];
            for h in 0..grid.len() {
                let eb = eligibility_base(&model, &theta, &x, h, params.temperature)?;
                let es = eligibility_smoothed(&model, &theta, &x, h, y_prev, &params)?;
                for i in 0..n {
                    mean_b[i] += st.pi.probs()[h] * eb[i];
                    mean_s[i] += pi_s.probs()[h] * es[i];
                }
            }
            zero_base.record(&mean_b, &vec![0.0; n], 0.0);
            zero_smooth.record(&mean_s, &vec![0.0; n], 0.0);
        }

        let y_g = rng.gen_range(-5.0..5.0);
        let prev = rng.gen_range(-5.0..5.0);
        let lambda = rng.gen_range(0.0..1.0);
        let reference = grid_argmin_smoothed_energy(y_g, prev, lambda, ARGMIN_RES)?;
        argmin.record(&[deterministic_output(y_g, prev, lambda)], &[reference], 0.0);
        let exact = deterministic_output(y_g, prev, 0.0);
        lambda_zero.record(&[exact], &[y_g], 0.0);
    }

    let check = |name: &str, report: OracleReport, tolerance: f64, passed: bool| SuiteCheck {
        name: name.to_string(),
        report,
        tolerance,
        passed,
    };
    Ok(vec![
        check("eligibility_base vs finite differences", base, REL_TOL, base.passes(REL_TOL)),
        check("eligibility_smoothed vs finite differences", smooth, REL_TOL, smooth.passes(REL_TOL)),
        check("deterministic_output vs grid argmin", argmin, ARGMIN_RES, argmin.max_abs_error <= ARGMIN_RES),
        check("deterministic_output at lambda = 0", lambda_zero, 0.0, lambda_zero.max_abs_error == 0.0),
        check("policy probabilities sum to 1", sums, 1e-12, sums.max_abs_error <= 1e-12),
        check("eligibility_base has zero mean", zero_base, 1e-10, zero_base.max_abs_error <= 1e-10),
        check("eligibility_smoothed has zero mean", zero_smooth, 1e-10, zero_smooth.max_abs_error <= 1e-10),
    ])
}
