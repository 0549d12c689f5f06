//! One PASS/FAIL line per acceptance criterion.
//!
//! Runs as a plain binary (no libtest harness) so the lines always reach
//! stdout. A FAIL line does not fail `cargo test` unless
//! `ACCEPTANCE_STRICT=1` is set; the learning-statistics criteria are
//! stochastic trend checks and are reported, not asserted.

use std::fs;
use std::process::Command;
use std::time::Instant;

use fuzzypg::car::{evaluation_problems, run_episode, step, CarState, Problem, RewardVariant};
use fuzzypg::experiment::{
    aggregate, evaluate_smooth_results, evaluate_solutions, run_experiments, ExperimentResult, Method, MethodConfig,
    SolutionStats,
};
use fuzzypg::oracle::{validation_suite, SuiteCheck};

const LEARN_REPS: u32 = 200;
const TREND_REPS: u32 = 500;
const BASE_SEED: u64 = 0;

struct Line {
    id: u32,
    passed: bool,
    text: String,
}

fn line(id: u32, passed: bool, text: impl Into<String>) -> Line {
    let l = Line { id, passed, text: text.into() };
    println!("criterion {:2} {}: {}", l.id, if l.passed { "PASS" } else { "FAIL" }, l.text);
    l
}

fn check<'a>(checks: &'a [SuiteCheck], name: &str) -> &'a SuiteCheck {
    checks.iter().find(|c| c.name == name).expect("suite check present")
}

fn gradients(checks: &[SuiteCheck], secs: f64) -> Line {
    let b = check(checks, "eligibility_base vs finite differences");
    let s = check(checks, "eligibility_smoothed vs finite differences");
    line(
        1,
        b.passed && s.passed && b.report.cases_checked >= 1000 && secs < 60.0,
        format!(
            "gradient check on {} random configurations in {secs:.1} s; max rel error e {:.2e}, e' {:.2e} (tolerance 1e-4, floor 1e-8)",
            b.report.cases_checked, b.report.max_rel_error, s.report.max_rel_error
        ),
    )
}

fn minimizer(checks: &[SuiteCheck]) -> Line {
    let a = check(checks, "deterministic_output vs grid argmin");
    let z = check(checks, "deterministic_output at lambda = 0");
    line(
        2,
        a.passed && z.passed,
        format!(
            "closed-form minimizer vs grid argmin on {} triples, max abs error {:.2e} (resolution 1e-4); lambda = 0 bit-identical: {}",
            a.report.cases_checked, a.report.max_abs_error, z.passed
        ),
    )
}

fn distributions(checks: &[SuiteCheck]) -> Line {
    let s = check(checks, "policy probabilities sum to 1");
    let b = check(checks, "eligibility_base has zero mean");
    let m = check(checks, "eligibility_smoothed has zero mean");
    line(
        3,
        s.passed && b.passed && m.passed,
        format!(
            "probability sums within {:.1e} of 1 (tolerance 1e-12); eligibility means {:.1e} / {:.1e} (tolerance 1e-10)",
            s.report.max_abs_error, b.report.max_abs_error, m.report.max_abs_error
        ),
    )
}

fn dynamics() -> Line {
    let mut s = CarState { t: 0, distance: 1000.0, following_speed: 0.0 };
    for _ in 0..10 {
        s = step(&s, 5.0, 0.0);
    }
    let gain = s.following_speed;
    let p = Problem::new(40.0, 40.0, 25.0, 20.0, 30.0).unwrap();
    let tr = run_episode(&p, |_| 0.0);
    let constant = tr.states.len() == 111 && tr.states.iter().all(|s| s.distance == 25.0);
    line(
        4,
        gain == 100.0 && constant,
        format!("full throttle for 10 steps adds {gain} km/h; zero input at equal speed keeps the gap for 110 steps: {constant}"),
    )
}

struct Cell {
    method: Method,
    reward: RewardVariant,
    results: Vec<ExperimentResult>,
    first: SolutionStats,
    all: SolutionStats,
}

fn run_cells() -> Vec<Cell> {
    let mut cells = Vec::new();
    for method in Method::ALL {
        for reward in [RewardVariant::R1, RewardVariant::R2] {
            let t = Instant::now();
            let cfg = MethodConfig::new(method, reward);
            let results = run_experiments(&cfg, BASE_SEED, TREND_REPS).expect("learning runs");
            let first = aggregate(method, reward, &results[..LEARN_REPS as usize]);
            let all = aggregate(method, reward, &results);
            println!(
                "  cell {:<3} {}: first {LEARN_REPS}: |S| {} |S_c| {}; all {TREND_REPS}: |S| {} |S_c| {} mean m_c {:.1} (over S: {:.1}) mean t_in {:.1}  [{:.0} s]",
                method.name(),
                reward.name(),
                first.solved,
                first.smooth,
                all.solved,
                all.smooth,
                all.mean_m_c.unwrap_or(f64::NAN),
                all.mean_m_c_solved.unwrap_or(f64::NAN),
                all.mean_t_in.unwrap_or(f64::NAN),
                t.elapsed().as_secs_f64()
            );
            cells.push(Cell { method, reward, results, first, all });
        }
    }
    cells
}

fn cell(cells: &[Cell], m: Method, r: RewardVariant) -> &Cell {
    cells.iter().find(|c| c.method == m && c.reward == r).unwrap()
}

fn learning_success(cells: &[Cell]) -> Line {
    let parts: Vec<String> = cells
        .iter()
        .map(|c| format!("{}/{} {:.3}", c.method.name(), c.reward.name(), c.first.solved as f64 / LEARN_REPS as f64))
        .collect();
    let ok = cells.iter().all(|c| c.first.solved as f64 / LEARN_REPS as f64 >= 0.90);
    line(5, ok, format!("|S|/{LEARN_REPS} >= 0.90 in every cell: {}", parts.join(", ")))
}

fn smoothing_trend(cells: &[Cell]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [RewardVariant::R1, RewardVariant::R2] {
        let (i, iii) = (cell(cells, Method::I, r).all.smooth, cell(cells, Method::Iii, r).all.smooth);
        ok &= iii > i;
        parts.push(format!("{}: (i) {i}, (iii) {iii}", r.name()));
    }
    line(6, ok, format!("|S_c|(iii) > |S_c|(i) at {TREND_REPS} runs; {}", parts.join("; ")))
}

fn reward_effect(cells: &[Cell]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [Method::I, Method::Ii] {
        let r1 = cell(cells, m, RewardVariant::R1).all.mean_m_c.unwrap_or(f64::NAN);
        let r2 = cell(cells, m, RewardVariant::R2).all.mean_m_c.unwrap_or(f64::NAN);
        ok &= r2 < r1;
        parts.push(format!("({}) r1 {r1:.1}, r2 {r2:.1}", m.name()));
    }
    line(7, ok, format!("mean m_c over S_c drops from r1 to r2 at {TREND_REPS} runs; {}", parts.join("; ")))
}

fn polarity(cells: &[Cell]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for c in cells {
        let smooth: Vec<_> = c.results.iter().filter(|r| r.smooth).collect();
        let n = smooth.len().max(1) as f64;
        let mean = |i: usize| smooth.iter().map(|r| r.final_theta[i]).sum::<f64>() / n;
        let (t6, t8, t11, t13) = (mean(5), mean(7), mean(10), mean(12));
        ok &= !smooth.is_empty() && t6 > t8 && t13 > t11;
        parts.push(format!("{}/{} {t6:.3}>{t8:.3}, {t13:.3}>{t11:.3}", c.method.name(), c.reward.name()));
    }
    line(8, ok, format!("mean weights over S_c: theta6 > theta8 and theta13 > theta11 in every cell; {}", parts.join("; ")))
}

fn evaluation(cells: &[Cell]) -> Line {
    let tests = evaluation_problems();
    let grid_part = tests[..625].iter().all(|p| [45.0, 55.0, 65.0, 75.0, 85.0].contains(&p.leading_speed));
    let extra = &tests[625..];
    let composition = tests.len() == 697
        && grid_part
        && extra.len() == 72
        && !extra.iter().any(|p| p.leading_speed == 50.0 && p.distance_init == 20.0);
    let mut chain = true;
    let mut parts = Vec::new();
    for c in cells {
        let cfg = MethodConfig::new(c.method, c.reward);
        let results = &c.results[..LEARN_REPS as usize];
        let evals = evaluate_smooth_results(&cfg, results, &tests).expect("evaluation runs");
        let mut s = c.first.clone();
        evaluate_solutions(&mut s, &evals);
        let (sp, spc) = (s.test_solved.unwrap(), s.test_smooth.unwrap());
        chain &= evals.iter().all(|e| e.rows.len() == 697) && spc <= sp && sp <= s.smooth;
        parts.push(format!("{}/{} {spc}<={sp}<={}", c.method.name(), c.reward.name(), s.smooth));
    }
    line(
        9,
        composition && chain,
        format!("697 test problems (625 + 72): {composition}; |S'_c| <= |S'| <= |S_c| on the first {LEARN_REPS} runs: {}", parts.join(", ")),
    )
}

fn reproducibility() -> Line {
    let dir = tempfile::tempdir().expect("temp dir");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let st = Command::new(env!("CARGO_BIN_EXE_fuzzypg"))
            .args(["learn", "--method", "iii", "--reward", "r2", "--reps", "8", "--seed", "42"])
            .arg("--out")
            .arg(&out)
            .env_remove("FUZZYPG_SEED")
            .output()
            .expect("binary runs");
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let mut files = vec!["results.csv".to_string(), "summary.csv".to_string()];
    files.extend((42..50).map(|s| format!("weights/{s}.json")));
    let same = files.iter().all(|f| fs::read(a.join(f)).ok().is_some() && fs::read(a.join(f)).ok() == fs::read(b.join(f)).ok());
    line(10, same, format!("two `learn` runs with the same flags give byte-identical results.csv and {} weight files", files.len() - 2))
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let t = Instant::now();
    let checks = validation_suite(1000, 2024).expect("oracle suite");
    let secs = t.elapsed().as_secs_f64();

    let mut lines = vec![gradients(&checks, secs), minimizer(&checks), distributions(&checks), dynamics()];
    let cells = run_cells();
    lines.push(learning_success(&cells));
    lines.push(smoothing_trend(&cells));
    lines.push(reward_effect(&cells));
    lines.push(polarity(&cells));
    lines.push(evaluation(&cells));
    lines.push(reproducibility());

    let failed: Vec<u32> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    println!("acceptance: {}/{} criteria pass; failing: {failed:?}", lines.len() - failed.len(), lines.len());
    if !failed.is_empty() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
