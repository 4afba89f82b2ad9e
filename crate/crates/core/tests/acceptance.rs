//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use wspgl1::drivers::{
    default_support_size, pareto_phi, solve_spgl1, solve_wspgl1, DriverConfig, RecoveryResult,
};
use wspgl1::harness::{
    product_ratio, run_grid, run_grid_with, summarize, trace_paths, trial_seed, write_records_csv,
    Algorithm, Cell, ExperimentPlan, GridObserver, TrialInstance, TrialRecord,
};
use wspgl1::linop::{MeasurementOperator, SparseSignal};
use wspgl1::norms::{project_weighted_l1_ball, weighted_l1, WeightVector};
use wspgl1::spg_lasso::SpgConfig;
use wspgl1::vecops::{norm2, relative_error};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Projection by bisection on the soft threshold: `uᵢ = sign(vᵢ)(|vᵢ| − θwᵢ)₊`
/// with `θ` chosen so that `‖u‖₁,w = τ`.
fn bisection_projection(v: &[f64], w: &[f64], tau: f64) -> Vec<f64> {
    let shrink = |theta: f64| -> Vec<f64> {
        v.iter()
            .zip(w)
            .map(|(&a, &wi)| a.signum() * (a.abs() - theta * wi).max(0.0))
            .collect()
    };
    let norm = |u: &[f64]| u.iter().zip(w).map(|(a, wi)| a.abs() * wi).sum::<f64>();
    if norm(v) <= tau {
        return v.to_vec();
    }
    let (mut lo, mut hi) = (
        0.0,
        v.iter()
            .zip(w)
            .map(|(a, wi)| a.abs() / wi)
            .fold(0.0, f64::max),
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm(&shrink(mid)) > tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shrink(0.5 * (lo + hi))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.random_range(1..=20);
        let v: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let w: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..=1.0)).collect();
        let wv = WeightVector::new(w.clone()).unwrap();
        let tau = rng.random_range(0.0..1.2) * weighted_l1(&v, &wv).unwrap();
        let got = project_weighted_l1_ball(&v, &wv, tau).unwrap();
        let want = bisection_projection(&v, &w, tau);
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-8 && elapsed < Duration::from_secs(5),
        format!("1000 projections, max deviation {worst:.1e}, {elapsed:.2?}"),
    )
}

struct CurveInstance {
    op: MeasurementOperator,
    y: Vec<f64>,
    tau_ref: f64,
}

fn curve_instances() -> Vec<CurveInstance> {
    (0..10)
        .map(|seed| {
            let op = MeasurementOperator::gaussian(30, 100, 1000 + seed).unwrap();
            let x = SparseSignal::random(100, 6, 2000 + seed).unwrap();
            let y = op.apply(&x.values).unwrap();
            let tau_ref = x.values.iter().map(|v| v.abs()).sum();
            CurveInstance { op, y, tau_ref }
        })
        .collect()
}

fn curve_spg() -> SpgConfig {
    SpgConfig {
        optimality_tol: 1e-13,
        max_iterations: 100_000,
        ..SpgConfig::default()
    }
}

fn criterion_2(instances: &[CurveInstance]) -> Outcome {
    let start = Instant::now();
    let spg = curve_spg();
    let w = WeightVector::ones(100);
    let mut worst = 0.0f64;
    for inst in instances {
        for frac in [0.15, 0.3, 0.45, 0.6, 0.75] {
            let tau = frac * inst.tau_ref;
            let h = 1e-3 * tau;
            let t = pareto_phi(&inst.op, &inst.y, &w, &[tau - h, tau, tau + h], &spg).unwrap();
            let slope = (t.points[2].residual_norm - t.points[0].residual_norm) / (2.0 * h);
            let lambda = t.points[1].lambda;
            worst = worst.max((slope + lambda).abs() / lambda);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.01 && elapsed < Duration::from_secs(60),
        format!("50 slopes, max |φ' + λ|/λ = {worst:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_3(instances: &[CurveInstance]) -> Outcome {
    let spg = curve_spg();
    let w = WeightVector::ones(100);
    let (mut rises, mut worst_curv) = (0usize, f64::INFINITY);
    for inst in instances {
        let y_norm = norm2(&inst.y);
        let grid: Vec<f64> = (0..=30).map(|i| inst.tau_ref * i as f64 / 30.0).collect();
        let trace = pareto_phi(&inst.op, &inst.y, &w, &grid, &spg).unwrap();
        let phi: Vec<f64> = trace.points.iter().map(|p| p.residual_norm).collect();
        rises += phi.windows(2).filter(|p| p[1] > p[0]).count();
        for p in phi.windows(3) {
            worst_curv = worst_curv.min((p[2] - 2.0 * p[1] + p[0]) / y_norm);
        }
    }
    outcome(
        rises == 0 && worst_curv >= -1e-6,
        format!("{rises} increases, min second difference {worst_curv:.1e}·‖y‖₂"),
    )
}

fn criterion_4() -> Outcome {
    let plan = ExperimentPlan::desk();
    let cfg = DriverConfig::default();
    let (mut checked, mut mismatched) = (0, 0);
    for cell in plan.cells() {
        for trial in 0..2 {
            let seed = trial_seed(plan.seed_base, cell.rows, cell.sparsity, trial);
            let inst = TrialInstance::generate(cell, trial, seed, plan.epsilon_rel).unwrap();
            let a = solve_spgl1(&inst.op, &inst.measurement, &cfg).unwrap();
            let b = solve_wspgl1(&inst.op, &inst.measurement, &cfg).unwrap();
            let (p, q) = (a.trace.points[1], b.trace.points[1]);
            let same = p.tau.to_bits() == q.tau.to_bits()
                && p.residual_norm.to_bits() == q.residual_norm.to_bits()
                && p.lambda.to_bits() == q.lambda.to_bits()
                && !q.weighted;
            checked += 1;
            mismatched += usize::from(!same);
        }
    }
    outcome(
        mismatched == 0,
        format!("{checked} instances, {mismatched} first steps differ"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let plan = ExperimentPlan::desk();
    let cell = Cell {
        signal_len: 400,
        rows: 100,
        sparsity: 20,
        ratio: 0.2,
    };
    // The default root test accepts |‖r‖₂ − ε| up to 1e-6·‖y‖₂, which is ε
    // itself here; comparing residuals at 1% needs a tighter one.
    let cfg = DriverConfig {
        root_tol: 1e-10,
        iteration_budget: None,
        spg: SpgConfig {
            optimality_tol: 1e-10,
            ..SpgConfig::default()
        },
        ..plan.driver.clone()
    };
    for trial in 0..10 {
        let seed = trial_seed(plan.seed_base, cell.rows, cell.sparsity, trial);
        let inst = TrialInstance::generate(cell, trial, seed, plan.epsilon_rel).unwrap();
        let traces = trace_paths(&inst.op, &inst.measurement, &inst.signal.support, &cfg).unwrap();
        let find = |alg: Algorithm| &traces.iter().find(|t| t.0 == alg).unwrap().1;
        let (spgl1, wspgl1, oracle) = (
            find(Algorithm::Spgl1),
            find(Algorithm::Wspgl1),
            find(Algorithm::Oracle),
        );
        if relative_error(&wspgl1.x_hat, &inst.signal.values) > plan.success_threshold {
            continue;
        }
        let shared = spgl1.trace.points[..2] == wspgl1.trace.points[..2];
        let (a, b) = (
            *wspgl1.trace.points.last().unwrap(),
            *oracle.trace.points.last().unwrap(),
        );
        let d_tau = (a.tau - b.tau).abs() / b.tau;
        let d_r = (a.residual_norm - b.residual_norm).abs() / b.residual_norm;
        let elapsed = start.elapsed();
        return outcome(
            shared && d_tau <= 0.01 && d_r <= 0.01 && elapsed < Duration::from_secs(60),
            format!(
                "seed {seed}: first solve shared = {shared}, final τ differs by {:.3}%, ‖r‖₂ by {:.3}%, {elapsed:.2?}",
                100.0 * d_tau,
                100.0 * d_r
            ),
        );
    }
    outcome(false, "no success instance among 10 trials".into())
}

/// Checks, for every successful WSPGL1 trial, that the top-`k_est` entries of
/// `x_hat` cover the large true-support entries.
struct SupportCheck {
    threshold: f64,
    tally: Mutex<(usize, Vec<String>)>,
}

impl GridObserver for SupportCheck {
    fn trial_finished(&self, inst: &TrialInstance, alg: Algorithm, result: &RecoveryResult) {
        if alg != Algorithm::Wspgl1
            || relative_error(&result.x_hat, &inst.signal.values) > self.threshold
        {
            return;
        }
        let x = &inst.signal.values;
        let scale = self.threshold * norm2(x);
        let large: Vec<usize> = inst
            .signal
            .support
            .iter()
            .copied()
            .filter(|&i| x[i].abs() > scale)
            .collect();
        let est = &result.final_support;
        let k_est = default_support_size(inst.cell.rows, inst.cell.signal_len);
        let covered = large.iter().filter(|&&i| est.contains(i)).count();
        let mut tally = self.tally.lock().unwrap();
        tally.0 += 1;
        if covered < large.len().min(k_est) {
            tally.1.push(format!(
                "n={} k={} trial {}: {covered}/{} covered",
                inst.cell.rows,
                inst.cell.sparsity,
                inst.trial,
                large.len()
            ));
        }
    }
}

fn csv(records: &[TrialRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    write_records_csv(&mut out, records).unwrap();
    out
}

fn grid_criteria(report: &mut Vec<(u32, Outcome)>) {
    let plan = ExperimentPlan::desk();
    let check = SupportCheck {
        threshold: plan.success_threshold,
        tally: Mutex::new((0, Vec::new())),
    };
    let start = Instant::now();
    let records = run_grid_with(&plan, &check).unwrap();
    let elapsed = start.elapsed();
    let rows = summarize(&records).unwrap();
    let rate: BTreeMap<(Algorithm, usize, usize), f64> = rows
        .iter()
        .map(|r| ((r.algorithm, r.rows, r.sparsity), r.success_rate))
        .collect();

    println!(
        "  grid N = {}, {} trials per cell, {elapsed:.1?}",
        plan.signal_len, plan.trials
    );
    println!(
        "  {:>4} {:>4} {:>7} {:>7} {:>7}",
        "n", "k", "spgl1", "wspgl1", "irwl1"
    );
    let mut a_fail = Vec::new();
    let mut c_fail = Vec::new();
    let mut mid: Option<(Cell, f64)> = None;
    for cell in plan.cells() {
        let key = |alg| rate[&(alg, cell.rows, cell.sparsity)];
        let (s, w, i) = (
            key(Algorithm::Spgl1),
            key(Algorithm::Wspgl1),
            key(Algorithm::Irwl1),
        );
        println!(
            "  {:>4} {:>4} {s:>7.2} {w:>7.2} {i:>7.2}",
            cell.rows, cell.sparsity
        );
        if w < s - 0.02 - 1e-12 {
            a_fail.push(format!(
                "n={} k={}: {w:.2} < {s:.2}",
                cell.rows, cell.sparsity
            ));
        }
        if i < w - 0.10 - 1e-12 {
            c_fail.push(format!(
                "n={} k={}: {i:.2} < {w:.2} - 0.10",
                cell.rows, cell.sparsity
            ));
        }
        let dist = (s - 0.5).abs();
        if mid.is_none_or(|(_, d)| dist < d) {
            mid = Some((cell, dist));
        }
    }
    let (mid, _) = mid.unwrap();
    let key = |alg| rate[&(alg, mid.rows, mid.sparsity)];
    let gain = key(Algorithm::Wspgl1) - key(Algorithm::Spgl1);
    let b_pass = gain >= 0.10 - 1e-12;
    let pass6 = a_fail.is_empty() && b_pass && c_fail.is_empty();
    report.push((
        6,
        outcome(
            pass6,
            format!(
                "(a) {} cells below SPGL1{}; (b) mid-transition n={} k={}: WSPGL1 - SPGL1 = {gain:+.2}; (c) {} cells with IRWL1 short{}; {elapsed:.1?}",
                a_fail.len(),
                list(&a_fail),
                mid.rows,
                mid.sparsity,
                c_fail.len(),
                list(&c_fail),
            ),
        ),
    ));

    let ratio = product_ratio(&records, Algorithm::Wspgl1, Algorithm::Spgl1).unwrap();
    report.push((
        7,
        outcome(
            ratio <= 2.0,
            format!("mean products WSPGL1/SPGL1 = {ratio:.3}"),
        ),
    ));

    let (checked, misses) = check.tally.into_inner().unwrap();
    report.push((
        8,
        outcome(
            misses.is_empty(),
            format!(
                "{checked} successful trials, {} with uncovered support{}",
                misses.len(),
                list(&misses)
            ),
        ),
    ));

    let again = run_grid(&plan).unwrap();
    let (first, second) = (csv(&records), csv(&again));
    report.push((
        9,
        outcome(
            first == second,
            format!(
                "rerun CSV {} bytes, identical = {}",
                second.len(),
                first == second
            ),
        ),
    ));
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        String::new()
    } else {
        format!(" [{}]", items.join(", "))
    }
}

fn main() -> ExitCode {
    // Skip quietly when listed or filtered by the libtest-style runner.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let curves = curve_instances();
    let mut report = vec![
        (1, criterion_1()),
        (2, criterion_2(&curves)),
        (3, criterion_3(&curves)),
        (4, criterion_4()),
        (5, criterion_5()),
    ];
    for (id, o) in &report {
        println!(
            "criterion {id}: {} {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let before = report.len();
    grid_criteria(&mut report);
    for (id, o) in &report[before..] {
        println!(
            "criterion {id}: {} {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<u32> = report.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", report.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {failed:?}");
        ExitCode::FAILURE
    }
}
