//! Phase-transition experiments: grid generation, per-trial recovery runs,
//! success counting, cost accounting and CSV emission.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{solve_irwl1, IrwConfig};
use crate::drivers::{
    solve_oracle_weighted, solve_spgl1, solve_wspgl1, DriverConfig, ParetoTrace, RecoveryResult,
};
use crate::error::{Error, Result};
use crate::linop::{Measurement, MeasurementOperator, SparseSignal};
use crate::vecops::relative_error;

pub const RECORD_HEADER: &str =
    "algorithm,N,n,k,trial,seed,success,rel_error,newton_iters,products,wall_time_s";
pub const SUMMARY_HEADER: &str =
    "algorithm,N,n,k,k_over_n,trials,successes,success_rate,mean_products,mean_error,mean_newton_iters";
pub const TRACE_HEADER: &str = "point_index,tau,residual_norm,lambda,weighted";

/// Sorting follows declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Spgl1,
    Wspgl1,
    Oracle,
    Irwl1,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::Spgl1, Self::Wspgl1, Self::Oracle, Self::Irwl1];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Spgl1 => "spgl1",
            Self::Wspgl1 => "wspgl1",
            Self::Oracle => "oracle",
            Self::Irwl1 => "irwl1",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

/// A measurement fraction `n / N` such as `1/4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: u32,
    pub den: u32,
}

impl Fraction {
    pub fn new(num: u32, den: u32) -> Self {
        Self { num, den }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `round(len · num / den)`, halves rounded up.
    pub fn of(self, len: usize) -> usize {
        let den = self.den as u64;
        ((len as u64 * self.num as u64 * 2 + den) / (2 * den)) as usize
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected a fraction like 1/4, got '{s}'"));
        let (a, b) = s.trim().split_once('/').ok_or_else(bad)?;
        let num = a.trim().parse().map_err(|_| bad())?;
        let den = b.trim().parse().map_err(|_| bad())?;
        Ok(Self { num, den })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    /// Ambient dimension `N`.
    pub signal_len: usize,
    pub n_fractions: Vec<Fraction>,
    /// Sparsity ratios `k / n`.
    pub sparsity_ratios: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed_base: u64,
    /// A trial succeeds when `‖x̂ − x‖₂ / ‖x‖₂ ≤ success_threshold`.
    pub success_threshold: f64,
    /// Noiseless target `ε = epsilon_rel · ‖y‖₂`.
    pub epsilon_rel: f64,
    /// When false, `wall_time_s` is written as 0 so output is reproducible
    /// byte for byte.
    pub record_wall_time: bool,
    pub driver: DriverConfig,
    pub irw: IrwConfig,
}

impl ExperimentPlan {
    /// The full-size comparison: `N = 2000`, `n ∈ {N/10, N/4, N/2}`,
    /// `k/n ∈ {0.1, …, 0.5}`, 100 trials.
    pub fn full() -> Self {
        Self {
            signal_len: 2000,
            n_fractions: vec![
                Fraction::new(1, 10),
                Fraction::new(1, 4),
                Fraction::new(1, 2),
            ],
            sparsity_ratios: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            trials: 100,
            algorithms: vec![Algorithm::Spgl1, Algorithm::Wspgl1, Algorithm::Irwl1],
            seed_base: 0,
            success_threshold: 1e-3,
            epsilon_rel: 1e-6,
            record_wall_time: false,
            driver: DriverConfig::default(),
            irw: IrwConfig::default(),
        }
    }

    /// Same grid shape at `N = 400` with 50 trials.
    pub fn desk() -> Self {
        Self {
            signal_len: 400,
            trials: 50,
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.signal_len == 0 {
            bad.push("N must be positive".to_string());
        }
        if self.n_fractions.is_empty() {
            bad.push("n_fractions is empty".to_string());
        }
        for f in &self.n_fractions {
            if f.den == 0 || f.num == 0 || f.num >= f.den {
                bad.push(format!("n fraction {f} outside (0, 1)"));
            } else if f.of(self.signal_len) == 0 {
                bad.push(format!(
                    "n fraction {f} gives n = 0 at N = {}",
                    self.signal_len
                ));
            }
        }
        if self.sparsity_ratios.is_empty() {
            bad.push("sparsity_ratios is empty".to_string());
        }
        for r in &self.sparsity_ratios {
            if !(*r > 0.0 && *r < 1.0) {
                bad.push(format!("sparsity ratio {r} outside (0, 1)"));
            }
        }
        if self.trials == 0 {
            bad.push("trials must be at least 1".to_string());
        }
        if self.algorithms.is_empty() {
            bad.push("algorithm list is empty".to_string());
        }
        if !(self.success_threshold > 0.0) {
            bad.push("success_threshold must be positive".to_string());
        }
        if !(self.epsilon_rel >= 0.0 && self.epsilon_rel < 1.0) {
            bad.push("epsilon_rel must lie in [0, 1)".to_string());
        }
        if self.irw.outer_iters == 0 {
            bad.push("irwl1 outer_iters must be positive".to_string());
        }
        if !(self.irw.delta > 0.0) {
            bad.push("irwl1 delta must be positive".to_string());
        }
        if bad.is_empty() {
            for cell in self.cells() {
                if let Err(e) = self.driver.validate(cell.rows, self.signal_len) {
                    bad.push(format!("n = {}: {e}", cell.rows));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidPlan(bad))
        }
    }

    /// Grid cells in plan order; `k = round(ratio · n)`, at least 1.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for f in &self.n_fractions {
            let rows = f.of(self.signal_len);
            for &ratio in &self.sparsity_ratios {
                cells.push(Cell {
                    signal_len: self.signal_len,
                    rows,
                    sparsity: ((ratio * rows as f64).round() as usize).max(1),
                    ratio,
                });
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub signal_len: usize,
    pub rows: usize,
    pub sparsity: usize,
    pub ratio: f64,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial: `seed_base XOR mix(mix(mix(n) ^ k) ^ trial)`. It does
/// not depend on the algorithm, so all algorithms see the same data.
pub fn trial_seed(seed_base: u64, rows: usize, sparsity: usize, trial: usize) -> u64 {
    seed_base ^ mix64(mix64(mix64(rows as u64) ^ sparsity as u64) ^ trial as u64)
}

/// One generated problem: operator, planted signal and its measurement.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    pub op: MeasurementOperator,
    pub signal: SparseSignal,
    pub measurement: Measurement,
}

impl TrialInstance {
    /// The operator is drawn from `mix(seed ^ 1)` and the signal from
    /// `mix(seed ^ 2)`.
    pub fn generate(cell: Cell, trial: usize, seed: u64, epsilon_rel: f64) -> Result<Self> {
        let op = MeasurementOperator::gaussian(cell.rows, cell.signal_len, mix64(seed ^ 1))?;
        let signal = SparseSignal::random(cell.signal_len, cell.sparsity, mix64(seed ^ 2))?;
        let measurement = Measurement::noiseless(&op, &signal, epsilon_rel)?;
        op.reset_counters();
        Ok(Self {
            cell,
            trial,
            seed,
            op,
            signal,
            measurement,
        })
    }
}

pub fn run_algorithm(
    algorithm: Algorithm,
    instance: &TrialInstance,
    driver: &DriverConfig,
    irw: &IrwConfig,
) -> Result<RecoveryResult> {
    let (op, meas) = (&instance.op, &instance.measurement);
    match algorithm {
        Algorithm::Spgl1 => solve_spgl1(op, meas, driver),
        Algorithm::Wspgl1 => solve_wspgl1(op, meas, driver),
        Algorithm::Oracle => solve_oracle_weighted(op, meas, &instance.signal.support, driver),
        Algorithm::Irwl1 => {
            let cfg = IrwConfig {
                driver: driver.clone(),
                ..irw.clone()
            };
            solve_irwl1(op, meas, &cfg)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub signal_len: usize,
    pub rows: usize,
    pub sparsity: usize,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub rel_error: f64,
    pub newton_iters: usize,
    pub products: u64,
    pub wall_time_s: f64,
}

impl TrialRecord {
    fn sort_key(&self) -> (Algorithm, usize, usize, usize) {
        (self.algorithm, self.rows, self.sparsity, self.trial)
    }
}

/// Hooks into [`run_grid_with`]. Both methods may be called from worker
/// threads.
pub trait GridObserver: Sync {
    fn trial_finished(
        &self,
        _instance: &TrialInstance,
        _algorithm: Algorithm,
        _result: &RecoveryResult,
    ) {
    }
    fn cell_finished(&self, _cell: &Cell, _records: &[TrialRecord]) {}
}

impl GridObserver for () {}

pub fn run_grid(plan: &ExperimentPlan) -> Result<Vec<TrialRecord>> {
    run_grid_with(plan, &())
}

/// Runs every selected algorithm on every trial of every cell. Cells run in
/// plan order; trials within a cell run in parallel on the current rayon
/// pool. The returned records are sorted by `(algorithm, n, k, trial)`.
pub fn run_grid_with(
    plan: &ExperimentPlan,
    observer: &dyn GridObserver,
) -> Result<Vec<TrialRecord>> {
    plan.validate()?;
    let mut records = Vec::new();
    for cell in plan.cells() {
        let cell_records: Vec<Vec<TrialRecord>> = (0..plan.trials)
            .into_par_iter()
            .map(|trial| run_trial(plan, cell, trial, observer))
            .collect::<Result<_>>()?;
        let cell_records: Vec<TrialRecord> = cell_records.into_iter().flatten().collect();
        observer.cell_finished(&cell, &cell_records);
        records.extend(cell_records);
    }
    records.sort_by_key(TrialRecord::sort_key);
    Ok(records)
}

fn run_trial(
    plan: &ExperimentPlan,
    cell: Cell,
    trial: usize,
    observer: &dyn GridObserver,
) -> Result<Vec<TrialRecord>> {
    let seed = trial_seed(plan.seed_base, cell.rows, cell.sparsity, trial);
    let instance = TrialInstance::generate(cell, trial, seed, plan.epsilon_rel)?;
    let mut out = Vec::with_capacity(plan.algorithms.len());
    for &algorithm in &plan.algorithms {
        let start = Instant::now();
        let result = run_algorithm(algorithm, &instance, &plan.driver, &plan.irw)?;
        let wall_time_s = if plan.record_wall_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let rel_error = relative_error(&result.x_hat, &instance.signal.values);
        observer.trial_finished(&instance, algorithm, &result);
        out.push(TrialRecord {
            algorithm,
            signal_len: cell.signal_len,
            rows: cell.rows,
            sparsity: cell.sparsity,
            trial,
            seed,
            success: rel_error <= plan.success_threshold,
            rel_error,
            newton_iters: result.newton_iters,
            products: result.total_products,
            wall_time_s,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub signal_len: usize,
    pub rows: usize,
    pub sparsity: usize,
    pub ratio: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_products: f64,
    pub mean_error: f64,
    pub mean_newton_iters: f64,
}

/// Per-(algorithm, n, k) success rates and means, using each record's
/// stored success flag.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    summarize_by(records, |r| r.success)
}

/// Like [`summarize`] but re-derives success from the raw error.
pub fn summarize_at(records: &[TrialRecord], success_threshold: f64) -> Result<Vec<SummaryRow>> {
    summarize_by(records, |r| r.rel_error <= success_threshold)
}

fn summarize_by(
    records: &[TrialRecord],
    success: impl Fn(&TrialRecord) -> bool,
) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::Empty("no trial records to summarize"));
    }
    let mut groups: BTreeMap<(Algorithm, usize, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.algorithm, r.rows, r.sparsity))
            .or_default()
            .push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((algorithm, rows, sparsity), rs)| {
            let trials = rs.len();
            let successes = rs.iter().filter(|r| success(r)).count();
            let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
                rs.iter().map(|r| f(r)).sum::<f64>() / trials as f64
            };
            SummaryRow {
                algorithm,
                signal_len: rs[0].signal_len,
                rows,
                sparsity,
                ratio: sparsity as f64 / rows as f64,
                trials,
                successes,
                success_rate: successes as f64 / trials as f64,
                mean_products: mean(&|r| r.products as f64),
                mean_error: mean(&|r| r.rel_error),
                mean_newton_iters: mean(&|r| r.newton_iters as f64),
            }
        })
        .collect())
}

/// Mean products of `algorithm` over mean products of `baseline`, taken over
/// all of their records. `None` if either is missing.
pub fn product_ratio(
    records: &[TrialRecord],
    algorithm: Algorithm,
    baseline: Algorithm,
) -> Option<f64> {
    let mean = |alg: Algorithm| {
        let (sum, count) = records
            .iter()
            .filter(|r| r.algorithm == alg)
            .fold((0.0, 0usize), |(s, c), r| (s + r.products as f64, c + 1));
        (count > 0).then(|| sum / count as f64)
    };
    Some(mean(algorithm)? / mean(baseline)?)
}

pub fn write_records_csv<W: Write>(mut out: W, records: &[TrialRecord]) -> Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:?},{},{},{:?}",
            r.algorithm,
            r.signal_len,
            r.rows,
            r.sparsity,
            r.trial,
            r.seed,
            u8::from(r.success),
            r.rel_error,
            r.newton_iters,
            r.products,
            r.wall_time_s
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in rows {
        writeln!(
            out,
            "{},{},{},{},{:?},{},{},{:?},{:?},{:?},{:?}",
            s.algorithm,
            s.signal_len,
            s.rows,
            s.sparsity,
            s.ratio,
            s.trials,
            s.successes,
            s.success_rate,
            s.mean_products,
            s.mean_error,
            s.mean_newton_iters
        )?;
    }
    Ok(())
}

pub fn write_trace_csv<W: Write>(mut out: W, trace: &ParetoTrace) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for (i, p) in trace.points.iter().enumerate() {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{}",
            i,
            p.tau,
            p.residual_norm,
            p.lambda,
            u8::from(p.weighted)
        )?;
    }
    Ok(())
}

/// Runs SPGL1, WSPGL1 and the oracle-weighted driver on one instance and
/// returns their Newton traces. Each trace's `tau` is the radius of the
/// subproblem solved: `‖x‖₁` for SPGL1, `‖x‖₁,w` for the weighted drivers.
pub fn trace_paths(
    op: &MeasurementOperator,
    meas: &Measurement,
    true_support: &[usize],
    cfg: &DriverConfig,
) -> Result<Vec<(Algorithm, RecoveryResult)>> {
    Ok(vec![
        (Algorithm::Spgl1, solve_spgl1(op, meas, cfg)?),
        (Algorithm::Wspgl1, solve_wspgl1(op, meas, cfg)?),
        (
            Algorithm::Oracle,
            solve_oracle_weighted(op, meas, true_support, cfg)?,
        ),
    ])
}

/// Writes `trace_<algorithm>.csv` for each trace into `dir`.
pub fn write_traces(dir: &Path, traces: &[(Algorithm, RecoveryResult)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    traces
        .iter()
        .map(|(alg, res)| {
            let path = dir.join(format!("trace_{alg}.csv"));
            let file = std::io::BufWriter::new(fs::File::create(&path)?);
            write_trace_csv(file, &res.trace)?;
            Ok(path)
        })
        .collect()
}
