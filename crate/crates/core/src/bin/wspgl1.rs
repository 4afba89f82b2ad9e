use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};

use wspgl1::config::{
    apply_driver_setting, apply_plan_settings, driver_settings, parse_settings, plan_settings,
    render_settings, Settings,
};
use wspgl1::drivers::DriverConfig;
use wspgl1::harness::{
    product_ratio, run_algorithm, run_grid_with, summarize, trace_paths, write_records_csv,
    write_summary_csv, write_traces, Algorithm, Cell, ExperimentPlan, Fraction, GridObserver,
    SummaryRow, TrialInstance, TrialRecord,
};
use wspgl1::vecops::{norm2, relative_error};
use wspgl1::{Error, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "wspgl1",
    version,
    about = "Sparse recovery by weighted Pareto-curve root finding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover one random sparse signal and report the outcome.
    Recover(RecoverArgs),
    /// Run a phase-transition grid and write per-trial and summary CSVs.
    Phase(PhaseArgs),
    /// Write the Newton traces of SPGL1, WSPGL1 and the oracle for one instance.
    Path(PathArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Number of measurements.
    #[arg(long = "n", default_value_t = 500)]
    rows: usize,
    /// Signal length.
    #[arg(long = "N", default_value_t = 2000)]
    cols: usize,
    /// Number of nonzeros in the planted signal.
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target residual relative to ‖y‖₂.
    #[arg(long = "epsilon-rel", default_value_t = 1e-6)]
    epsilon_rel: f64,
    #[arg(long)]
    omega: Option<f64>,
    /// Driver settings file (key = value); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Wspgl1)]
    algorithm: AlgorithmArg,
    #[arg(long = "success-threshold", default_value_t = 1e-3)]
    success_threshold: f64,
    /// Write the recovered signal here, one value per line, with the run's
    /// settings in `<output>.cfg`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PhaseArgs {
    /// Plan file (key = value); inline flags take precedence.
    #[arg(long = "plan-file", alias = "config")]
    plan_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Full)]
    preset: Preset,
    #[arg(long = "N")]
    signal_len: Option<usize>,
    /// Measurement counts as fractions of N, e.g. 1/10,1/4,1/2.
    #[arg(long = "n-fractions", value_delimiter = ',')]
    n_fractions: Option<Vec<String>>,
    /// Sparsity ratios k/n, e.g. 0.1,0.2.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of spgl1, wspgl1, oracle, irwl1.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    algorithms: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "success-threshold")]
    success_threshold: Option<f64>,
    #[arg(long = "epsilon-rel")]
    epsilon_rel: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Record wall-clock times (makes the CSV run-dependent).
    #[arg(long = "wall-time")]
    wall_time: bool,
    /// Worker threads for trials; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Spgl1,
    Wspgl1,
    Oracle,
    Irwl1,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Spgl1 => Algorithm::Spgl1,
            AlgorithmArg::Wspgl1 => Algorithm::Wspgl1,
            AlgorithmArg::Oracle => Algorithm::Oracle,
            AlgorithmArg::Irwl1 => Algorithm::Irwl1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Full,
    Desk,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Recover(args) => cmd_recover(args),
        Command::Phase(args) => cmd_phase(args).map(|()| 0),
        Command::Path(args) => cmd_path(args).map(|()| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn read_settings(path: &Path) -> Result<Settings> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    parse_settings(&text)
}

impl InstanceArgs {
    fn driver(&self) -> Result<DriverConfig> {
        let mut cfg = DriverConfig::default();
        if let Some(path) = &self.config {
            for (key, value) in read_settings(path)? {
                if !apply_driver_setting(&mut cfg, &key, &value)? {
                    return Err(Error::InvalidArgument(format!("unknown setting '{key}'")));
                }
            }
        }
        if let Some(omega) = self.omega {
            cfg.omega = omega;
        }
        cfg.validate(self.rows, self.cols)?;
        Ok(cfg)
    }

    fn generate(&self) -> Result<TrialInstance> {
        if self.k == 0 || self.k > self.cols {
            return Err(Error::InvalidArgument(format!(
                "--k must lie in 1..={}, got {}",
                self.cols, self.k
            )));
        }
        if !(self.epsilon_rel.is_finite() && self.epsilon_rel >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "--epsilon-rel must be non-negative, got {}",
                self.epsilon_rel
            )));
        }
        let cell = Cell {
            signal_len: self.cols,
            rows: self.rows,
            sparsity: self.k,
            ratio: self.k as f64 / self.rows as f64,
        };
        TrialInstance::generate(cell, 0, self.seed, self.epsilon_rel)
    }

    fn snapshot(&self, cfg: &DriverConfig) -> Settings {
        let mut s = Settings::new();
        driver_settings(cfg, &mut s);
        s.insert("n".into(), self.rows.to_string());
        s.insert("N".into(), self.cols.to_string());
        s.insert("k".into(), self.k.to_string());
        s.insert("seed".into(), self.seed.to_string());
        s.insert("epsilon_rel".into(), format!("{:?}", self.epsilon_rel));
        s
    }
}

fn cmd_recover(args: RecoverArgs) -> Result<u8> {
    if args.success_threshold.is_nan() || args.success_threshold <= 0.0 {
        return Err(Error::InvalidArgument(
            "--success-threshold must be positive".into(),
        ));
    }
    let cfg = args.instance.driver()?;
    let instance = args.instance.generate()?;
    let algorithm = Algorithm::from(args.algorithm);
    let result = run_algorithm(algorithm, &instance, &cfg, &Default::default())?;
    let rel_error = relative_error(&result.x_hat, &instance.signal.values);
    let y = &instance.measurement.y;
    let ax = instance.op.apply(&result.x_hat)?;
    let residual: Vec<f64> = y.iter().zip(&ax).map(|(a, b)| a - b).collect();

    let mut out = io::stdout().lock();
    writeln!(out, "algorithm     {algorithm}")?;
    writeln!(
        out,
        "instance      n={} N={} k={} seed={}",
        args.instance.rows, args.instance.cols, args.instance.k, args.instance.seed
    )?;
    writeln!(out, "success       {}", rel_error <= args.success_threshold)?;
    writeln!(out, "rel_error     {rel_error:e}")?;
    writeln!(out, "residual      {:e}", norm2(&residual))?;
    writeln!(out, "epsilon       {:e}", instance.measurement.epsilon)?;
    writeln!(out, "newton_iters  {}", result.newton_iters)?;
    writeln!(out, "products      {}", result.total_products)?;
    writeln!(out, "converged     {}", result.converged)?;

    if let Some(path) = &args.output {
        let mut file = BufWriter::new(fs::File::create(path)?);
        for v in &result.x_hat {
            writeln!(file, "{v:?}")?;
        }
        file.flush()?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".cfg");
        let mut snapshot = args.instance.snapshot(&cfg);
        snapshot.insert("algorithm".into(), algorithm.to_string());
        fs::write(sidecar, render_settings(&snapshot))?;
    }
    Ok(if result.converged {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn cmd_path(args: PathArgs) -> Result<()> {
    let cfg = args.instance.driver()?;
    let instance = args.instance.generate()?;
    fs::create_dir_all(&args.out)?;
    fs::write(
        args.out.join("run.cfg"),
        render_settings(&args.instance.snapshot(&cfg)),
    )?;
    let traces = trace_paths(
        &instance.op,
        &instance.measurement,
        &instance.signal.support,
        &cfg,
    )?;
    let paths = write_traces(&args.out, &traces)?;
    let mut out = io::stdout().lock();
    for ((alg, res), path) in traces.iter().zip(&paths) {
        let (tau, residual) = res
            .trace
            .points
            .last()
            .map_or((0.0, 0.0), |p| (p.tau, p.residual_norm));
        writeln!(
            out,
            "{alg:<7} points={:<3} tau={tau:e} residual={residual:e} rel_error={:e} -> {}",
            res.trace.points.len(),
            relative_error(&res.x_hat, &instance.signal.values),
            path.display()
        )?;
    }
    Ok(())
}

impl PhaseArgs {
    fn plan(&self) -> Result<ExperimentPlan> {
        let mut plan = match self.preset {
            Preset::Full => ExperimentPlan::full(),
            Preset::Desk => ExperimentPlan::desk(),
        };
        if let Some(path) = &self.plan_file {
            apply_plan_settings(&mut plan, &read_settings(path)?)?;
        }
        if let Some(v) = self.signal_len {
            plan.signal_len = v;
        }
        if let Some(v) = &self.n_fractions {
            plan.n_fractions = v
                .iter()
                .map(|s| s.parse::<Fraction>())
                .collect::<Result<_>>()?;
        }
        if let Some(v) = &self.ratios {
            plan.sparsity_ratios = v.clone();
        }
        if let Some(v) = self.trials {
            plan.trials = v;
        }
        if let Some(v) = &self.algorithms {
            plan.algorithms = v
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<Algorithm>())
                .collect::<Result<_>>()?;
        }
        if let Some(v) = self.seed {
            plan.seed_base = v;
        }
        if let Some(v) = self.success_threshold {
            plan.success_threshold = v;
        }
        if let Some(v) = self.epsilon_rel {
            plan.epsilon_rel = v;
        }
        if let Some(v) = self.omega {
            plan.driver.omega = v;
        }
        if self.wall_time {
            plan.record_wall_time = true;
        }
        plan.validate()?;
        Ok(plan)
    }
}

struct Progress {
    done: AtomicUsize,
    total: usize,
}

impl GridObserver for Progress {
    fn cell_finished(&self, cell: &Cell, records: &[TrialRecord]) {
        let done = self.done.fetch_add(1, Ordering::Relaxed) + 1;
        let mut line = format!(
            "[{done}/{}] n={} k={}",
            self.total, cell.rows, cell.sparsity
        );
        let mut algs: Vec<Algorithm> = records.iter().map(|r| r.algorithm).collect();
        algs.sort();
        algs.dedup();
        for alg in algs {
            let rs: Vec<_> = records.iter().filter(|r| r.algorithm == alg).collect();
            let ok = rs.iter().filter(|r| r.success).count();
            line.push_str(&format!("  {alg} {ok}/{}", rs.len()));
        }
        eprintln!("{line}");
    }
}

fn cmd_phase(args: PhaseArgs) -> Result<()> {
    let plan = args.plan()?;
    if args.jobs == Some(0) {
        return Err(Error::InvalidArgument("--jobs must be positive".into()));
    }
    fs::create_dir_all(&args.out)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", args.out.display())))?;
    fs::write(
        args.out.join("run.cfg"),
        render_settings(&plan_settings(&plan)),
    )?;

    let progress = Progress {
        done: AtomicUsize::new(0),
        total: plan.cells().len(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let records = pool.install(|| run_grid_with(&plan, &progress))?;
    let summary = summarize(&records)?;

    let mut file = BufWriter::new(fs::File::create(args.out.join("records.csv"))?);
    write_records_csv(&mut file, &records)?;
    file.flush()?;
    let mut file = BufWriter::new(fs::File::create(args.out.join("summary.csv"))?);
    write_summary_csv(&mut file, &summary)?;
    file.flush()?;

    let mut stdout = io::stdout().lock();
    print_summary(&mut stdout, &summary)?;
    if let Some(ratio) = product_ratio(&records, Algorithm::Wspgl1, Algorithm::Spgl1) {
        writeln!(stdout, "mean products wspgl1/spgl1: {ratio:.3}")?;
    }
    Ok(())
}

fn print_summary(out: &mut impl Write, rows: &[SummaryRow]) -> Result<()> {
    writeln!(
        out,
        "{:<8} {:>6} {:>5} {:>5} {:>6} {:>8} {:>12} {:>10}",
        "alg", "N", "n", "k", "k/n", "success", "products", "rel_err"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<8} {:>6} {:>5} {:>5} {:>6.2} {:>8.2} {:>12.1} {:>10.2e}",
            r.algorithm.as_str(),
            r.signal_len,
            r.rows,
            r.sparsity,
            r.ratio,
            r.success_rate,
            r.mean_products,
            r.mean_error
        )?;
    }
    Ok(())
}
