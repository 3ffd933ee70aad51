use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use zogd::harness::battery::{self, BatteryOptions};
use zogd::harness::config::{resolve_out_dir, ExperimentConfig, ProblemConfig};
use zogd::harness::montecarlo::{plan, run_monte_carlo};
use zogd::harness::report::{emit_all, write_file};
use zogd::optimizer::{run_trajectory, save_trajectory_csv, RunParams};
use zogd::oracles::Regime;
use zogd::schedules::{
    comparison_table, cvx_schedule, nc_schedule, sc_schedule, write_comparison_csv, CompareInputs,
    ScheduleReport,
};
use zogd::theory::{cvx_bound, nc_bound, sc_bound_terms, BoundInputs};
use zogd::ZoError;

const EXIT_INVALID: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "zogd",
    version,
    about = "Zeroth-order gradient descent with high-probability schedules",
    after_help = "Reports default to the directory in $ZOGD_OUT_DIR, else the current directory."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one trajectory, print a summary and write its per-step CSV.
    Run(RunArgs),
    /// Run a Monte Carlo experiment described by a TOML file.
    Montecarlo(MonteCarloArgs),
    /// Print the horizon and smoothing radius for a regime.
    Schedule(ScheduleArgs),
    /// Evaluate a convergence bound.
    Bounds(BoundsArgs),
    /// Run the distributional and concentration test batteries.
    LemmaCheck(LemmaArgs),
    /// Emit the query-complexity comparison table.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// Suite member, e.g. quad1d, anisotropic_quadratic, cosine_regularized.
    #[arg(long)]
    problem: String,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    curvature: Option<f64>,
    #[arg(long)]
    weight: Option<f64>,
    /// Start at this initial gap along x* + s*1.
    #[arg(long)]
    start_gap: Option<f64>,
    /// Level-set radius for members without an analytic one.
    #[arg(long = "R")]
    radius: Option<f64>,
}

impl ProblemArgs {
    fn config(&self) -> ProblemConfig {
        let mut p = ProblemConfig::named(&self.problem);
        p.d = self.d;
        p.l = self.l;
        p.mu = self.mu;
        p.nu = self.nu;
        p.curvature = self.curvature;
        p.weight = self.weight;
        p.start_gap = self.start_gap;
        p.radius = self.radius;
        p
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Defaults to the problem's own regime.
    #[arg(long, value_parser = parse_regime)]
    regime: Option<Regime>,
    /// Horizon; scheduled when omitted.
    #[arg(long = "T")]
    horizon: Option<u64>,
    /// Smoothing radius; scheduled when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Trajectory CSV path [default: <out dir>/trajectory.csv].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MonteCarloArgs {
    #[arg(long)]
    config: PathBuf,
    /// Exit with status 2 unless the bound dominates the empirical quantile
    /// and the failure rate is within delta plus three standard errors.
    #[arg(long = "assert")]
    assert_pass: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides the worker count in the file.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long, value_parser = parse_regime)]
    regime: Regime,
    #[arg(long)]
    d: usize,
    #[arg(long = "L")]
    l: f64,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    delta0: Option<f64>,
    /// Level-set radius R_eps (convex regime).
    #[arg(long = "R")]
    radius: Option<f64>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, value_parser = parse_regime)]
    regime: Regime,
    #[arg(long)]
    d: usize,
    #[arg(long = "L")]
    l: f64,
    #[arg(long)]
    mu: Option<f64>,
    /// Smoothing radius; taken from the schedule at --eps when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Horizon; taken from the schedule at --eps when omitted.
    #[arg(long = "T")]
    horizon: Option<u64>,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    delta0: f64,
    #[arg(long = "R")]
    radius: Option<f64>,
    /// Convex regime: evaluate the full harmonic form instead of the simple one.
    #[arg(long)]
    full: bool,
}

#[derive(Args, Debug)]
struct LemmaArgs {
    #[arg(long, default_value_t = BatteryOptions::default().seed)]
    seed: u64,
    /// Draws for the distributional and chi-square checks.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 1_000)]
    trajectories: u64,
    #[arg(long, default_value_t = 10_000)]
    recursions: u64,
    #[arg(long)]
    json: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long = "L", default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long = "R", default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    delta0: f64,
    #[arg(long, default_value_t = 1e-2)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse::<Regime>().map_err(|e| e.to_string())
}

/// Rounds to 12 significant digits so values such as 0.9999999999999999
/// print as 1.0.
fn tidy(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

enum Failure {
    Invalid(ZoError),
    CheckFailed(String),
}

impl From<ZoError> for Failure {
    fn from(e: ZoError) -> Self {
        Failure::Invalid(e)
    }
}

type CmdResult = Result<(), Failure>;

fn cmd_run(args: RunArgs) -> CmdResult {
    let mut cfg = ExperimentConfig::new(args.problem.config(), args.eps, args.delta, 1);
    cfg.regime = args.regime;
    cfg.overrides.horizon = args.horizon;
    cfg.overrides.alpha = args.alpha;
    let plan = plan(&cfg)?;
    let params = RunParams {
        horizon: plan.horizon,
        alpha: plan.alpha,
        delta: args.delta,
        epsilon: args.eps,
        l_used: plan.problem.smoothness_l,
        master_seed: args.seed,
        stream_index: args.stream,
    };
    let record = run_trajectory(&plan.problem, &params)?;
    let out = args
        .out
        .unwrap_or_else(|| resolve_out_dir(None).join("trajectory.csv"));
    save_trajectory_csv(&record, &out)?;

    let p = &plan.problem;
    println!("problem: {} (d = {}, {})", p.name, p.dim(), plan.regime);
    println!("T: {}", plan.horizon);
    println!("alpha: {:e}", plan.alpha);
    println!("f(x0): {}", p.value(&p.x0));
    println!("f(x_T): {}", record.f_final);
    if let Some(fs) = p.f_star {
        println!("final gap: {:e}", record.f_final - fs);
    }
    println!("average squared gradient: {:e}", record.average_grad_norm_sq());
    println!("queries: {}", record.queries.count);
    println!("bound: {:e}", plan.bound);
    if let Some(reason) = &record.aborted {
        println!("aborted: {reason}");
    }
    println!("trajectory: {}", out.display());
    Ok(())
}

fn cmd_montecarlo(args: MonteCarloArgs) -> CmdResult {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    let summary = run_monte_carlo(&cfg)?;
    let dir = resolve_out_dir(args.out_dir.as_deref().or(cfg.output.dir.as_deref()));
    let paths = emit_all(&summary, &dir, &cfg.output.stem, &cfg.output.formats)?;

    println!(
        "problem: {} (d = {}, {}), trials: {}, T: {}, alpha: {:e}",
        summary.problem, summary.d, summary.regime, summary.trials, summary.horizon, summary.alpha
    );
    if let Some(q) = summary.quantiles {
        println!(
            "quantiles: median {:e}, 0.9 {:e}, 1-delta {:e}",
            q.q50, q.q90, q.q_conf
        );
    }
    println!("bound: {:e} (dominated: {})", summary.bound, summary.dominated);
    println!(
        "failure rate vs eps: {} (threshold {:.4}, 95% CI [{:.4}, {:.4}])",
        summary.failure_rate, summary.failure_threshold, summary.failure_ci[0], summary.failure_ci[1]
    );
    if let Some(ev) = summary.event_frequencies {
        println!(
            "event failure frequencies: rho1 {}, rho2 {}, alpha_cvx {}",
            ev.rho1.frequency, ev.rho2.frequency, ev.alpha_cvx.frequency
        );
    }
    println!(
        "pathwise violations: {} over {} steps",
        summary.pathwise.total_violations(),
        summary.pathwise.steps_checked
    );
    println!("failed runs: {}, total queries: {}", summary.failed_runs, summary.total_queries);
    for note in &summary.notes {
        println!("note: {note}");
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
    if args.assert_pass && !summary.passes() {
        return Err(Failure::CheckFailed(
            "bound domination or failure-rate check failed".into(),
        ));
    }
    Ok(())
}

fn need(name: &str, v: Option<f64>) -> Result<f64, ZoError> {
    v.ok_or_else(|| ZoError::InvalidInput(format!("--{name} is required for this regime")))
}

#[allow(clippy::too_many_arguments)]
fn schedule_for(
    regime: Regime,
    d: usize,
    l: f64,
    mu: Option<f64>,
    delta0: Option<f64>,
    radius: Option<f64>,
    eps: f64,
    delta: f64,
) -> Result<ScheduleReport, ZoError> {
    match regime {
        Regime::StronglyConvex => sc_schedule(d, l, need("mu", mu)?, need("delta0", delta0)?, eps, delta),
        Regime::Convex => cvx_schedule(d, l, need("R", radius)?, eps, delta),
        Regime::Nonconvex => nc_schedule(d, l, need("delta0", delta0)?, eps, delta),
    }
}

fn cmd_schedule(args: ScheduleArgs) -> CmdResult {
    let r = schedule_for(
        args.regime,
        args.d,
        args.l,
        args.mu,
        args.delta0,
        args.radius,
        args.eps,
        args.delta,
    )?;
    if args.json {
        println!("{}", r.to_json()?);
        return Ok(());
    }
    println!("regime: {}", r.regime);
    if r.trivial {
        println!("trivial: no iterations needed");
    }
    println!("T_raw: {}", r.t_raw);
    println!("T: {}", r.horizon);
    println!("alpha: {:e}", r.alpha);
    println!("tau_delta: {}", r.scale.tau_delta);
    println!("U_T: {}", r.scale.u_t);
    println!("A_alpha_T: {:e}", r.scale.a_alpha_t);
    println!("queries: {}", r.queries());
    println!("baseline_N: {}", r.baseline_n);
    println!("baseline_alpha: {:e}", r.baseline_alpha);
    for (k, v) in &r.terms {
        println!("{k}: {v}");
    }
    for n in &r.notes {
        println!("note: {n}");
    }
    Ok(())
}

fn cmd_bounds(args: BoundsArgs) -> CmdResult {
    let (horizon, alpha) = match (args.horizon, args.alpha) {
        (Some(t), Some(a)) => (t, a),
        (t, a) => {
            let eps = args.eps.ok_or_else(|| {
                ZoError::InvalidInput("give --T and --alpha, or --eps to take the missing ones from the schedule".into())
            })?;
            let s = schedule_for(
                args.regime,
                args.d,
                args.l,
                args.mu,
                Some(args.delta0),
                args.radius,
                eps,
                args.delta,
            )?;
            (t.unwrap_or(s.horizon), a.unwrap_or(s.alpha))
        }
    };
    let inputs = BoundInputs {
        d: args.d,
        l: args.l,
        mu: if args.regime == Regime::StronglyConvex { args.mu } else { None },
        alpha,
        horizon,
        delta: args.delta,
        delta0: args.delta0,
        radius: args.radius,
    };
    let scale = inputs.accumulation()?;
    println!("regime: {}", args.regime);
    println!("T: {horizon}");
    println!("alpha: {alpha:e}");
    println!("A_alpha_T: {:e}", scale.a_alpha_t);
    let bound = match args.regime {
        Regime::StronglyConvex => {
            let (contraction, smoothing) = sc_bound_terms(&inputs)?;
            println!("contraction term: {:?}", tidy(contraction));
            println!("smoothing term: {:?}", tidy(smoothing));
            contraction + smoothing
        }
        Regime::Convex => cvx_bound(&inputs, !args.full)?,
        Regime::Nonconvex => nc_bound(&inputs)?,
    };
    println!("bound: {:?}", tidy(bound));
    Ok(())
}

fn cmd_lemma_check(args: LemmaArgs) -> CmdResult {
    let opts = BatteryOptions {
        seed: args.seed,
        samples: args.samples,
        trajectories: args.trajectories,
        recursions: args.recursions,
    };
    if opts.samples == 0 || opts.trajectories == 0 || opts.recursions == 0 {
        return Err(ZoError::InvalidInput("sample counts must be positive".into()).into());
    }
    let checks = battery::run_all(&opts)?;
    if args.json {
        let text = serde_json::to_string_pretty(&checks)
            .map_err(|e| ZoError::Serialization(e.to_string()))?;
        println!("{text}");
    } else {
        for c in &checks {
            println!(
                "{} {}: {:.4e} vs {:.4e} ({})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.statistic,
                c.threshold,
                c.detail
            );
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::CheckFailed(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> CmdResult {
    let rows = comparison_table(&CompareInputs {
        d: args.d,
        l: args.l,
        mu: args.mu,
        radius: args.radius,
        delta0: args.delta0,
        epsilon: args.eps,
        delta: args.delta,
    })?;
    let bytes = match args.format {
        TableFormat::Csv => {
            let mut buf = Vec::new();
            write_comparison_csv(&rows, &mut buf)?;
            buf
        }
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows)
                .map_err(|e| ZoError::Serialization(e.to_string()))?;
            s.push('\n');
            s.into_bytes()
        }
    };
    match args.out {
        Some(path) => {
            write_file(&path, &bytes)?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INVALID),
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
        Command::Schedule(a) => cmd_schedule(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::LemmaCheck(a) => cmd_lemma_check(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::CheckFailed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}
