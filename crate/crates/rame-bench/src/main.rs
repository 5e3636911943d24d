//! Command-line experiment harness for the rame optimizer library.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use rame::core::Termination;
use rame_bench::config::{OptimizerConfig, ProblemConfig, RunConfig};
use rame_bench::grid::{run_grid, DEFAULT_GRID};
use rame_bench::plot::{emit_plot_data, Metric};
use rame_bench::trace_io::write_trace;
use rame_bench::verify::{verify_gradcheck, verify_prop1, verify_theory, VerifyReport};
use rame_bench::exit_code_for;

#[derive(Parser)]
#[command(
    name = "rame-bench",
    version,
    about = "Run, sweep, and verify first-moment adaptive-gradient optimizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer on one problem and write a trace file
    Run(RunArgs),
    /// Sweep the learning-rate grid {1e-1 .. 1e-5} and select a rate
    Grid(GridArgs),
    /// Run a verification suite: prop1, theory, gradcheck, or all
    Verify(VerifyArgs),
    /// Merge traces into a tab-separated file for external plotting
    PlotData(PlotArgs),
}

#[derive(Args, Clone)]
struct CommonRunArgs {
    /// JSON config file mirroring these flags (flags win)
    #[arg(long)]
    config: Option<PathBuf>,
    /// quadratic | pseudo_huber | logistic | mlp_spiral
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Finite-sum component count (logistic)
    #[arg(long)]
    k: Option<usize>,
    /// Condition number (quadratic)
    #[arg(long)]
    cond: Option<f64>,
    /// Dataset size (mlp_spiral)
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    turns: Option<f64>,
    /// Layer sizes, comma separated (mlp_spiral)
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    /// Samples per minibatch component (mlp_spiral)
    #[arg(long)]
    batch: Option<usize>,
    /// rame | shb | adam | rmsprop
    #[arg(long)]
    opt: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Divide alpha by this factor every --alpha-decay-every iterations
    #[arg(long)]
    alpha_decay_factor: Option<f64>,
    #[arg(long)]
    alpha_decay_every: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    /// Budget in passes over the finite sum
    #[arg(long)]
    epochs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stop when the full-gradient l2 norm falls to this value
    #[arg(long)]
    stop_eps: Option<f64>,
    /// deterministic | random | cyclic
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    log_stride: Option<u64>,
    /// Log full iterate/gradient/moment vectors in each record
    #[arg(long)]
    full_state: bool,
}

impl CommonRunArgs {
    /// File config (if any) overridden by explicit flags.
    fn to_config(&self) -> anyhow::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        merge_problem(&mut config.problem, self);
        merge_optimizer(&mut config.optimizer, self);
        if let Some(mode) = &self.mode {
            config.mode = mode.clone();
        }
        if self.budget.is_some() {
            config.budget = self.budget;
        }
        if self.epochs.is_some() {
            config.epochs = self.epochs;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(eps) = self.stop_eps {
            config.stop_eps = eps;
        }
        if self.log_stride.is_some() {
            config.log_stride = self.log_stride;
        }
        if self.full_state {
            config.full_state = true;
        }
        Ok(config)
    }
}

fn merge_problem(target: &mut ProblemConfig, args: &CommonRunArgs) {
    if let Some(name) = &args.problem {
        target.name = name.clone();
    }
    macro_rules! take {
        ($field:ident) => {
            if args.$field.is_some() {
                target.$field = args.$field.clone();
            }
        };
    }
    take!(dim);
    take!(k);
    take!(cond);
    take!(samples);
    take!(noise);
    take!(turns);
    take!(layers);
    take!(batch);
}

fn merge_optimizer(target: &mut OptimizerConfig, args: &CommonRunArgs) {
    if let Some(name) = &args.opt {
        target.name = name.clone();
    }
    macro_rules! take {
        ($field:ident) => {
            if args.$field.is_some() {
                target.$field = args.$field;
            }
        };
    }
    take!(q);
    take!(xi);
    take!(beta);
    take!(beta1);
    take!(beta2);
    take!(eta);
    take!(alpha_decay_factor);
    take!(alpha_decay_every);
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Common learning rate alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// Trace output path (JSON lines)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Directory for the grid result and the per-rate traces
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// prop1 | theory | gradcheck | all
    suite: String,
    /// Steps for the equivalence runs
    #[arg(long, default_value_t = 200)]
    steps: u64,
    /// Tolerance for the equivalence runs
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Gradient threshold for the theorem harness
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    /// Problem dimension for the theorem harness
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value_t = 0.25)]
    q: f64,
    #[arg(long, default_value_t = 0.1)]
    xi: f64,
    /// Fraction of the admissible (beta, alpha) region to use, in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    safety: f64,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Report output path (JSON)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// loss | grad_l2 | val_metric
    #[arg(long, default_value = "loss")]
    metric: String,
    /// Output path for the tab-separated table
    #[arg(long)]
    out: PathBuf,
    /// Trace files to merge
    #[arg(required = true)]
    traces: Vec<PathBuf>,
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<i32> {
    let mut config = args.common.to_config()?;
    if args.alpha.is_some() {
        config.optimizer.alpha = args.alpha;
    }
    let built = config.build()?;
    let trace = rame::optimizers::run_optimizer(
        &built.problem,
        built.problem.default_x0(),
        &built.method,
        &built.settings,
        &built.rng,
    )?;
    write_trace(&args.out, &trace, config.full_state)?;
    match &trace.meta.termination {
        Termination::Diverged { at_t, reason } => {
            eprintln!("run diverged at iteration {at_t} ({reason}); partial trace written");
            Ok(1)
        }
        _ => Ok(0),
    }
}

fn cmd_grid(args: &GridArgs) -> anyhow::Result<i32> {
    let config = args.common.to_config()?;
    if config.optimizer.alpha.is_some() {
        eprintln!("note: configured alpha is ignored; the grid sweeps {DEFAULT_GRID:?}");
    }
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let (result, _) = run_grid(&config, &DEFAULT_GRID, Some(&args.out_dir), config.full_state)?;
    let path = args.out_dir.join("grid.json");
    std::fs::write(&path, serde_json::to_string_pretty(&result)?)?;
    for rate in &result.rates {
        println!(
            "alpha {:>8}: {}",
            format!("{:e}", rate.alpha),
            if rate.diverged {
                "diverged".to_string()
            } else {
                format!(
                    "final loss {:.6e}, final ||g|| {:.3e}{}",
                    rate.final_loss.unwrap_or(f64::NAN),
                    rate.final_grad_l2.unwrap_or(f64::NAN),
                    rate.best_val
                        .map(|v| format!(", best val {v:.4}"))
                        .unwrap_or_default()
                )
            }
        );
    }
    match result.selected_lr {
        Some(lr) => {
            println!("selected_lr {lr:e}");
            Ok(0)
        }
        None => {
            eprintln!("every rate diverged; no rate selected");
            Ok(1)
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<i32> {
    let reports: Vec<VerifyReport> = match args.suite.as_str() {
        "prop1" => vec![verify_prop1(args.steps, args.tol, args.seed)?],
        "theory" => vec![verify_theory(args.eps, args.dim, args.q, args.xi, args.safety)?],
        "gradcheck" => vec![verify_gradcheck(args.seed)?],
        "all" => vec![
            verify_prop1(args.steps, args.tol, args.seed)?,
            verify_theory(args.eps, args.dim, args.q, args.xi, args.safety)?,
            verify_gradcheck(args.seed)?,
        ],
        other => {
            return Err(rame::Error::config(format!(
                "unknown verify suite '{other}' (expected prop1, theory, gradcheck or all)"
            ))
            .into())
        }
    };
    for report in &reports {
        for line in report.render_lines() {
            println!("{line}");
        }
    }
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&reports)?)?;
    }
    if let Some(failure) = reports.iter().find_map(|r| r.first_failure()) {
        eprintln!("verification failed: {}", failure.name);
        return Ok(1);
    }
    Ok(0)
}

fn cmd_plot(args: &PlotArgs) -> anyhow::Result<i32> {
    let metric = Metric::parse(&args.metric)?;
    emit_plot_data(&args.traces, metric, &args.out)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Verify(args) => cmd_verify(args),
        Command::PlotData(args) => cmd_plot(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
