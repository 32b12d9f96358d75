use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orlicz_flow::config::{load_config, Mode};
use orlicz_flow::runner::run_mode;

const DEFAULTS: &str = "\
Defaults (override in the config file):
  grid        512 nodes on S^1, 64 x 128 latitude-longitude on S^2
  solver      dt_max = 1e-2, residual_tol = 1e-6, t_max = 50, c_stab = 0.8,
              stall_window = 500, stall_rel = 1e-3, trace_stride = 1
  general     epsilons = [0.1, 0.05, 0.025], bandwidths = [0.4, 0.2],
              density_floor = 0.05
  body        unit sphere centred at the origin
  seed        0
  output      ./out next to the config file

Exit status:
  0  converged (or the computation finished)
  1  configuration, input or set-up error
  2  timeout or stall
  3  collapse
  4  invariant violation or width-bound violation

Set RAYON_NUM_THREADS to limit the worker threads.";

#[derive(Parser)]
#[command(name = "orlicz-flow", version, about = "Curvature-flow solvers for Orlicz-Minkowski and Christoffel-Minkowski problems", after_help = DEFAULTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a normalized, unnormalized or regularized Orlicz flow.
    Flow(RunArgs),
    /// Solve the Orlicz-Minkowski problem for a general measure.
    Orlicz(RunArgs),
    /// Solve the Christoffel-Minkowski problem.
    Christoffel(RunArgs),
    /// Evaluate an Orlicz norm.
    Norm(RunArgs),
    /// Report geometric quantities of a body.
    Check(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed for perturbed initial bodies; overrides `seed` (default 0).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

impl Command {
    fn split(self) -> (Mode, RunArgs) {
        match self {
            Command::Flow(a) => (Mode::Flow, a),
            Command::Orlicz(a) => (Mode::SolveOrliczGeneral, a),
            Command::Christoffel(a) => (Mode::SolveChristoffel, a),
            Command::Norm(a) => (Mode::OrliczNorm, a),
            Command::Check(a) => (Mode::GeometryCheck, a),
        }
    }
}

fn main() -> ExitCode {
    let (mode, args) = Cli::parse().command.split();
    let mut cfg = match load_config(&args.config, Some(mode)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output.dir = std::path::absolute(&out).unwrap_or(out);
    }
    match run_mode(&cfg) {
        Ok(report) => {
            if !args.quiet {
                println!("{}", report.headline);
                for a in &report.artifacts {
                    eprintln!("wrote {}", a.display());
                }
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
