use std::path::PathBuf;

use clap::{Parser, Subcommand};
use phi4_cli::{parse_lambdas, Mode, Overrides};

#[derive(Parser)]
#[command(name = "phi4", version, about = "Renormalized Phi^4 on the torus: simulation, FTLEs and steering")]
struct Cli {
    /// Experiment config (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: config out_dir, else ./out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "PHI4_WORKERS")]
    workers: Option<usize>,
    /// Base seed (solver.seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run the mode named in --config
    Run,
    /// Integrate from zero (or --input) and write phi.path + diagnostics.csv
    Simulate {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Stationary sample after burn-in; writes phi/z/q paths
    Stationary,
    /// λ_T along a stored q path (--input) or fresh stationary runs
    Ftle {
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Monte Carlo sweep over (alpha, seed) into ftle.csv
    Sweep,
    /// Steer λ_T to each target
    Steer {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambdas: Option<String>,
    },
    /// Compare C_N with the empirical pointwise variance of Z
    WickCheck,
    /// Block and Besov norms of a stored field
    Besov {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    let mut ov = Overrides {
        config: cli.config,
        out: cli.out,
        workers: cli.workers,
        seed: cli.seed,
        ..Overrides::default()
    };
    let mode = match cli.verb {
        Verb::Run => None,
        Verb::Simulate { input } => {
            ov.input = input;
            Some(Mode::Simulate)
        }
        Verb::Stationary => Some(Mode::Stationary),
        Verb::Ftle { alpha, input } => {
            ov.alphas = alpha;
            ov.input = input;
            Some(Mode::Ftle)
        }
        Verb::Sweep => Some(Mode::Sweep),
        Verb::Steer { alpha, lambdas } => {
            ov.alphas = alpha.into_iter().collect();
            match lambdas.as_deref().map(parse_lambdas).transpose() {
                Ok(l) => ov.lambdas = l,
                Err(e) => {
                    eprintln!("phi4: {e}");
                    std::process::exit(e.exit_code());
                }
            }
            Some(Mode::Steer)
        }
        Verb::WickCheck => Some(Mode::WickCheck),
        Verb::Besov { input, beta } => {
            ov.input = input;
            ov.beta = beta;
            Some(Mode::Besov)
        }
    };
    std::process::exit(phi4_cli::run(mode, &ov));
}
