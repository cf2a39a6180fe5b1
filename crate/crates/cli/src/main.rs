//! `rankpert`: spectral analysis of finite-rank perturbations of diagonal
//! operators from the command line.
//!
//! Every subcommand reads an operator specification (JSON), writes a JSON or
//! CSV report to `--out` (stdout by default) and optionally an SVG plot.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical-contract violation,
//! 4 budget exhausted (inconclusive).

mod commands;
mod error;
mod svg;

use clap::{Args, Parser, Subcommand};
use error::{CliError, Result};
use std::path::PathBuf;

/// Environment variable holding the worker-pool size.
const WORKERS_ENV: &str = "RANKPERT_WORKERS";

#[derive(Parser)]
#[command(name = "rankpert", version, about = "Spectral toolkit for diagonal-plus-finite-rank operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Operator specification (JSON).
    #[arg(long, value_name = "PATH")]
    pub spec: Option<PathBuf>,
    /// Report destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Absolute accuracy target for series and root refinement.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Grid cells per side (spectrum scan).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Sample budget (relevant-set search, quadrature nodes).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Dyadic levels (counterexample).
    #[arg(long)]
    pub levels: Option<u32>,
    /// Seed for randomized diagnostics.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write an SVG plot, next to `--out` unless a path is given.
    #[arg(long, value_name = "PATH", num_args = 0..=1)]
    pub svg: Option<Option<PathBuf>>,
}

#[derive(Subcommand)]
enum Command {
    /// Locate eigenvalues in a rectangle by the argument principle.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Scan rectangle `x0,x1,y0,y1`; defaults to a box around the
        /// numerical range.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        region: Option<Vec<f64>>,
    },
    /// Summability conditions and the covering theorem region.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Search for two relevant-set points and check the subspace hypotheses.
    HyperinvariantProbe {
        #[command(flatten)]
        common: Common,
        /// Truncation dimension for the Riesz projections.
        #[arg(long, default_value_t = 50)]
        dim: usize,
    },
    /// Growth table of the dyadic counterexample (CSV).
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// Abscissa at which the series is evaluated.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x: f64,
    },
    /// Riesz projection of a truncation over a contour.
    Riesz {
        #[command(flatten)]
        common: Common,
        /// Truncation dimension; defaults to the full finite dimension.
        #[arg(long)]
        dim: Option<usize>,
        /// Chord abscissa of a chord-plus-arc curve.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "circle")]
        x: Option<f64>,
        /// Side of the chord enclosed by the curve.
        #[arg(long, value_enum, default_value = "plus")]
        side: SideArg,
        /// Circle `re,im,radius`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        circle: Option<Vec<f64>>,
    },
    /// Quasisimilar partner of `T − ξ₀` on a truncation.
    Quasisim {
        #[command(flatten)]
        common: Common,
        /// Shift `re,im`; defaults to `i·(1 + sup|λ|)`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi0: Option<Vec<f64>>,
        /// Truncation dimension; defaults to the full finite dimension.
        #[arg(long)]
        dim: Option<usize>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum SideArg {
    Plus,
    Minus,
}

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
    if n == 0 {
        return Err(CliError::Input(format!("{WORKERS_ENV} must be positive")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    match cli.command {
        Command::Spectrum { common, region } => commands::cmd_spectrum(&common, region.as_deref()),
        Command::Classify { common } => commands::cmd_classify(&common),
        Command::HyperinvariantProbe { common, dim } => commands::cmd_hyperinvariant_probe(&common, dim),
        Command::Counterexample { common, x } => commands::cmd_counterexample(&common, x),
        Command::Riesz {
            common,
            dim,
            x,
            side,
            circle,
        } => commands::cmd_riesz(&common, dim, x, side, circle.as_deref()),
        Command::Quasisim { common, xi0, dim } => commands::cmd_quasisim(&common, xi0.as_deref(), dim),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("rankpert: {e}");
        std::process::exit(e.exit_code());
    }
}
