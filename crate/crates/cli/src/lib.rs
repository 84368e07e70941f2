//! Command-line front end for `toric-credit`.
//!
//! Every workflow is a subcommand reading a JSON config (`--config`) and
//! writing CSV or JSON (`--out`, stdout by default). Exit codes: 0 on
//! success, 2 for rejected input, 3 for numerical failure, 64 for usage
//! errors and 74 when output cannot be written.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod reproduce;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::error::CliError;
use crate::output::Sink;

#[derive(Debug, Parser)]
#[command(name = "toric-credit", version, about = "Graphical models of correlated defaults")]
pub struct Cli {
    /// JSON config for the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file, or directory for `reproduce`. Defaults to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Seed for Monte Carlo subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "TORIC_CREDIT_THREADS")]
    pub threads: Option<usize>,
    /// Scale graphical-model losses by `1 - R`.
    #[arg(long, global = true)]
    pub lgd: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit node and edge weights to target marginals.
    Calibrate,
    /// Default-count distribution of a sector model.
    LossDist,
    /// Correlation over an (eta_S, eta_FS) grid.
    CorrSurface,
    /// k-step default-count laws of the multi-period chain.
    MultiLoss,
    /// Monte Carlo paths of the multi-period chain.
    Simulate {
        /// Overrides `paths` in the config.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Tranche spreads from a chain or a loss term structure.
    Price,
    /// Tranche spreads under the one-factor normal copula.
    CopulaPrice,
    /// Copula correlation implied by each tranche spread.
    ImpliedCorr,
    /// Search graphical parameters that flatten the correlation smile.
    FitSmile,
    /// Regenerate the data behind a figure (fig2 to fig9, or all).
    Reproduce { figure: String },
    /// Print the JSON schema of a subcommand's config.
    Schema { subcommand: String },
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("toric-credit: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    let ctx = Context {
        config: cli.config,
        sink: Sink::new(cli.out),
        seed: cli.seed,
        lgd: cli.lgd,
    };
    pool.install(|| match &cli.command {
        Command::Calibrate => commands::calibrate(&ctx),
        Command::LossDist => commands::loss_dist(&ctx),
        Command::CorrSurface => commands::corr_surface(&ctx),
        Command::MultiLoss => commands::multi_loss(&ctx),
        Command::Simulate { paths } => commands::simulate(&ctx, *paths),
        Command::Price => commands::price(&ctx),
        Command::CopulaPrice => commands::copula_price(&ctx),
        Command::ImpliedCorr => commands::implied_corr(&ctx),
        Command::FitSmile => commands::fit_smile(&ctx),
        Command::Reproduce { figure } => reproduce::run(figure, &ctx.sink.directory()?),
        Command::Schema { subcommand } => commands::schema(&ctx, subcommand),
    })
}
