//! `cppp`: posterior predictive p-values and their calibration from the
//! command line.

mod commands;
mod config;
mod data;
mod error;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "cppp", version, about = "Calibrated posterior predictive p-values")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each overrides the matching key of
/// the `--config` file.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// JSON analysis config, or a run record written by an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Data file (observations, regression CSV or recapture table).
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Posterior draws per ppp estimate.
    #[arg(long = "inner-a", global = true)]
    pub inner_a: Option<usize>,
    /// Null replicates per cppp estimate.
    #[arg(long = "outer-b", global = true)]
    pub outer_b: Option<usize>,
    /// Command parameters as a JSON object; replaces `params` of the config.
    #[arg(long, global = true)]
    pub params: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Model selection for the registry-backed commands.
#[derive(Args, Clone, Debug, Default)]
pub struct ModelArgs {
    /// Registered model name (see `cppp models`).
    #[arg(long)]
    pub model: Option<String>,
    /// Force simulation even where a closed form exists.
    #[arg(long)]
    pub engine: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the registered models.
    Models,
    /// Posterior predictive p-value of the observed data.
    Ppp(ModelArgs),
    /// Calibrated ppp with its Monte Carlo interval.
    Cppp(ModelArgs),
    /// Sample of ppp under the prior predictive, as CSV.
    NullDist(ModelArgs),
    /// ppp, cppp and posterior-predictive cppp curves for the normal mean, as CSV.
    Curves,
    /// Turn correlation guesses into a regression prior.
    Elicit,
    /// Freeman-Tukey check of a capture-recapture table.
    Dipper {
        /// tt (time-varying) or cc (constant) survival and capture.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Calibrated KS checks under a Dirichlet-process and a normal prior.
    CompareNp,
    /// ppp and cppp of a symmetric order-statistic gap across a sweep of priors.
    NewcombTable,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, &cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cppp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
