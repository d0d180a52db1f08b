//! `asar`: command-line front end of the SAR ADC simulator.
//!
//! Every command writes CSV and mirrored JSON into the output directory,
//! together with `manifest.json` and the configuration it ran with.
//!
//! Exit codes: 0 success, 1 configuration error, 2 precondition error,
//! 3 `--check` failed.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "asar", version, about = "Asynchronous SAR ADC behavioral simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Configuration document (key = value or JSON); reference defaults if omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, env = "ASAR_OUT_DIR", default_value = "asar_out")]
    pub out: PathBuf,
    /// Worker threads for Monte Carlo batches; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Evaluate the command's pass/fail check and exit 3 on failure.
    #[arg(long, global = true)]
    pub check: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Coherent tone through the converter; spectrum and metrics.
    /// Check: SNDR within 3 dB of the noise-budget prediction.
    Simulate {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        bin: usize,
        /// Differential peak amplitude in volts.
        #[arg(long, default_value_t = 0.75)]
        amplitude: f64,
    },
    /// Timing budget and maximum rate. Check: f_s,max >= f_s.
    Timing,
    /// Per-block power breakdown. Check: no timing violations.
    Power {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 3001)]
        bin: usize,
        #[arg(long, default_value_t = 0.75)]
        amplitude: f64,
    },
    /// Binary against split DAC trade study. Check: split saving 37.5 +/- 5 %.
    DacCompare,
    /// Monte Carlo metastability rate. Check: within 3 sigma of the target.
    Metastability {
        #[arg(long, default_value_t = 1e-3)]
        pmeta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
    },
    /// Figures of merit against one configuration key.
    Sweep {
        /// Configuration key to vary.
        #[arg(long)]
        param: String,
        /// `start:stop:count` in base SI units.
        #[arg(long, conflicts_with = "values")]
        range: Option<String>,
        /// Comma-separated values; units allowed, e.g. `10 fF,20 fF`.
        #[arg(long)]
        values: Option<String>,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        bin: usize,
        #[arg(long, default_value_t = 0.75)]
        amplitude: f64,
    },
    /// Prints the calibrated reference configuration.
    PrintDefaults,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.code())
        }
    }
}
