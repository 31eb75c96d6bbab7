//! Experiment driver for coded-bit importance searches and link
//! simulations. See README for the CSV schemas and examples.

mod config;
mod experiments;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use config::{ExperimentConfig, ExperimentKind, RawConfig};

#[derive(Parser)]
#[command(name = "polarmap", version, about = "Polar coded-bit importance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustive search for the best V-bit selection on a two-level BSC
    BruteForce(CommonArgs),
    /// Surrogate search for a V-bit selection on a two-level BSC
    SurrogateSelect(CommonArgs),
    /// Surrogate search for a full permutation on the decreasing ramp
    SurrogatePermute(CommonArgs),
    /// Pilot-estimated fading link, mapped vs unmapped BER over SNR
    LinkSim(CommonArgs),
    /// Sorted-subcarrier fading link: good / bad / no permutation
    SortedSim(CommonArgs),
    /// Per-index BER table for single-bit selections (V = 1)
    Fig1Table(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Key-value config file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Codeword length N (power of two, at most 1024)
    #[arg(long)]
    n: Option<usize>,
    /// Information length K
    #[arg(long)]
    k: Option<usize>,
    /// Number of reliable positions / pilots V
    #[arg(long)]
    v: Option<usize>,
    /// Flip probability of the unreliable channels
    #[arg(long)]
    p: Option<f64>,
    /// Normalized maximum Doppler frequency
    #[arg(long)]
    fd: Option<f64>,
    /// Channel power (linear)
    #[arg(long)]
    sigma_h_sq: Option<f64>,
    /// Comma-separated SNR points in dB ("inf" allowed)
    #[arg(long, value_parser = config::parse_f64_list)]
    snr_db_list: Option<std::vec::Vec<f64>>,
    /// Monte Carlo frames (per candidate for searches, per SNR point for links)
    #[arg(long)]
    frames: Option<u64>,
    /// Frames per objective evaluation inside surrogate searches
    #[arg(long)]
    frames_per_eval: Option<u64>,
    /// Objective evaluation budget for surrogate searches
    #[arg(long)]
    max_evals: Option<u64>,
    /// Master seed (required; results are deterministic in it)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); never affects results
    #[arg(long)]
    workers: Option<usize>,
    /// Channel estimator: perfect | mmse | linear_interp
    #[arg(long, value_parser = config::parse_estimator)]
    estimator: Option<polarmap::ofdm::EstimatorKind>,
    /// Comma-separated 1-based coded-bit selection
    #[arg(long, value_parser = config::parse_usize_list)]
    selection: Option<std::vec::Vec<usize>>,
    /// File holding a comma-separated 1-based permutation
    #[arg(long)]
    perm_file: Option<PathBuf>,
    /// SC check-node rule: exact | min_sum
    #[arg(long, value_parser = config::parse_rule)]
    rule: Option<polarmap::polar::ScRule>,
    /// Pilot placement: verbatim | uniform
    #[arg(long, value_parser = config::parse_spacing)]
    pilot_spacing: Option<polarmap::ofdm::PilotSpacing>,
    /// Output CSV path (manifest written alongside)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn into_raw(self, kind: ExperimentKind) -> Result<RawConfig> {
        let config_path = self.config.clone();
        let flags = RawConfig {
            kind: Some(kind),
            n: self.n,
            k: self.k,
            v: self.v,
            p: self.p,
            fd: self.fd,
            sigma_h_sq: self.sigma_h_sq,
            snr_db_list: self.snr_db_list,
            frames: self.frames,
            frames_per_eval: self.frames_per_eval,
            max_evals: self.max_evals,
            seed: self.seed,
            workers: self.workers,
            estimator: self.estimator,
            selection: self.selection,
            perm_file: self.perm_file,
            rule: self.rule,
            pilot_spacing: self.pilot_spacing,
            out: self.out,
        };
        let merged = match config_path {
            Some(path) => {
                let file = RawConfig::from_file(&path)?;
                if let Some(file_kind) = file.kind {
                    if file_kind != kind {
                        return Err(anyhow!(
                            "config file declares kind `{file_kind}` but the \
                             `{kind}` subcommand was invoked"
                        ));
                    }
                }
                flags.over(file)
            }
            None => flags,
        };
        Ok(merged)
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::BruteForce(a) => (ExperimentKind::BruteForce, a),
        Command::SurrogateSelect(a) => (ExperimentKind::SurrogateSelect, a),
        Command::SurrogatePermute(a) => (ExperimentKind::SurrogatePermute, a),
        Command::LinkSim(a) => (ExperimentKind::LinkSim, a),
        Command::SortedSim(a) => (ExperimentKind::SortedSim, a),
        Command::Fig1Table(a) => (ExperimentKind::Fig1Table, a),
    };
    let cfg = ExperimentConfig::from_raw(args.into_raw(kind)?)?;

    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(|e| anyhow!("worker pool: {e}"))?;
    }

    let files = experiments::run_experiment(&cfg)?;
    for f in &files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}
