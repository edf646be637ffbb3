//! `owc` — batch experiment runner for the DCO-OFDM link simulator.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 runtime or numeric
//! error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use owc_cli::commands::{self, CommandError, FiberArgs};
use owc_cli::config::{self, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "owc",
    about = "DCO-OFDM optical wireless link simulation lab",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigOpts {
    /// Experiment config file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory override.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Seed list override, e.g. --seeds 1,2,3.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the channel, load every configured target BER and measure
    /// the stream BER; writes snr_profile.csv, loading_plan.csv and
    /// ber_rate.csv.
    Simulate {
        #[command(flatten)]
        opts: ConfigOpts,
        /// Replace the configured preset with the flat noise-free chain.
        #[arg(long)]
        noiseless: bool,
    },
    /// Fit and extrapolate the SNR trend of a stored profile; writes
    /// pwl_model.csv and rate_bounds.csv.
    Extrapolate {
        #[command(flatten)]
        opts: ConfigOpts,
        /// snr_profile.csv produced by `simulate` or `estimate`.
        #[arg(long)]
        profile: PathBuf,
    },
    /// Bit/power loading over a stored profile at a single target BER;
    /// writes loading_plan.csv.
    Loadplan {
        #[command(flatten)]
        opts: ConfigOpts,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        target_ber: f64,
    },
    /// One-tap channel estimation from stored tx/rx waveform files (one
    /// sample per line); writes snr_profile.csv.
    Estimate {
        #[command(flatten)]
        opts: ConfigOpts,
        #[arg(long)]
        tx: PathBuf,
        #[arg(long)]
        rx: PathBuf,
    },
    /// Closed-form MMF dispersion budget.
    Fiber {
        /// Chromatic dispersion coefficient, ps/(nm·km).
        #[arg(long, default_value_t = 65.0)]
        d_coeff: f64,
        /// RMS spectral width of the source, nm.
        #[arg(long)]
        sigma_lambda: Option<f64>,
        /// Two-column spectrum file (wavelength_nm power); overrides
        /// --sigma-lambda.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Effective modal bandwidth, MHz·km.
        #[arg(long, default_value_t = 4700.0)]
        emb: f64,
        /// Attenuation, dB/km.
        #[arg(long, default_value_t = 2.3)]
        alpha: f64,
        /// Fiber length, km.
        #[arg(long, default_value_t = 0.001)]
        length: f64,
        /// Signal bandwidth for the reach bound, Hz.
        #[arg(long, default_value_t = 16e9)]
        bandwidth: f64,
        /// Also write the report as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn load_config(opts: &ConfigOpts) -> Result<ExperimentConfig, CommandError> {
    let text = match &opts.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CommandError::Config(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut cfg = config::parse_config(&text).map_err(|e| CommandError::Config(e.to_string()))?;
    if let Some(dir) = &opts.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seeds) = &opts.seeds {
        if seeds.is_empty() {
            return Err(CommandError::Config("--seeds must not be empty".into()));
        }
        cfg.seeds = seeds.clone();
    }
    // OWC_SEED overrides both the config and the flag.
    if let Ok(env_seeds) = std::env::var("OWC_SEED") {
        let parsed: Result<Vec<u64>, _> = env_seeds
            .split(',')
            .map(|s| s.trim().parse::<u64>())
            .collect();
        match parsed {
            Ok(seeds) if !seeds.is_empty() => cfg.seeds = seeds,
            _ => {
                return Err(CommandError::Config(format!(
                    "OWC_SEED {env_seeds:?} is not a comma-separated list of integers"
                )))
            }
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Simulate { opts, noiseless } => {
            let cfg = load_config(&opts)?;
            let written = commands::cmd_simulate(&cfg, noiseless)?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Extrapolate { opts, profile } => {
            let cfg = load_config(&opts)?;
            let written = commands::cmd_extrapolate(&cfg, &profile)?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Loadplan {
            opts,
            profile,
            target_ber,
        } => {
            let cfg = load_config(&opts)?;
            let written = commands::cmd_loadplan(&cfg, &profile, target_ber)?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Estimate { opts, tx, rx } => {
            let cfg = load_config(&opts)?;
            let written = commands::cmd_estimate(&cfg, &tx, &rx)?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Fiber {
            d_coeff,
            sigma_lambda,
            spectrum,
            emb,
            alpha,
            length,
            bandwidth,
            csv,
        } => {
            let report = commands::cmd_fiber(&FiberArgs {
                d_ps_per_nm_km: d_coeff,
                sigma_lambda_nm: sigma_lambda,
                spectrum,
                emb_mhz_km: emb,
                alpha_db_per_km: alpha,
                length_km: length,
                bandwidth_hz: bandwidth,
                csv,
            })?;
            print!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
