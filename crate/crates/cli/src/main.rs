//! `vss`: virtual-state spectroscopy runs from a TOML configuration.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutDir;

#[derive(Parser)]
#[command(name = "vss", version, about = "Virtual-state spectroscopy with intense twin beams")]
struct Cli {
    /// TOML configuration; every table is optional (missing file means defaults).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, created if needed.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Worker threads, 0 = one per core. Results do not depend on it.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,

    /// Seed for randomized level sets ([medium.random_levels]).
    #[arg(long, global = true, value_name = "U64", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Joint spectra for each pump duration in [joint].
    ///
    /// data.csv: pump_duration_fs, correlation_coefficient, schmidt_rank,
    /// schmidt_number_uv, gain, noise, classical, quantum (delay-integrated).
    /// joint.csv: pump_duration_fs, signal_detuning_ev, idler_detuning_ev,
    /// modulus (decimated to at most 128 x 128).
    JointSpectrum,
    /// Schmidt coefficients and mode gains.
    ///
    /// data.csv: mode, lambda, u, v.
    Schmidt,
    /// Delay scan and spectrogram for one crystal.
    ///
    /// data.csv: energy_ev, mismatch_energy_ev, magnitude, raw_magnitude.
    /// trace.csv: delay_fs, noise, classical, quantum, total.
    /// peaks.csv: energy_ev, magnitude (mismatch axis).
    Spectrogram,
    /// Crystal-length ensemble average, per photon number.
    ///
    /// data.csv: photon_number, energy_ev, mismatch_energy_ev, magnitude,
    /// raw_magnitude, first_member_magnitude.
    /// trace.csv: photon_number, delay_fs, averaged_total.
    /// peaks.csv: photon_number, energy_ev, magnitude (mismatch axis).
    Ensemble,
    /// Delay-integrated groups against photon number.
    ///
    /// data.csv: photon_number, gain, noise, classical, quantum, background.
    /// fit.csv: quantum_slope, background_slope, crossover, fit_min, fit_max.
    FluxSweep,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    for w in cfg.medium(cli.seed)?.warnings() {
        eprintln!("warning: {w}");
    }
    let ctx = Context {
        cfg: &cfg,
        seed: cli.seed,
        threads: rayon::current_num_threads(),
        out: OutDir::create(&cli.out)?,
    };
    match cli.command {
        Command::JointSpectrum => commands::cmd_joint_spectrum(&ctx),
        Command::Schmidt => commands::cmd_schmidt(&ctx),
        Command::Spectrogram => commands::cmd_spectrogram(&ctx),
        Command::Ensemble => commands::cmd_ensemble(&ctx),
        Command::FluxSweep => commands::cmd_flux_sweep(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")));
    match pool.and_then(|()| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vss: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
