// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! `fluxmol` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fluxmol::FormulaMode;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fluxmol",
    version,
    about = "Spectra, dephasing rates and fits for coupled fluxonium molecules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Device configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-mode basis dimension, overriding the config.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Range {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Levels and transitions at one flux point.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Applied flux in flux quanta.
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        phi: f64,
        #[arg(long, default_value_t = fluxmol::spectrum::DEFAULT_LEVELS)]
        levels: usize,
    },
    /// Transition frequencies and d f_ge / d phi_ext over a flux range.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
    },
    /// Fit alpha, E_J/E_C and E_L to spectroscopy data.
    Fit {
        #[command(flatten)]
        common: Common,
        /// CSV with columns phi_ext,frequency_ghz,label[,weight].
        #[arg(long)]
        data: PathBuf,
    },
    /// Ramsey dephasing rates from common and differential flux noise.
    Dephasing {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
        #[arg(long, default_value = "conventional", value_parser = parse_mode)]
        mode: FormulaMode,
    },
    /// Classical potential on a grid plus its local minima.
    Potential {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        phi: f64,
        /// Samples per axis.
        #[arg(long, default_value_t = 61)]
        points: usize,
        /// Half width of each phase axis in radians.
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        range: f64,
    },
}

fn parse_mode(s: &str) -> Result<FormulaMode, String> {
    s.parse::<FormulaMode>().map_err(|e| e.to_string())
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl From<fluxmol::Error> for CliError {
    fn from(e: fluxmol::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FLUXMOL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n >= 1).ok_or_else(|| {
        CliError::Validation(format!(
            "FLUXMOL_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Spectrum {
            common,
            phi,
            levels,
        } => commands::spectrum(&common, phi, levels),
        Command::Sweep { common, range } => commands::sweep(&common, &range),
        Command::Fit { common, data } => commands::fit(&common, &data),
        Command::Dephasing {
            common,
            range,
            mode,
        } => commands::dephasing(&common, &range, mode),
        Command::Potential {
            common,
            phi,
            points,
            range,
        } => commands::potential(&common, phi, points, range),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
