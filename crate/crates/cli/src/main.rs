// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

//! `qss`: command-line runner over JSON descriptors for scheme
//! verification and compound-channel rates.
//!
//! Exit status is 0 when every check passes, 1 when a check misses its
//! tolerance, and 2 on malformed input.

mod commands;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "qss", version, about = "Quantum secret sharing verification and capacity tool")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON descriptor for the command.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Report destination; stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Pass/fail tolerance; each command has its own default.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tolerance: Option<f64>,

    /// Report format; csv is available for `sweep` only.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Tensor-power level for the product-input rate (1 or 2).
    #[arg(long, global = true, default_value_t = 1)]
    n: usize,

    /// Optimizer evaluation budget per start.
    #[arg(long, global = true)]
    max_evals: Option<usize>,

    /// Optimizer starts; the first is always the maximally mixed input.
    #[arg(long, global = true)]
    restarts: Option<usize>,

    /// Haar-random secrets per qualified set.
    #[arg(long, global = true, default_value_t = qss_core::schemes::DEFAULT_TRIALS)]
    trials: usize,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Check recovery on every qualified set and secrecy on every maximal
    /// non-qualified set of a threshold scheme.
    VerifyScheme,
    /// Max-min coherent information of a compound family, with the
    /// dephasing closed form when it applies.
    Capacity,
    /// Capacity over a range of one channel parameter.
    Sweep,
    /// Teleport seeded states through a maximally entangled pair.
    TeleportDemo,
}

pub struct RunConfig {
    pub input: String,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub format: Option<Format>,
    pub n: usize,
    pub trials: usize,
    pub max_evals: Option<usize>,
    pub restarts: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = &cli.input else {
        eprintln!("error: --input is required");
        return ExitCode::from(2);
    };
    let input = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let config = RunConfig {
        input,
        seed: cli.seed,
        tolerance: cli.tolerance,
        format: cli.format,
        n: cli.n,
        trials: cli.trials,
        max_evals: cli.max_evals,
        restarts: cli.restarts,
    };

    let outcome = match cli.command {
        Command::VerifyScheme => commands::verify_scheme(&config),
        Command::Capacity => commands::capacity(&config),
        Command::Sweep => commands::sweep(&config),
        Command::TeleportDemo => commands::teleport_demo(&config),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let written = match &cli.output {
        Some(p) => fs::write(p, &outcome.body),
        None => std::io::stdout().write_all(outcome.body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("verification failed");
        ExitCode::from(1)
    }
}
