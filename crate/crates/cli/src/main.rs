//! `sof`: batch front end for static output-feedback synthesis.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 negative result
//! (lossless check failed, infeasible, certificate invalid),
//! 3 iteration limit reached without a certificate.

mod commands;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "sof", version, about = "Static output-feedback synthesis for systems with lossless nonlinearities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Decay-rate target eps in (A+BKC) + (A+BKC)^T + eps I <= 0
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iteration budget per start
    #[arg(long = "max-iters", default_value_t = 5000)]
    pub max_iters: usize,
    /// Random starts after K = 0
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct IntegratorArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long = "tfinal", default_value_t = 20.0)]
    pub t_final: f64,
    #[arg(long = "escape-radius", default_value_t = 50.0)]
    pub escape_radius: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a system file and sample the lossless property
    Check {
        system: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Null-space conditions deciding whether a stabilizing gain exists
    Feasibility {
        system: PathBuf,
        /// Conditions must hold with lambda < -margin
        #[arg(long = "strict-margin", default_value_t = 0.0)]
        strict_margin: f64,
    },
    /// Synthesize a gain
    Synth {
        system: PathBuf,
        #[command(flatten)]
        synth: SynthArgs,
        /// Keep descending past the first certificate to maximize the decay rate
        #[arg(long = "maximize-rate")]
        maximize_rate: bool,
        /// Also write the report here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a gain
    Certify {
        system: PathBuf,
        /// JSON object with a "K" entry (a synth report works)
        gain: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
    /// Simulate one trajectory and write it as CSV
    Simulate {
        system: PathBuf,
        /// Closed loop with this gain; open loop when absent
        #[arg(long)]
        gain: Option<PathBuf>,
        /// Initial state, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x0: Vec<f64>,
        #[command(flatten)]
        integ: IntegratorArgs,
        /// CSV destination; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase portrait: one CSV per initial condition plus index.json
    Phase {
        system: PathBuf,
        #[arg(long)]
        gain: Option<PathBuf>,
        /// circle:R:N or box:B:NxN; defaults to circle:1:16 closed loop,
        /// box:3:7x7 open loop
        #[arg(long)]
        grid: Option<String>,
        #[arg(long = "jitter-seed")]
        jitter_seed: Option<u64>,
        #[command(flatten)]
        integ: IntegratorArgs,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Reproduce the worked example end to end
    Demo {
        #[arg(long)]
        outdir: PathBuf,
        #[command(flatten)]
        synth: SynthArgs,
        #[command(flatten)]
        integ: IntegratorArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    let result = match cli.command {
        Command::Check { system, samples, seed, tol } => commands::check(&system, samples, seed, tol),
        Command::Feasibility { system, strict_margin } => commands::feasibility(&system, strict_margin),
        Command::Synth { system, synth, maximize_rate, out } => {
            commands::synth(&system, &synth, maximize_rate, out.as_deref())
        }
        Command::Certify { system, gain, epsilon } => commands::certify(&system, &gain, epsilon),
        Command::Simulate { system, gain, x0, integ, out } => {
            commands::simulate(&system, gain.as_deref(), &x0, &integ, out.as_deref())
        }
        Command::Phase { system, gain, grid, jitter_seed, integ, outdir } => {
            commands::phase(&system, gain.as_deref(), grid.as_deref(), jitter_seed, &integ, &outdir)
        }
        Command::Demo { outdir, synth, integ } => commands::demo(&outdir, &synth, &integ),
    };

    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
