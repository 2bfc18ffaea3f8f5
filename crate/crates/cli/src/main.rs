use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mbrb_cli::commands::{
    cmd_boundary, cmd_run, cmd_sweep, BoundaryOptions, RunOptions, SweepOptions,
};
use mbrb_cli::report::Format;

/// Reliable-broadcast experiments under Byzantine processes and a
/// message adversary: run scenario files, sweep the parameter grid
/// against the predicted bounds, and demonstrate the n = 3t + 2d
/// resilience boundary.
#[derive(Parser)]
#[command(name = "mbrb", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one scenario file and check every applicable property.
    ///
    /// Exit codes: 0 all checks pass, 1 a property check failed,
    /// 2 schema or usage error.
    Run {
        /// Path to a TOML scenario (schema mbrb-scenario/v1).
        scenario: PathBuf,
        /// Refuse scenarios that violate the resilience assumption or
        /// quorum reachability instead of warning.
        #[arg(long)]
        strict: bool,
        /// Silence boundary warnings (for intentional boundary runs).
        #[arg(long)]
        allow_boundary: bool,
        /// Override the master seed (and the async schedule seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Override the horizon (lockstep rounds or async receptions).
        #[arg(long)]
        horizon: Option<u64>,
        /// Write trace.jsonl and report.txt into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report layout: table or rows.
        #[arg(long, default_value = "table")]
        format: Format,
    },
    /// Sweep the (n, t, d, strategy, policy) grid and compare every run
    /// against the predicted bounds.
    Sweep {
        /// Process counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "4,5,6,7,8,9,10")]
        n: Vec<u32>,
        /// Seeds per grid cell (each seed runs lockstep + async).
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Also include exact-boundary cells (n = 3t + 2d); they report
        /// as quorum-unreachable.
        #[arg(long)]
        allow_boundary: bool,
        /// Write sweep.txt into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report layout: table or rows.
        #[arg(long, default_value = "table")]
        format: Format,
    },
    /// Run the partition attack at n = 3t + 2d and at n = 3t + 2d + 1.
    Boundary {
        /// Byzantine process bound.
        #[arg(long)]
        t: u32,
        /// Message-adversary power.
        #[arg(long)]
        d: u32,
        /// Override the lockstep horizon (the delayed messages release
        /// at horizon / 2).
        #[arg(long)]
        horizon: Option<u64>,
        /// Master seed for key generation.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write both traces and the report into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (report, code) = match cli.command {
        Command::Run {
            scenario,
            strict,
            allow_boundary,
            seed,
            horizon,
            out,
            format,
        } => {
            let outcome = cmd_run(
                &scenario,
                &RunOptions {
                    strict,
                    allow_boundary,
                    seed,
                    horizon,
                    out,
                    format,
                },
            );
            (outcome.report, outcome.exit_code)
        }
        Command::Sweep {
            n,
            seeds,
            allow_boundary,
            out,
            format,
        } => {
            let outcome = cmd_sweep(&SweepOptions {
                n_list: n,
                seeds,
                allow_boundary,
                out,
                format,
            });
            (outcome.report, outcome.exit_code)
        }
        Command::Boundary {
            t,
            d,
            horizon,
            seed,
            out,
        } => {
            let outcome = cmd_boundary(t, d, &BoundaryOptions { horizon, seed, out });
            (outcome.report, outcome.exit_code)
        }
    };
    print!("{report}");
    ExitCode::from(code as u8)
}
