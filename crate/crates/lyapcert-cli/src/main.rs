use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lyapcert_cli::commands::{
    cmd_list_bundles, cmd_simulate, cmd_sweep, cmd_verify, SimulateArgs, SweepArgs, VerifyArgs,
};

/// Construct strict Lyapunov functions for rapidly time-varying systems and
/// certify decay, gain, and hypothesis margins by sampling.
///
/// Exit codes: 0 all certificates passed, 1 a certificate failed, 2 usage
/// error, 3 numerical error.
#[derive(Parser)]
#[command(name = "lyapcert", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run certification checks for one bundle at a fixed time-scale constant.
    Verify {
        /// Stock bundle name or path to a custom description file.
        #[arg(long)]
        bundle: String,
        /// Time-scale constant α.
        #[arg(long)]
        alpha: f64,
        /// Comma-separated checks: hypotheses, decay, iss, iiss, envelope, sweep.
        #[arg(long)]
        checks: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write newline-delimited report objects here (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of seeded initial conditions (default: bundle preset).
        #[arg(long)]
        ics: Option<usize>,
        /// Trajectory horizon for decay/gain checks (default: bundle preset).
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Sweep a geometric α grid and report the empirical threshold.
    Sweep {
        #[arg(long)]
        bundle: String,
        #[arg(long)]
        alpha_min: f64,
        #[arg(long)]
        alpha_max: f64,
        /// Grid ratio between consecutive α values.
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write the CSV table here (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        ics: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Integrate one trajectory and export t, states, and the constructed
    /// Lyapunov value and derivative as CSV.
    Simulate {
        #[arg(long)]
        bundle: String,
        #[arg(long)]
        alpha: f64,
        /// Comma-separated initial state, e.g. `--x0 1.5,-0.5`.
        #[arg(long)]
        x0: String,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base integration step (the fast scale may force a smaller one).
        #[arg(long)]
        h_base: Option<f64>,
    },
    /// List the stock bundles with their dimensions and advertised checks.
    ListBundles,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { bundle, alpha, checks, seed, out, ics, t_end } => cmd_verify(VerifyArgs {
            bundle,
            alpha,
            checks,
            seed,
            out,
            ic_count: ics,
            t_end,
        }),
        Command::Sweep { bundle, alpha_min, alpha_max, factor, seed, out, ics, t_end } => {
            cmd_sweep(SweepArgs {
                bundle,
                alpha_min,
                alpha_max,
                factor,
                seed,
                out,
                ic_count: ics,
                t_end,
            })
        }
        Command::Simulate { bundle, alpha, x0, t_end, seed, out, h_base } => {
            cmd_simulate(SimulateArgs { bundle, alpha, x0, t_end, seed, out, h_base })
        }
        Command::ListBundles => Ok(cmd_list_bundles()),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
