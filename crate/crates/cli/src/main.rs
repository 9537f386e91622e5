use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kschem::{cmd_bound, cmd_certify, cmd_phi_check, cmd_simulate, CliError, RunConfig};

/// Tumor-immune chemotaxis toolbox: finite-difference simulation,
/// blow-up time lower bounds, and global-boundedness certificates.
#[derive(Parser)]
#[command(name = "kschem", version)]
struct Cli {
    /// Worker threads for stencils and reductions. Results are identical
    /// for any count. Overrides the KSCHEM_THREADS environment variable.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the time integration described by a JSON config; writes
    /// diagnostics.csv, field snapshots, and summary.json.
    Simulate { config: PathBuf },
    /// Compute the rigorous lower bound on the blow-up time; writes and
    /// prints bound.json.
    Bound {
        config: PathBuf,
        /// Recompute psi0 and the bound on a 2x-refined grid as a
        /// sensitivity check.
        #[arg(long)]
        refine: bool,
    },
    /// Evaluate the global-boundedness smallness condition and verify
    /// the auxiliary weight function.
    Certify { config: PathBuf },
    /// Verify the weight-function construction for explicit (p, eps, K).
    PhiCheck {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long = "K")]
        k: f64,
    },
}

fn thread_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("KSCHEM_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
}

fn load_config(path: &PathBuf) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Ok(dir) = std::env::var("KSCHEM_OUTPUT_DIR") {
        cfg.output_dir = dir;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = thread_count(cli.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match cli.cmd {
        Cmd::Simulate { config } => cmd_simulate(&load_config(&config)?),
        Cmd::Bound { config, refine } => cmd_bound(&load_config(&config)?, refine),
        Cmd::Certify { config } => cmd_certify(&load_config(&config)?),
        Cmd::PhiCheck { p, eps, k } => cmd_phi_check(p, eps, k),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
