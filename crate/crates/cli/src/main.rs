use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use gridex::commands::{cmd_oracle, cmd_run, cmd_verify, OracleCommand, RunArgs, VerifyArgs, EXIT_USAGE};
use gridex::service;

/// Oblivious robots exploring anonymous grids: simulation, exhaustive
/// verification and lower-bound oracles.
#[derive(Debug, Parser)]
#[command(name = "gridex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one execution under a chosen adversary.
    Run(RunArgs),
    /// Check every execution from every towerless initial configuration.
    Verify(VerifyArgs),
    /// Mechanized lower-bound arguments.
    Oracle {
        #[command(subcommand)]
        oracle: OracleCommand,
    },
    /// Serve the adversary session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of static assets (the adversary console).
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Seconds of inactivity before a session is dropped.
        #[arg(long, default_value_t = 3600)]
        idle_expiry: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Oracle { oracle } => {
            let line = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
            cmd_oracle(oracle, format!("gridex {line}"))
        }
        Command::Serve { port, host, static_dir, idle_expiry } => {
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE as u8);
                }
            };
            match runtime.block_on(service::serve(host, *port, static_dir.clone(), Duration::from_secs(*idle_expiry))) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    EXIT_USAGE
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
