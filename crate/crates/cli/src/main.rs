use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod mm;
mod output;
mod smib;

use output::{Failure, Sink};

/// Stability analysis with truncated Taylor expansions of swing dynamics.
#[derive(Debug, Parser)]
#[command(name = "tte-stab", version)]
struct Cli {
    /// Worker threads for parallel sweeps and campaigns.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for output files; stdout when unset.
    #[arg(long, global = true, env = "TTE_STAB_OUT")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-machine infinite-bus analytics.
    Smib {
        #[command(subcommand)]
        command: smib::SmibCommand,
    },
    /// Multi-machine networks: expansion, simulation, boundaries, clearing times.
    Mm(MmArgs),
}

#[derive(Debug, Args)]
struct MmArgs {
    /// Case file (`tte-stab-case/1`); the bundled 9-bus case when unset.
    #[arg(long)]
    case: Option<PathBuf>,

    /// Contingency list (`id,fault_bus,line_from,line_to`); the bundled
    /// 9-bus list when unset.
    #[arg(long)]
    contingencies: Option<PathBuf>,

    /// Re-dispatch before solving, as `machine:pu` pairs, e.g. `2:2.0,3:1.0`.
    #[arg(long)]
    dispatch: Option<String>,

    #[command(subcommand)]
    command: mm::MmCommand,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Validation(e.to_string()))?;
    }
    let sink = Sink::new(cli.out)?;
    match cli.command {
        Command::Smib { command } => smib::run(command, &sink),
        Command::Mm(args) => mm::run(args, &sink),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
