use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing::error;

use lwr_discflux::harness::{
    cmd_convergence, cmd_flux_compare, cmd_mollifier_report, cmd_run, parse_config, CommandOutput,
};
use lwr_discflux::{Error, Result};

#[derive(Parser)]
#[command(version, about = "LWR traffic flow with a discontinuous flux")]
struct Cli {
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one experiment and write snapshots.
    Run { config: PathBuf },
    /// Grid-refinement study.
    Convergence { config: PathBuf },
    /// Same data under discontinuous, continuous and regularized fluxes.
    FluxCompare { config: PathBuf },
    /// Mollified-flux diagnostics.
    MollifierReport { config: PathBuf },
}

fn execute(cli: &Cli) -> Result<CommandOutput> {
    let path = match &cli.command {
        Command::Run { config }
        | Command::Convergence { config }
        | Command::FluxCompare { config }
        | Command::MollifierReport { config } => config,
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let cfg = parse_config(&text)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    match cli.command {
        Command::Run { .. } => cmd_run(&cfg, &out),
        Command::Convergence { .. } => cmd_convergence(&cfg, &out),
        Command::FluxCompare { .. } => cmd_flux_compare(&cfg, &out),
        Command::MollifierReport { .. } => cmd_mollifier_report(&cfg, &out),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        e if e.is_validation() => 2,
        Error::Io { .. } => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();

    match execute(&cli) {
        Ok(output) => {
            for file in &output.files {
                println!("wrote {}", file.display());
            }
            for check in &output.checks {
                let mark = if check.passed { "PASS" } else { "FAIL" };
                println!("{mark} {}: {}", check.name, check.detail);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            error!("{err}");
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
