use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eife_cli::commands::{bench_command, converge_command, run_command, Flags};
use eife_cli::config::{parse_config, RunConfig};
use eife_cli::CliError;

/// Exponential integrator finite element solver for u_t = DΔu + f(t, x, u).
#[derive(Parser)]
#[command(name = "eife", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run with series and snapshot output.
    Run(Common),
    /// Convergence ladder; writes the report CSV.
    Converge(Common),
    /// Timing ladder; writes the report CSV with per-step times.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed, overriding `problem.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    type Handler = fn(&RunConfig, &Flags) -> Result<(), CliError>;
    let (common, handler): (Common, Handler) = match cli.command {
        Command::Run(c) => (c, run_command),
        Command::Converge(c) => (c, converge_command),
        Command::Bench(c) => (c, bench_command),
    };
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let cfg = parse_config(&text)?;
    let flags = Flags {
        out: common.out,
        seed: common.seed,
        quiet: common.quiet,
    };
    handler(&cfg, &flags)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
