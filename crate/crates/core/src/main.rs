use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use seqpp::config::{Command, RunConfig};
use seqpp::run::{run_factorise, run_simulate, run_stats, run_validate};
use seqpp::Error;

#[derive(Parser)]
#[command(name = "seqpp", version, about = "Sequential spatial point processes")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Run configuration (JSON). An emitted meta.json is also accepted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Number of independent chains.
    #[arg(long, global = true)]
    chains: Option<u64>,

    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Run the configured sampler and write trace, final state and metadata.
    Simulate,
    /// Write the interaction table over the oracle grid.
    Factorise,
    /// Run the exact oracle checks; exit 1 if any fails.
    Validate,
    /// Run the sampler and write count statistics.
    Stats,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Factorise => Command::Factorise,
            Cmd::Validate => Command::Validate,
            Cmd::Stats => Command::Stats,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::Io(_) => 2,
        Error::Capacity { .. } => 4,
        _ => 3,
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.output {
        cfg.output_dir = out.clone();
    }
    if let Some(chains) = cli.chains {
        cfg.chains = chains;
    }
    let command: Command = cli.command.into();
    cfg.command = Some(command);
    match command {
        Command::Simulate => run_simulate(&cfg).map(|_| true),
        Command::Factorise => run_factorise(&cfg).map(|_| true),
        Command::Stats => run_stats(&cfg).map(|_| true),
        Command::Validate => run_validate(&cfg).map(|r| r.passed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
