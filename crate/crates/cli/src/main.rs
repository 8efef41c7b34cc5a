use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kvn_core::harness::{execute, exit_code, Verb, EXIT_CONFIG, EXIT_IO};

/// Coherent-state emulator for Kraus-channel PDE solvers.
#[derive(Parser)]
#[command(name = "kvn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a PDE experiment (burgers1d, fisher2d, cavity).
    Solve(RunArgs),
    /// Compile a Kraus set into a channel tree and verify it (kraus-compile).
    Compile(RunArgs),
    /// Produce analytic tables (rank-report, stencil, noise-sweep).
    Report(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; otherwise $KVN_OUT_DIR, the config's out_dir, or out/<experiment>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let (verb, args) = match cli.command {
        Command::Solve(a) => (Verb::Solve, a),
        Command::Compile(a) => (Verb::Compile, a),
        Command::Report(a) => (Verb::Report, a),
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("kvn: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("kvn: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_IO as u8);
        }
    };
    match execute(verb, &text, args.seed, args.out.as_deref()) {
        Ok(outcome) => {
            for line in outcome.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("kvn {}: {e}", verb.name());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
