//! Command-line front end: run one scenario, sweep a grid, or validate a
//! config and print its resolved defaults.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use h2qed_core::config::{parse_config, RunConfig};
use h2qed_core::scenario::{execute_run, execute_sweep};

#[derive(Parser)]
#[command(name = "h2qed", version, about = "Open-system dynamics of a driven hydrogen molecule")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for sweep cells. Cells are pure functions of the
    /// config, so any value produces identical output files.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Override the output path prefix from the config.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a single scenario and write its time series.
    Run(CommonArgs),
    /// Run every cell of the configured sweep grid and write one grid
    /// file per observable.
    Sweep(CommonArgs),
    /// Parse a config and print every resolved setting without running.
    Validate(CommonArgs),
}

fn load(args: &CommonArgs) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(prefix) = &args.out {
        cfg.output.prefix = prefix.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    // Cell-level parallelism saturates a desk machine; keep BLAS serial
    // so thread count only multiplies across cells.
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => load(args).and_then(|cfg| {
            let path = execute_run(&cfg).map_err(|e| e.to_string())?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }),
        Command::Sweep(args) => load(args).and_then(|cfg| {
            let (paths, failed) =
                execute_sweep(&cfg, args.threads).map_err(|e| e.to_string())?;
            for p in &paths {
                println!("wrote {}", p.display());
            }
            if failed > 0 {
                eprintln!("{failed} sweep cell(s) failed");
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }),
        Command::Validate(args) => load(args).map(|cfg| {
            for line in cfg.resolved_lines() {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
