//! Command-line runner: parses a config, executes the selected solver and
//! writes plot-ready CSV tables.
//!
//! Exit codes: 0 on success, 2 when individual sweep rows failed, 1 on any
//! fatal error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rydeit_cli::run::ExecOutcome;
use rydeit_cli::{config, output, recipes, run};

#[derive(Parser)]
#[command(
    name = "rydeit",
    version,
    about = "Steady-state two-photon propagation in Rydberg-EIT media"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path of the TOML run configuration.
    config: PathBuf,
    /// Directory receiving the CSV tables.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for concurrent sweep rows (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Multiplies the configured grid resolution.
    #[arg(long, default_value_t = 1.0)]
    grid_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Detuning sweep of the output correlations (equal solver).
    Sweep(RunArgs),
    /// Two-photon correlation maps of the configured solver.
    Map(RunArgs),
    /// Half-sum approximation residual of the full (z, z') system.
    FullValidate(RunArgs),
    /// Three-level grid-convergence study with order estimate.
    Converge(RunArgs),
    /// Writes the bundled recipe configs.
    Recipes {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(failures) => {
            if failures > 0 {
                eprintln!("{failures} sweep row(s) failed");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<usize, String> {
    match cli.command {
        Command::Recipes { out_dir } => {
            std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
            for (name, body) in recipes::RECIPES {
                let path = out_dir.join(name);
                std::fs::write(&path, body).map_err(|e| e.to_string())?;
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::Sweep(args) => execute(args, run::run_sweep),
        Command::Map(args) => execute(args, run::run_map),
        Command::FullValidate(args) => execute(args, run::run_full_validate),
        Command::Converge(args) => execute(args, run::run_converge),
    }
}

fn execute(
    args: RunArgs,
    runner: fn(&config::RunConfig, f64) -> Result<ExecOutcome, run::RunError>,
) -> Result<usize, String> {
    if !(args.grid_scale > 0.0) || !args.grid_scale.is_finite() {
        return Err("--grid-scale must be positive".to_string());
    }
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("reading {}: {e}", args.config.display()))?;
    let cfg = config::parse_config(&text).map_err(|e| e.to_string())?;

    let outcome = match args.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| e.to_string())?;
            pool.install(|| runner(&cfg, args.grid_scale))
        }
        None => runner(&cfg, args.grid_scale),
    }
    .map_err(|e| e.to_string())?;

    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    for table in &outcome.tables {
        let path = output::emit_table(table, &args.out_dir).map_err(|e| e.to_string())?;
        println!("{}", path.display());
    }
    Ok(outcome.row_failures)
}
