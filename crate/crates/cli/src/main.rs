use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use aptf_cli::compare::{load_runs, render, write_compare_csv, COMPARE_FILE};
use aptf_cli::config::resolve_out_root;
use aptf_cli::error::CliError;
use aptf_cli::runner::{run_config_file, write_atomic};
use aptf_cli::sweep::sweep;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aptf", version, about = "Predictability-aware training experiments")]
struct Cli {
    /// Output root (default: $APTF_OUT, then ./runs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace the config's seed list, e.g. `--seed-override 0,1`.
    #[arg(long, global = true, value_delimiter = ',')]
    seed_override: Option<Vec<u64>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (mode, seed) cell of a config.
    Run { config: PathBuf },
    /// Print mean ± std of several runs side by side.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// Run a config once per value of one key.
    Sweep {
        config: PathBuf,
        /// Dotted config key, e.g. `trainer.stage.initial_buckets`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let seeds = cli.seed_override.as_deref();
    match cli.command {
        Command::Run { config } => {
            let out = run_config_file(&config, cli.out.as_deref(), seeds)?;
            println!("{}", out.dir.display());
        }
        Command::Compare { dirs } => {
            let table = load_runs(&dirs)?;
            print!("{}", render(&table));
            let root = resolve_out_root(cli.out);
            fs::create_dir_all(&root).map_err(|e| CliError::Io { path: root.clone(), source: e })?;
            let mut buf = Vec::new();
            write_compare_csv(&table, &mut buf)?;
            write_atomic(&root.join(COMPARE_FILE), &buf)?;
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let out = sweep(&config, &param, &values, cli.out.as_deref(), seeds)?;
            println!("{}", out.dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
