use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use momp_cli::{presets, run_experiment, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "momp",
    version,
    about = "MOMP channel estimation and localization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep point of a config and write CSV tables.
    Run {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
    /// List the built-in presets, or print one as a config file.
    Presets { name: Option<String> },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let output = run_experiment(&cfg)?;
            for res in &output.results {
                println!(
                    "point {}: {} positions, detection rate {}",
                    res.point.index,
                    res.records.len(),
                    res.detection_rate()
                );
            }
            println!("wrote {} files to {}", output.files.len(), cfg.output_dir.display());
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            cfg.validate()?;
            println!(
                "ok: {} positions x {} sweep points",
                cfg.users().len(),
                cfg.sweep_points().len()
            );
        }
        Command::Presets { name: None } => {
            for p in &presets::PRESETS {
                println!("{:<8} {}", p.name, p.summary);
            }
        }
        Command::Presets { name: Some(name) } => {
            let p = presets::find(&name).ok_or_else(|| CliError::Config(format!("unknown preset {name:?}")))?;
            print!("{}", (p.build)().to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
