use clap::{Parser, Subcommand, ValueEnum};
use optomech_cli::config::{load_config, ConfigError, CouplingKind, RunConfig};
use optomech_cli::output::{write_csv, write_csv_to};
use optomech_cli::presets::{find_preset, PRESETS};
use optomech_cli::sweep::{resolve_workers, run_sweep};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_PHYSICS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "optomech",
    version,
    about = "Steady-state cooling and entanglement sweeps for a cavity coupled to several mechanical modes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Coupling {
    #[value(name = "fixed-power")]
    FixedPower,
    #[value(name = "fixed-G")]
    FixedG,
}

impl From<Coupling> for CouplingKind {
    fn from(c: Coupling) -> Self {
        match c {
            Coupling::FixedPower => CouplingKind::FixedPower,
            Coupling::FixedG => CouplingKind::FixedG,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML configuration file.
    Simulate {
        config: PathBuf,
        /// Output CSV file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        coupling: Option<Coupling>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a built-in figure preset and write `<out>/<name>.csv`.
    Preset {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum)]
        coupling: Option<Coupling>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List the built-in presets.
    ListPresets,
    /// Check a configuration file and report every problem found.
    Validate { config: PathBuf },
}

fn config_exit(e: &ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        ConfigError::Io { .. } => ExitCode::from(EXIT_IO),
        _ => ExitCode::from(EXIT_VALIDATION),
    }
}

fn apply_coupling(cfg: RunConfig, coupling: Option<Coupling>) -> Result<RunConfig, ConfigError> {
    match coupling {
        Some(c) => cfg.with_coupling(c.into()),
        None => Ok(cfg),
    }
}

fn run(
    cfg: &RunConfig,
    preset: Option<&str>,
    workers: Option<usize>,
    out: Option<&Path>,
) -> ExitCode {
    let rows = run_sweep(cfg, resolve_workers(workers));
    let written = match out {
        Some(path) => write_csv(cfg, preset, &rows, path),
        None => write_csv_to(cfg, preset, &rows, std::io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_IO);
    }
    let failed: Vec<_> = rows.iter().filter(|r| r.error.is_some()).collect();
    if !failed.is_empty() {
        for r in &failed {
            eprintln!(
                "error at sweep value {}: {}",
                r.sweep_value,
                r.error.as_deref().unwrap_or_default()
            );
        }
        return ExitCode::from(EXIT_PHYSICS);
    }
    let unstable = rows.iter().filter(|r| !r.stable).count();
    if unstable > 0 {
        eprintln!("note: {unstable} of {} points are unstable", rows.len());
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            out,
            coupling,
            workers,
        } => match load_config(&config).and_then(|c| apply_coupling(c, coupling)) {
            Ok(cfg) => run(&cfg, None, workers, out.as_deref()),
            Err(e) => config_exit(&e),
        },
        Command::Preset {
            name,
            out,
            coupling,
            workers,
        } => {
            let Some(preset) = find_preset(&name) else {
                eprintln!("error: unknown preset {name:?}; try `optomech list-presets`");
                return ExitCode::from(EXIT_VALIDATION);
            };
            let cfg = match preset.load().and_then(|c| apply_coupling(c, coupling)) {
                Ok(c) => c,
                Err(e) => return config_exit(&e),
            };
            if let Err(e) = std::fs::create_dir_all(&out) {
                eprintln!("error: cannot create {}: {e}", out.display());
                return ExitCode::from(EXIT_IO);
            }
            let path = out.join(format!("{}.csv", preset.name));
            let code = run(&cfg, Some(preset.name), workers, Some(&path));
            eprintln!("wrote {}", path.display());
            code
        }
        Command::ListPresets => {
            for p in &PRESETS {
                println!("{:<6}  {}", p.name, p.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!(
                    "ok: {} ({} modes, {} sweep over {} points)",
                    cfg.name,
                    cfg.params.modes.len(),
                    cfg.sweep.variable.name(),
                    cfg.sweep.points
                );
                ExitCode::SUCCESS
            }
            Err(e) => config_exit(&e),
        },
    }
}
