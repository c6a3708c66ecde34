use std::process::ExitCode;

use bsgni::jacobi::WeightExponent;
use bsgni_cli::config::{self, ConfigError, ExperimentConfig, Mode, PRESETS};
use bsgni_cli::diagnose::{self, RESIDUAL_GATE};
use bsgni_cli::runner::{self, RunError};
use clap::{Parser, Subcommand};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "solver", version, about = "Spectral solver for Boussinesq systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or preset name.
    Run {
        config: String,
        /// Override a key, e.g. `--set n=256`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Spatial convergence quotients along a doubling chain of `n`.
    Compare {
        config: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print a preset, or list them all.
    Presets { name: Option<String> },
    /// Standalone checks printed as CSV on stdout.
    Diagnose {
        #[command(subcommand)]
        check: Check,
    },
}

#[derive(Subcommand)]
enum Check {
    /// Gauss-Lobatto-Jacobi nodes and weights.
    Quadrature {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long)]
        n: usize,
    },
    /// Phase error and amplification defect of R(iy).
    Dispersion {
        #[arg(long, default_value = "third-order")]
        gamma: String,
    },
    /// Residual of an exact traveling wave in both equations.
    Residual {
        #[arg(long)]
        preset: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

enum Failure {
    Config(ConfigError),
    Run(RunError),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Self::Run(e)
    }
}

fn run_experiment(cfg: ExperimentConfig) -> Result<(), Failure> {
    let (dir, artifacts) = runner::run_to_disk(&cfg)?;
    for note in &artifacts.notes {
        eprintln!("warning: {note}");
    }
    print!("{}", artifacts.table_md);
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, overrides } => run_experiment(config::load(&config, &overrides)?),
        Command::Compare { config, overrides } => {
            let mut raw = config::load_raw(&config)?;
            config::apply_overrides(&mut raw, &overrides)?;
            raw.set("mode", "space")?;
            let cfg = ExperimentConfig::from_raw(raw)?;
            debug_assert_eq!(cfg.mode, Mode::Space);
            run_experiment(cfg)
        }
        Command::Presets { name: None } => {
            for (name, text) in PRESETS {
                let summary = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
                println!("{name:<20} {summary}");
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let text = PRESETS
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, t)| *t)
                .ok_or(ConfigError::UnknownPreset(name))?;
            print!("{text}");
            Ok(())
        }
        Command::Diagnose { check } => diagnose_command(check),
    }
}

fn diagnose_command(check: Check) -> Result<(), Failure> {
    let bad = |key: &str, message: String| {
        Failure::Config(ConfigError::Field {
            key: key.to_string(),
            message,
        })
    };
    match check {
        Check::Quadrature { mu, n } => {
            let mu = WeightExponent::new(mu).map_err(|e| bad("mu", e.to_string()))?;
            let csv = diagnose::quadrature_csv(mu, n).map_err(|e| bad("n", e.to_string()))?;
            print!("{csv}");
        }
        Check::Dispersion { gamma } => {
            let scheme = config::parse_scheme(&gamma).map_err(|m| bad("gamma", m))?;
            let (csv, slope) = diagnose::dispersion_csv(&scheme);
            print!("{csv}");
            eprintln!("dispersion slope {slope:.4}");
        }
        Check::Residual { preset, overrides } => {
            let mut raw = config::load_raw(&preset)?;
            config::apply_overrides(&mut raw, &overrides)?;
            let wave = config::exact_from_raw(&raw)?;
            let (csv, worst) = diagnose::residual_csv(&wave);
            print!("{csv}");
            eprintln!("max residual {worst:.3e}");
            if worst > RESIDUAL_GATE {
                return Err(Failure::Numerical(format!(
                    "residual {worst:.3e} exceeds {RESIDUAL_GATE:e}"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Run(e @ RunError::Io { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Run(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
