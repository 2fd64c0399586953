use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use optomech_cli::commands::{self, SpectrumConfig, ValidateConfig};
use optomech_cli::config::{parse_json, system_params, ConfigError, SystemConfig};
use optomech_cli::output::{emit_figure_data, write_json, Metadata};
use optomech_cli::recipes::{recipe, recipe_ids, DEFAULT_GRID};
use optomech_cli::sweep::{run_sweep, SweepConfig};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "optomech", version, about = "Entanglement and cooling of a mirror driven by a noisy laser")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one working point and print a JSON report.
    Point {
        #[arg(long)]
        config: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter grid and write CSV, JSON and gnuplot files.
    Sweep {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        recipe: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Grid size for recipes.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write the frequency-noise spectrum, |χ_eff|² and C(τ) tables.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compare Monte-Carlo estimates with analytic results.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "validation.csv")]
        out: PathBuf,
    },
    /// List the built-in recipe ids.
    Recipes,
}

enum Failure {
    Config(String),
    Partial(String),
    Internal(String),
}

impl Failure {
    fn config(path: &Path, e: ConfigError) -> Self {
        Failure::Config(format!("{}: {e}", path.display()))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Failure::Internal(e.to_string())
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<(T, String), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let value = parse_json(&text).map_err(|e| Failure::config(path, e))?;
    Ok((value, text))
}

fn params_from(path: &Path, system: &SystemConfig, text: &str) -> Result<optomech::params::SystemParams, Failure> {
    system_params(system, text).map_err(|e| Failure::config(path, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Point { config, out } => {
            let (system, text): (SystemConfig, _) = load(&config)?;
            let params = params_from(&config, &system, &text)?;
            let report = commands::point(&params);
            let meta = Metadata::new(system.resolved());
            match out {
                Some(path) => write_json(&path, &meta, &report).map_err(Failure::internal)?,
                None => {
                    #[derive(serde::Serialize)]
                    struct Doc<'a> {
                        metadata: &'a Metadata<SystemConfig>,
                        result: &'a commands::PointReport,
                    }
                    let doc = Doc {
                        metadata: &meta,
                        result: &report,
                    };
                    println!("{}", serde_json::to_string_pretty(&doc).map_err(Failure::internal)?);
                }
            }
            match report.record.error {
                Some(e) => Err(Failure::Partial(e)),
                None => Ok(()),
            }
        }
        Command::Sweep {
            recipe: id,
            config,
            grid,
            out,
        } => {
            let sweep = match (id, config) {
                (Some(id), _) => recipe(&id, grid).ok_or_else(|| {
                    Failure::Config(format!("unknown recipe {id}; known recipes: {}", recipe_ids().join(", ")))
                })?,
                (None, Some(path)) => {
                    let (sweep, text): (SweepConfig, _) = load(&path)?;
                    sweep
                        .validate()
                        .map_err(|(e, field)| Failure::config(&path, e.locate(&text, field)))?;
                    sweep
                }
                (None, None) => return Err(Failure::Config("give --recipe or --config".into())),
            };
            let result = run_sweep(&sweep).map_err(|e| Failure::Config(e.to_string()))?;
            let stem = sweep.id.clone().unwrap_or_else(|| "sweep".into());
            let files = emit_figure_data(&result, &out, &stem).map_err(Failure::internal)?;
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            match result.failures() {
                0 => Ok(()),
                n => Err(Failure::Partial(format!("{n} of {} grid points failed", result.rows.len()))),
            }
        }
        Command::Spectrum { config, out } => {
            let (cfg, text): (SpectrumConfig, _) = load(&config)?;
            cfg.validate()
                .map_err(|(m, field)| Failure::config(&config, ConfigError::new(m).locate(&text, field)))?;
            let params = params_from(&config, &cfg.system, &text)?;
            let (spectrum, correlation) = commands::spectrum_tables(&cfg, &params);
            std::fs::create_dir_all(&out).map_err(|e| Failure::Internal(format!("{}: {e}", out.display())))?;
            let meta = Metadata::new(cfg.resolved());
            for (name, table) in [("spectrum.csv", &spectrum), ("correlation.csv", &correlation)] {
                let path = out.join(name);
                table.write_csv(&path, &meta).map_err(Failure::internal)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Validate { config, out } => {
            let (cfg, text): (ValidateConfig, _) = load(&config)?;
            let params = params_from(&config, &cfg.system, &text)?;
            let rows = commands::validation_checks(&cfg, &params).map_err(|e| match e {
                optomech::Error::InvalidParameter { .. } | optomech::Error::UnstableTimestep { .. } => {
                    Failure::Config(format!("{}: {e}", config.display()))
                }
                other => Failure::internal(other),
            })?;
            let resolved = ValidateConfig {
                system: cfg.system.resolved(),
                ..cfg
            };
            commands::check_table(&rows)
                .write_csv(&out, &Metadata::new(&resolved))
                .map_err(Failure::internal)?;
            for r in &rows {
                eprintln!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.check);
            }
            match rows.iter().filter(|r| !r.pass).count() {
                0 => Ok(()),
                n => Err(Failure::Partial(format!("{n} check(s) failed"))),
            }
        }
        Command::Recipes => {
            for id in recipe_ids() {
                println!("{id}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // A panic anywhere below is a bug, reported with exit code 3.
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Config(m))) => {
            eprintln!("invalid configuration: {m}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Partial(m))) => {
            eprintln!("completed with failures: {m}");
            ExitCode::from(2)
        }
        Ok(Err(Failure::Internal(m))) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
        Err(_) => ExitCode::from(3),
    }
}
