mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use entangle::Error;

use crate::commands::Ctx;
use crate::config::RunConfig;

/// Process exit codes, one per error class.
mod exit {
    pub const CHECKS_FAILED: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const SCHEME_MISMATCH: u8 = 3;
    pub const DEGENERATE_INPUT: u8 = 4;
    pub const NUMERICAL: u8 = 5;
    pub const IO: u8 = 6;
    pub const OTHER: u8 = 7;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Simulate a tunable entangled-photon source, reconstruct two-photon
/// states from coincidence counts, and run the Hardy test.
///
/// Angles are in degrees. Exit codes: 0 ok, 1 reproduction check failed,
/// 2 parse error, 3 scheme mismatch, 4 degenerate input, 5 numerical
/// failure, 6 I/O error, 7 other.
#[derive(Debug, Parser)]
#[command(name = "entangle", version)]
struct Cli {
    /// RNG seed; overrides `noise.rng_seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run config with `source`, `scheme`, `pairs_per_setting`, `noise`, `out`.
    #[arg(long, global = true, value_name = "JSON")]
    config: Option<PathBuf>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report the emitted state for the configured pump settings.
    Source {
        #[arg(long, allow_negative_numbers = true)]
        chi_deg: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        phi_deg: Option<f64>,
    },
    /// Simulate coincidence counts for every setting of a scheme.
    Simulate {
        #[arg(long)]
        pairs: Option<f64>,
        /// `table1` or a CSV of `arm1,arm2` settings.
        #[arg(long)]
        scheme: Option<String>,
    },
    /// Reconstruct a density matrix from a counts CSV.
    Tomo {
        counts: PathBuf,
        #[arg(long)]
        scheme: Option<String>,
        /// Clip negative eigenvalues and renormalize.
        #[arg(long)]
        project_physical: bool,
        /// Report fidelity with `(|HH⟩ + ε e^{iφ}|VV⟩)/√(1+ε²)`, given as `eps,phi`.
        #[arg(long, value_parser = parse_target, allow_hyphen_values = true)]
        target: Option<(f64, f64)>,
    },
    /// Tabulate the zero-coincidence locus θ₂(θ₁).
    Minima {
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 5.0)]
        step: f64,
    },
    /// Hardy test tools.
    Hardy {
        #[command(subcommand)]
        command: HardyCommand,
    },
    /// Run every reference check against the fixtures.
    Repro,
}

#[derive(Debug, Subcommand)]
enum HardyCommand {
    /// Analyzer angles and predicted probabilities for one ε.
    Angles {
        #[arg(long)]
        epsilon: f64,
    },
    /// Hardy fraction versus ε with a ±0.5° band and one simulated run per row.
    Curve {
        #[arg(long, default_value_t = 0.05)]
        from: f64,
        #[arg(long, default_value_t = 0.95)]
        to: f64,
        #[arg(long, default_value_t = 19)]
        steps: usize,
        #[arg(long, default_value_t = 2.6e5)]
        pairs: f64,
    },
    /// Evaluate the Hardy inequality on a counts JSON file.
    Test {
        /// Defaults to the shipped fixture.
        data: Option<PathBuf>,
    },
}

fn parse_target(s: &str) -> Result<(f64, f64), String> {
    let (e, p) = s
        .split_once(',')
        .ok_or_else(|| format!("expected eps,phi, got {s:?}"))?;
    let e: f64 = e.trim().parse().map_err(|err| format!("epsilon {e:?}: {err}"))?;
    let p: f64 = p.trim().parse().map_err(|err| format!("phi {p:?}: {err}"))?;
    Ok((e, p))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Parse(_) => exit::PARSE,
                Error::SchemeMismatch(_) | Error::InconsistentAcquisition(_) => exit::SCHEME_MISMATCH,
                Error::InvalidArgument(_)
                | Error::DegenerateEntanglement(_)
                | Error::DegenerateScheme { .. }
                | Error::EmptyData(_)
                | Error::UndefinedVisibility
                | Error::NotHermitian(_) => exit::DEGENERATE_INPUT,
                Error::Numerical(_) => exit::NUMERICAL,
                Error::Io(_) => exit::IO,
            };
        }
        if cause.is::<std::io::Error>() {
            return exit::IO;
        }
        if cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return exit::PARSE;
        }
    }
    exit::OTHER
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(config.noise.rng_seed),
        out: cli.out.or_else(|| config.out.clone()),
        format: cli.format,
        config,
    };
    match cli.command {
        Command::Source { chi_deg, phi_deg } => commands::source(&ctx, chi_deg, phi_deg)?,
        Command::Simulate { pairs, scheme } => commands::simulate(&ctx, pairs, scheme.as_deref())?,
        Command::Tomo {
            counts,
            scheme,
            project_physical,
            target,
        } => commands::tomo(&ctx, &counts, scheme.as_deref(), project_physical, target)?,
        Command::Minima {
            epsilon,
            from,
            to,
            step,
        } => commands::minima(&ctx, epsilon, from, to, step)?,
        Command::Hardy { command } => match command {
            HardyCommand::Angles { epsilon } => commands::hardy_angles_cmd(&ctx, epsilon)?,
            HardyCommand::Curve { from, to, steps, pairs } => commands::hardy_curve_cmd(&ctx, from, to, steps, pairs)?,
            HardyCommand::Test { data } => commands::hardy_test_cmd(&ctx, data.as_deref())?,
        },
        Command::Repro => return commands::repro(&ctx),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(exit::CHECKS_FAILED),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn target_parsing() {
        assert_eq!(parse_target("0.47, -10").unwrap(), (0.47, -10.0));
        assert!(parse_target("0.47").is_err());
    }

    #[test]
    fn error_classes_map_to_distinct_codes() {
        let codes = [
            Error::Parse("x".into()),
            Error::SchemeMismatch("x".into()),
            Error::DegenerateEntanglement(0.0),
            Error::Numerical("x".into()),
        ]
        .map(|e| exit_code(&anyhow::Error::new(e).context("wrapped")));
        assert_eq!(
            codes,
            [
                exit::PARSE,
                exit::SCHEME_MISMATCH,
                exit::DEGENERATE_INPUT,
                exit::NUMERICAL
            ]
        );
    }
}
