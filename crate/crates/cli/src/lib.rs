//! Config-driven front end over `whitney-core`.

pub mod config;
pub mod run;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::{load, Config, ConfigError, JET_ORDERS, MAX_REFINE};
use run::{CliError, Output, Overrides};

#[derive(Debug, Parser)]
#[command(name = "whitney", version, about = "Intrinsic cross caps: analysis, curvature and Gauss-Bonnet checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find, classify and read off invariants of singular points.
    Analyze(TaskArgs),
    /// Sample geodesic curvature along curves and estimate limits at singular points.
    Curve(TaskArgs),
    /// Check the Gauss-Bonnet identity on regions.
    GaussBonnet(TaskArgs),
    /// Run the bundled verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct TaskArgs {
    /// Config document (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Report destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Jet order for series expansions.
    #[arg(long, value_name = "K")]
    pub jet_order: Option<usize>,
    /// Quadrature refinement level: 32 · 2^N nodes per panel.
    #[arg(long, value_name = "N")]
    pub refine: Option<u32>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Config document whose verify tasks select the checks.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the report as JSON here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Run only checks whose battery or group contains this pattern.
    #[arg(long, value_name = "PATTERN")]
    pub only: Option<String>,
}

pub fn read_config(path: &Path) -> Result<Config, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
    Ok(load(&text)?)
}

fn overrides(args: &TaskArgs) -> Result<Overrides, CliError> {
    if let Some(k) = args.jet_order {
        if !JET_ORDERS.contains(&k) {
            return Err(ConfigError::new(
                "--jet-order",
                format!("must lie in {}..={}", JET_ORDERS.start(), JET_ORDERS.end()),
            )
            .into());
        }
    }
    if args.refine.is_some_and(|r| r > MAX_REFINE) {
        return Err(ConfigError::new("--refine", format!("at most {MAX_REFINE}")).into());
    }
    Ok(Overrides {
        jet_order: args.jet_order,
        refine: args.refine,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes an output to `--out` (or returns the document for stdout) and every
/// artifact to its path.
fn emit(output: Output, out: Option<&Path>) -> Result<Option<String>, CliError> {
    for a in &output.artifacts {
        write(&a.path, &a.contents)?;
    }
    let stdout = match out {
        Some(p) => {
            write(p, &output.document)?;
            None
        }
        None => Some(output.document),
    };
    match output.non_convergence {
        Some(msg) => Err(CliError::NonConvergence(msg)),
        None => Ok(stdout),
    }
}

/// Runs one command; the returned text, if any, belongs on stdout.
pub fn execute(cli: &Cli) -> Result<Option<String>, CliError> {
    match &cli.command {
        Command::Analyze(args) => {
            overrides(args)?;
            let cfg = read_config(&args.config)?;
            emit(run::run_analyze(&cfg)?, args.out.as_deref())
        }
        Command::Curve(args) => {
            let o = overrides(args)?;
            let cfg = read_config(&args.config)?;
            emit(run::run_curve(&cfg, &o, args.out.as_deref())?, args.out.as_deref())
        }
        Command::GaussBonnet(args) => {
            let o = overrides(args)?;
            let cfg = read_config(&args.config)?;
            emit(run::run_gauss_bonnet(&cfg, &o)?, args.out.as_deref())
        }
        Command::Verify(args) => {
            let cfg = args.config.as_deref().map(read_config).transpose()?;
            let patterns = run::verify_patterns(cfg.as_ref(), args.only.as_deref());
            let (report, table) = run::run_verify_patterns(&patterns)?;
            if let Some(p) = &args.out {
                write(p, &run::verify_json(&report)?)?;
            }
            if report.passed {
                Ok(Some(table))
            } else {
                print!("{table}");
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                Err(CliError::VerifyFailed {
                    failed,
                    total: report.checks.len(),
                })
            }
        }
    }
}
