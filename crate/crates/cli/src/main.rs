//! `fisher`: reproducible reports for the Fisher-information numerics.

mod commands;
mod config;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{Format, Options, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "fisher", version, about = "Fisher-information functionals and log-convexity defects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// TOML file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Default output directory when --out is not given.
    #[arg(long, env = OUT_DIR_ENV, hide_env_values = true)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    options: Options,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Euclidean family F_{R,eps} against the published table.
    Table1(CommonArgs),
    /// The hexagonal averages of phi and its derivatives.
    Averages(CommonArgs),
    /// Fitted expansion coefficients of the torus family.
    Expand(CommonArgs),
    /// Simplex family coefficients against their closed forms.
    Simplex(CommonArgs),
    /// Heat-flow profile and derivative identities.
    Flow(CommonArgs),
    /// Separated-mixture sweep.
    Mixture(CommonArgs),
    /// Ratio scans over eps for several families.
    ThetaScan(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Table1(_) => "table1",
            Command::Averages(_) => "averages",
            Command::Expand(_) => "expand",
            Command::Simplex(_) => "simplex",
            Command::Flow(_) => "flow",
            Command::Mixture(_) => "mixture",
            Command::ThetaScan(_) => "theta-scan",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Table1(a)
            | Command::Averages(a)
            | Command::Expand(a)
            | Command::Simplex(a)
            | Command::Flow(a)
            | Command::Mixture(a)
            | Command::ThetaScan(a) => a,
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let args = cli.command.args();
    let file = match &args.config {
        Some(p) => Options::load(p)?,
        None => Options::default(),
    };
    let opts = args.options.clone().over(file);
    if let Some(n) = opts.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let name = cli.command.name();
    let report = match &cli.command {
        Command::Table1(_) => commands::table1(&opts)?,
        Command::Averages(_) => commands::averages(&opts)?,
        Command::Expand(_) => commands::expand(&opts)?,
        Command::Simplex(_) => commands::simplex(&opts)?,
        Command::Flow(_) => commands::flow(&opts)?,
        Command::Mixture(_) => commands::mixture(&opts)?,
        Command::ThetaScan(_) => commands::theta_scan(&opts)?,
    };
    let body = match opts.format() {
        Format::Csv => report.table.to_csv(),
        Format::Json => report.table.to_json(name, &report.checks, &report.notes),
    };
    match opts.output_path(name, args.out_dir.clone()) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
    eprintln!("{name}: {}/{} checks passed", report.checks.len() - failed.len(), report.checks.len());
    for c in &failed {
        eprintln!("FAILED {}: {}", c.name, c.detail);
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
