use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;

pub const OUT_DIR_ENV: &str = "FISHER_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Plain,
    Mirrored,
}

/// Settings shared by every subcommand. Each field may come from a flag or
/// from the TOML file given with `--config`; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Nodes per axis of the periodic grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Fourier mode truncation M.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Comma-separated epsilon values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eps: Option<Vec<f64>>,
    /// Comma-separated envelope radii.
    #[arg(long, value_delimiter = ',')]
    pub radius: Option<Vec<f64>>,
    /// Comma-separated simplex dimensions.
    #[arg(long, value_delimiter = ',')]
    pub dim: Option<Vec<usize>>,
    /// Finite-difference step for the heat-flow identities.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Comma-separated flow times.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Output file (default: $FISHER_OUT_DIR/<command>.<ext>, else stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for the inner quadratures (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Fit scheme for `expand` and `simplex`.
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    /// Width of the Gaussian bump in `mixture`.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Scale r of the bump in `mixture`.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Mass of the bump in `mixture`.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Comma-separated separations L for `mixture`.
    #[arg(long, value_delimiter = ',')]
    pub separation: Option<Vec<f64>>,
    /// Comma-separated scales for the eta = r^3 schedule of `mixture`.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<f64>>,
}

impl Options {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `self` win over those in `fallback`.
    pub fn over(self, fallback: Options) -> Options {
        Options {
            grid: self.grid.or(fallback.grid),
            modes: self.modes.or(fallback.modes),
            eps: self.eps.or(fallback.eps),
            radius: self.radius.or(fallback.radius),
            dim: self.dim.or(fallback.dim),
            dt: self.dt.or(fallback.dt),
            times: self.times.or(fallback.times),
            out: self.out.or(fallback.out),
            format: self.format.or(fallback.format),
            workers: self.workers.or(fallback.workers),
            scheme: self.scheme.or(fallback.scheme),
            sigma: self.sigma.or(fallback.sigma),
            scale: self.scale.or(fallback.scale),
            eta: self.eta.or(fallback.eta),
            separation: self.separation.or(fallback.separation),
            schedule: self.schedule.or(fallback.schedule),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    /// Where a command's output goes; `None` means stdout.
    pub fn output_path(&self, command: &str, env_dir: Option<PathBuf>) -> Option<PathBuf> {
        self.out
            .clone()
            .or_else(|| env_dir.map(|d| d.join(format!("{command}.{}", self.format().extension()))))
    }
}
