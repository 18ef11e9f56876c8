//! Run configuration: built-in defaults, then a flat JSON file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ghalab::model::SystemParams;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Well,
    Morse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Classical,
    Quantum,
    Susy,
    All,
}

/// Every configurable value; `None` means "not given at this layer".
#[derive(Debug, Clone, Default, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// System: infinite well or Morse oscillator
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[arg(long, allow_hyphen_values = true)]
    pub mass: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hbar: Option<f64>,
    /// Well width
    #[arg(long = "L", allow_hyphen_values = true)]
    #[serde(rename = "L")]
    pub length: Option<f64>,
    /// Morse range parameter
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Morse depth
    #[arg(long = "V0", allow_hyphen_values = true)]
    #[serde(rename = "V0")]
    pub depth: Option<f64>,

    /// Highest label for spectra and degeneracy tables
    #[arg(long = "n-max")]
    pub n_max: Option<u32>,

    /// Energy of the x motion
    #[arg(long, allow_hyphen_values = true)]
    pub ex: Option<f64>,
    /// Energy of the y motion
    #[arg(long, allow_hyphen_values = true)]
    pub ey: Option<f64>,
    /// Initial ladder phase of the x motion
    #[arg(long = "phase-x", allow_hyphen_values = true)]
    pub phase_x: Option<f64>,
    #[arg(long = "phase-y", allow_hyphen_values = true)]
    pub phase_y: Option<f64>,
    /// End time of the trajectory
    #[arg(long = "t-max", allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    /// Number of trajectory samples, both ends included
    #[arg(long)]
    pub samples: Option<usize>,
    /// CSV output path (stdout when absent)
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// SVG plot path
    #[arg(long)]
    pub svg: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Fock truncation (Morse: fixed to the bound-state count)
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub truncation: Option<usize>,
    /// Points per axis of the 2D grid
    #[arg(long)]
    pub grid: Option<usize>,
    /// Seed of the random on-shell samples
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! layer {
    ($top:expr, $base:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Values of `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        layer!(
            self, base, kind, mass, hbar, length, beta, depth, n_max, ex, ey, phase_x, phase_y,
            t_max, samples, csv, svg, suite, truncation, grid, seed
        )
    }

    pub fn kind(&self) -> Kind {
        self.kind.unwrap_or(Kind::Well)
    }

    /// Validated physical parameters; defaults are `hbar = m = 1`, `L = 2`,
    /// `beta = 1`, `V0 = 15`.
    pub fn params(&self) -> Result<SystemParams, CliError> {
        let (m, h) = (self.mass.unwrap_or(1.0), self.hbar.unwrap_or(1.0));
        let built = match self.kind() {
            Kind::Well => SystemParams::well(m, h, self.length.unwrap_or(2.0)),
            Kind::Morse => {
                SystemParams::morse(m, h, self.beta.unwrap_or(1.0), self.depth.unwrap_or(15.0))
            }
        };
        built.map_err(|e| CliError::Config(e.to_string()))
    }
}
