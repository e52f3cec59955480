use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::Deserialize;
use stochres::noise::NoiseSpec;

/// Bad settings: exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Inclusive grid written `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "String")]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [lo, hi, step] = parts[..] else {
            return Err(format!("grid '{s}' must look like lo:hi:step"));
        };
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("grid '{s}': '{v}' is not a number"));
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(format!("grid '{s}' has non-finite entries"));
        }
        if !(step > 0.0) {
            return Err(format!("grid '{s}' is empty: step must be positive"));
        }
        if hi < lo {
            return Err(format!("grid '{s}' is empty: hi < lo"));
        }
        Ok(Self { lo, hi, step })
    }
}

impl TryFrom<String> for GridSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        Self { lo, hi, step }
    }

    /// Points `lo + i*step` up to `hi`, snapped to 12 decimals so that
    /// decimal grids hit values like 0 exactly.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| {
                let x = self.lo + self.step * i as f64;
                let snapped = (x * 1e12).round() / 1e12;
                if snapped == 0.0 { 0.0 } else { snapped }
            })
            .collect()
    }
}

/// Every knob of every subcommand. Flags override `--config`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// JSON file holding any of the settings below
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// `ou` or `drift=<expr>[;diffusion=<expr>]` in the variable x
    #[arg(long)]
    pub noise: Option<NoiseSpec>,

    /// Threshold
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,

    /// Signal level
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,

    /// Signal level under H0
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,

    /// Signal level under H1
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: Option<f64>,

    /// Noise level
    #[arg(long)]
    pub eps: Option<f64>,

    /// Observation horizon
    #[arg(long = "T", value_name = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,

    /// Euler step
    #[arg(long)]
    pub dt: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Observation scheme: time or energy
    #[arg(long)]
    pub scheme: Option<String>,

    /// `lo:hi:step`; x for law, eps for resonance and test
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,

    /// `lo:hi:step` over the H1 signal level
    #[arg(long = "theta1-grid", allow_hyphen_values = true)]
    pub theta1_grid: Option<GridSpec>,

    /// Prior probability of H0
    #[arg(long)]
    pub p0: Option<f64>,

    /// Replications for the variance study
    #[arg(long)]
    pub reps: Option<usize>,

    /// Labelled paths for the error-rate study
    #[arg(long)]
    pub paths: Option<usize>,

    /// Output file; companion reports go next to it
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($flags:ident, $file:ident; $($field:ident),*) => {
        Settings { config: $flags.config, $($field: $flags.$field.or($file.$field)),* }
    };
}

impl Settings {
    /// Reads `--config` if given and fills every unset flag from it.
    pub fn resolve(self) -> anyhow::Result<Settings> {
        let Some(path) = self.config.clone() else {
            return normalize(self);
        };
        let text = fs::read_to_string(&path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        let file: Settings = serde_json::from_str(&text)
            .map_err(|e| config_error(format!("config {}: {e}", path.display())))?;
        let flags = self;
        normalize(overlay!(flags, file; noise, tau, theta, theta0, theta1, eps, horizon, dt, seed, scheme,
            grid, theta1_grid, p0, reps, paths, out, format))
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise.clone().unwrap_or_default()
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

/// A JSON string such as `"drift=-x^3"` arrives as a label; reparse it.
fn normalize(mut s: Settings) -> anyhow::Result<Settings> {
    if let Some(NoiseSpec::Label(text)) = &s.noise {
        s.noise = Some(text.parse().map_err(|e| config_error(format!("noise: {e}")))?);
    }
    Ok(s)
}
