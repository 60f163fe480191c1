//! TOML run configuration. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use orbitcox_core::geometry::DEFAULT_EARTH_RADIUS_KM;
use orbitcox_core::{ChannelModel, ConstellationModel, EarthFrame, Observer, QuadratureSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub earth: EarthSection,
    pub constellation: ConstellationModel,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub observer: ObserverSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarthSection {
    #[serde(default = "default_earth_radius")]
    pub radius_km: f64,
}

fn default_earth_radius() -> f64 {
    DEFAULT_EARTH_RADIUS_KM
}

impl Default for EarthSection {
    fn default() -> Self {
        Self {
            radius_km: DEFAULT_EARTH_RADIUS_KM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    #[serde(default = "default_latitude")]
    pub latitude_deg: f64,
    #[serde(default)]
    pub longitude_deg: f64,
    /// Redraw the longitude every trial (fixed constellations only matter).
    #[serde(default)]
    pub longitude_uniform: bool,
}

fn default_latitude() -> f64 {
    90.0
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self {
            latitude_deg: 90.0,
            longitude_deg: 0.0,
            longitude_uniform: false,
        }
    }
}

/// What a curve plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `P(D > d)`; grid in km.
    Distance,
    /// Outage against lambda; grid of lambdas.
    OutageLambda,
    /// Outage against mu; grid of mus.
    OutageMu,
    /// `E[exp(-s S)]`; grid of `s`.
    Laplace,
    /// SIR coverage; grid of thresholds in dB. Monte Carlo only.
    Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl GridSpec {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        let grid = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            },
            _ => {
                return Err(CliError::Config(
                    "run.grid needs either `values` or all of `start`, `stop`, `points`".into(),
                ))
            }
        };
        if grid.is_empty() {
            return Err(CliError::Config("empty grid".into()));
        }
        if grid.iter().any(|x| x.is_nan()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("run.grid must be strictly increasing".into()));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_quantity")]
    pub quantity: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

fn default_trials() -> usize {
    10_000
}

fn default_quantity() -> Quantity {
    Quantity::Distance
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: 0,
            quantity: default_quantity(),
            grid: None,
        }
    }
}

impl RunSection {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.grid {
            Some(g) => g.resolve(),
            None => Err(CliError::Config("empty grid".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinomialReference {
    pub count: usize,
    pub radius_km: f64,
}

/// Cox models sharing the configured altitude law with `lambda * mu = total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub total: f64,
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binomial: Option<BinomialReference>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Analytic,
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default = "default_left")]
    pub left: Source,
    #[serde(default = "default_right")]
    pub right: Source,
}

fn default_left() -> Source {
    Source::Analytic
}

fn default_right() -> Source {
    Source::Mc
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            left: Source::Analytic,
            right: Source::Mc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_format")]
    pub format: Format,
    /// Standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_format() -> Format {
    Format::Csv
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            format: Format::Csv,
            path: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let frame = self.frame()?;
        self.constellation
            .validate(&frame)
            .map_err(|e| CliError::Config(format!("constellation: {e}")))?;
        self.channel.validate().map_err(|e| CliError::Config(format!("channel: {e}")))?;
        self.quadrature
            .validate()
            .map_err(|e| CliError::Config(format!("quadrature: {e}")))?;
        if self.run.trials == 0 {
            return Err(CliError::Config("run.trials must be at least 1".into()));
        }
        if !(-90.0..=90.0).contains(&self.observer.latitude_deg) || !self.observer.longitude_deg.is_finite() {
            return Err(CliError::Config("observer latitude must lie in [-90, 90] degrees".into()));
        }
        Ok(())
    }

    pub fn frame(&self) -> Result<EarthFrame, CliError> {
        EarthFrame::new(self.earth.radius_km).map_err(|e| CliError::Config(format!("earth: {e}")))
    }

    pub fn observer(&self) -> Result<Observer, CliError> {
        let frame = self.frame()?;
        if self.observer.latitude_deg == 90.0 {
            return Ok(frame.north_pole());
        }
        frame
            .observer(self.observer.latitude_deg.to_radians(), self.observer.longitude_deg.to_radians())
            .map_err(|e| CliError::Config(format!("observer: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
