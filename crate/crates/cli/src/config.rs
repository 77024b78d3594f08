//! Optional TOML run configuration. Command-line flags take precedence over
//! values from the file, which take precedence over built-in defaults.

use std::path::Path;

use chrono::NaiveTime;
use momvar_core::simulator::Scheme;
use momvar_core::HestonParams64;
use serde::Deserialize;

use crate::error::CliError;
use crate::ingest::Session;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Observation interval in trading days.
    pub delta_days: Option<f64>,
    #[serde(default)]
    pub session: SessionConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub estimation: EstimationConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub open: Option<String>,
    pub close: Option<String>,
    pub bar_minutes: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// kappa 5, theta 0.05, gamma 0.8, rho -0.5
    Model1,
    /// kappa 15, theta 0.02, gamma 0.7, rho 0.3
    Model2,
    /// kappa 3, theta 0.04, gamma 2, rho -0.5, v0 0.05
    Volvol,
}

impl Preset {
    pub fn params(self) -> HestonParams64 {
        match self {
            Preset::Model1 => HestonParams64::new(5.0, 0.05, 0.8, -0.5),
            Preset::Model2 => HestonParams64::new(15.0, 0.02, 0.7, 0.3),
            Preset::Volvol => HestonParams64::new(3.0, 0.04, 2.0, -0.5).with_v0(0.05),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Start from a named parameter set; individual flags override it
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Mean-reversion speed (per year)
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Long-run variance
    #[arg(long)]
    pub theta: Option<f64>,
    /// Volatility of variance
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Return/variance correlation
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Return drift (per year)
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Initial variance (defaults to theta)
    #[arg(long)]
    pub v0: Option<f64>,
}

impl ModelConfig {
    /// Fields set in `self` win over `fallback`.
    pub fn or(&self, fallback: &ModelConfig) -> ModelConfig {
        ModelConfig {
            preset: self.preset.or(fallback.preset),
            kappa: self.kappa.or(fallback.kappa),
            theta: self.theta.or(fallback.theta),
            gamma: self.gamma.or(fallback.gamma),
            rho: self.rho.or(fallback.rho),
            mu: self.mu.or(fallback.mu),
            v0: self.v0.or(fallback.v0),
        }
    }

    pub fn resolve(&self, default: Preset) -> Result<HestonParams64, CliError> {
        let base = self.preset.unwrap_or(default).params();
        let theta = self.theta.unwrap_or(base.theta);
        // presets that start at their long-run variance keep doing so
        let v0 = self.v0.unwrap_or(if base.v0 == base.theta { theta } else { base.v0 });
        let p = HestonParams64 {
            kappa: self.kappa.unwrap_or(base.kappa),
            theta,
            gamma: self.gamma.unwrap_or(base.gamma),
            rho: self.rho.unwrap_or(base.rho),
            mu: self.mu.unwrap_or(base.mu),
            v0,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub days: Option<usize>,
    pub bars: Option<usize>,
    pub steps_per_day: Option<usize>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub horizon: Option<f64>,
    pub scheme: Option<Scheme>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Simple,
    Gmm,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    pub method: Option<MethodChoice>,
    pub max_iters: Option<u64>,
}

pub fn parse_time(s: &str) -> Result<NaiveTime, CliError> {
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .map_err(|_| CliError::Input(format!("invalid time of day `{s}`, expected HH:MM")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn session(&self, open: Option<&str>, close: Option<&str>, bar_minutes: Option<u32>) -> Result<Session, CliError> {
        let d = Session::default();
        let time = |flag: Option<&str>, file: &Option<String>, default| match flag.or(file.as_deref()) {
            Some(s) => parse_time(s),
            None => Ok(default),
        };
        let s = Session {
            open: time(open, &self.session.open, d.open)?,
            close: time(close, &self.session.close, d.close)?,
            bar_minutes: bar_minutes.or(self.session.bar_minutes).unwrap_or(d.bar_minutes),
        };
        s.validate()?;
        Ok(s)
    }

    /// Observation interval in years.
    pub fn delta(&self, delta_days: Option<f64>) -> Result<f64, CliError> {
        let days = delta_days.or(self.delta_days).unwrap_or(1.0);
        if !(days.is_finite() && days > 0.0) {
            return Err(CliError::Input(format!("delta must be positive, got {days} days")));
        }
        Ok(days * momvar_core::simulator::DAY_LENGTH)
    }
}
