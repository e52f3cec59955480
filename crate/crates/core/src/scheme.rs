//! Observation schemes as interchangeable strategies.
//!
//! A scheme turns a path summary into a scalar statistic, knows the
//! statistic's ergodic limit as a function of `theta`, its asymptotic
//! variance, and how to invert the limit. Resonance sweeps and MAP tests are
//! written against [`ObservationScheme`] only.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimators::{self, ChannelConfig, SchemeKind, VarianceReport};
use crate::simulator::ObservationSummary;

pub trait ObservationScheme: fmt::Debug + Send + Sync {
    fn kind(&self) -> SchemeKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// The statistic this scheme reads from a path.
    fn statistic(&self, obs: &ObservationSummary) -> f64;

    /// Ergodic limit of the statistic.
    fn mean(&self, theta: f64, ch: &ChannelConfig) -> Result<f64>;

    /// Derivative of [`ObservationScheme::mean`] in `theta`.
    fn mean_slope(&self, theta: f64, ch: &ChannelConfig) -> Result<f64>;

    /// Asymptotic variance of `sqrt(T)` times the statistic's error.
    fn statistic_variance(&self, theta: f64, ch: &ChannelConfig) -> Result<f64>;

    /// Inverts the ergodic limit.
    fn estimate(&self, statistic: f64, ch: &ChannelConfig) -> Result<f64>;

    /// Delta-method variance of the estimator, statistic variance over slope squared.
    fn asymptotic_variance(&self, theta: f64, ch: &ChannelConfig) -> Result<VarianceReport> {
        let v = self.statistic_variance(theta, ch)?;
        let d = self.mean_slope(theta, ch)?;
        let value = v / (d * d);
        if value.is_nan() || value <= 0.0 {
            return Err(Error::NonFinite { x: value });
        }
        Ok(VarianceReport {
            value,
            fisher: 1.0 / value,
            scheme: self.kind(),
        })
    }
}

/// Fraction of time spent above the threshold.
#[derive(Debug, Clone, Copy, Default)]
pub struct TimeAboveThreshold;

impl ObservationScheme for TimeAboveThreshold {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Time
    }

    fn statistic(&self, obs: &ObservationSummary) -> f64 {
        obs.gamma
    }

    fn mean(&self, theta: f64, ch: &ChannelConfig) -> Result<f64> {
        Ok(estimators::pi_of_theta(theta, ch))
    }

    fn mean_slope(&self, theta: f64, ch: &ChannelConfig) -> Result<f64> {
        Ok(ch.law.density(ch.gap(theta)) / ch.eps)
    }

    fn statistic_variance(&self, theta: f64, ch: &ChannelConfig) -> Result<f64> {
        let law = ch.law.as_ref();
        estimators::edf_variance_with(ch.gap(theta), law, |x| law.diffusion(x), &ch.quadrature)
    }

    fn estimate(&self, statistic: f64, ch: &ChannelConfig) -> Result<f64> {
        estimators::estimate_theta_time(statistic, ch)
    }

    fn asymptotic_variance(&self, theta: f64, ch: &ChannelConfig) -> Result<VarianceReport> {
        estimators::sigma_time(theta, ch)
    }
}

/// Time-averaged squared signal while above the threshold.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyAboveThreshold;

impl ObservationScheme for EnergyAboveThreshold {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Energy
    }

    fn statistic(&self, obs: &ObservationSummary) -> f64 {
        obs.energy
    }

    fn mean(&self, theta: f64, ch: &ChannelConfig) -> Result<f64> {
        estimators::nu_of_theta(theta, ch)
    }

    fn mean_slope(&self, theta: f64, ch: &ChannelConfig) -> Result<f64> {
        estimators::nu_prime(theta, ch)
    }

    fn statistic_variance(&self, theta: f64, ch: &ChannelConfig) -> Result<f64> {
        estimators::energy_variance(theta, ch)
    }

    fn estimate(&self, statistic: f64, ch: &ChannelConfig) -> Result<f64> {
        estimators::estimate_theta_energy(statistic, ch)
    }

    fn asymptotic_variance(&self, theta: f64, ch: &ChannelConfig) -> Result<VarianceReport> {
        estimators::sigma_energy(theta, ch)
    }
}

/// Schemes selectable by name.
#[derive(Debug, Clone, Default)]
pub struct SchemeRegistry {
    entries: BTreeMap<String, Arc<dyn ObservationScheme>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `time` and `energy`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(TimeAboveThreshold));
        r.register(Arc::new(EnergyAboveThreshold));
        r
    }

    /// Adds or replaces the scheme under its own name.
    pub fn register(&mut self, scheme: Arc<dyn ObservationScheme>) {
        self.entries.insert(scheme.name().to_string(), scheme);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ObservationScheme>> {
        self.entries.get(name).cloned().ok_or_else(|| {
            Error::invalid(format!(
                "unknown scheme '{name}' (available: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

pub fn scheme_for(kind: SchemeKind) -> Arc<dyn ObservationScheme> {
    match kind {
        SchemeKind::Time => Arc::new(TimeAboveThreshold),
        SchemeKind::Energy => Arc::new(EnergyAboveThreshold),
    }
}
