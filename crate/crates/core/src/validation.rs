//! Monte Carlo checks of the asymptotic variance formulas.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{ChannelConfig, SchemeKind};
use crate::law::DiffusionSpec;
use crate::scheme::ObservationScheme;
use crate::simulator::{replicate, simulate_observation, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceStudy {
    pub scheme: SchemeKind,
    pub theta: f64,
    pub eps: f64,
    pub tau: f64,
    pub horizon: f64,
    pub n_reps: usize,
    /// Replications whose statistic could not be inverted.
    pub n_failed: usize,
    pub mean_estimate: f64,
    pub empirical_variance: f64,
    pub predicted_variance: f64,
    /// `T Var(theta_hat) / Sigma`, close to 1 when the prediction is right.
    pub ratio: f64,
}

/// Simulates `reps` paths (seeds `sim.seed + k`) under `theta` and, for each
/// scheme, compares the spread of the estimates with the predicted variance.
/// All schemes read the same paths.
pub fn variance_studies(
    spec: &DiffusionSpec,
    ch: &ChannelConfig,
    schemes: &[&dyn ObservationScheme],
    theta: f64,
    sim: &SimConfig,
    reps: usize,
) -> Result<Vec<VarianceStudy>> {
    if reps < 2 {
        return Err(Error::invalid("a variance study needs at least 2 replications"));
    }
    let estimates = replicate(reps, sim.seed, |_, seed| {
        let obs = simulate_observation(spec, &sim.with_seed(seed), theta, ch.eps, ch.tau)?;
        Ok(schemes
            .iter()
            .map(|s| s.estimate(s.statistic(&obs), ch).ok())
            .collect::<Vec<_>>())
    })?;

    schemes
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let xs: Vec<f64> = estimates.iter().filter_map(|row| row[j]).collect();
            let n = xs.len();
            if n < 2 {
                return Err(Error::DegenerateObservation(format!(
                    "only {n} of {reps} replications produced a {} estimate",
                    s.name()
                )));
            }
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let predicted = s.asymptotic_variance(theta, ch)?.value;
            Ok(VarianceStudy {
                scheme: s.kind(),
                theta,
                eps: ch.eps,
                tau: ch.tau,
                horizon: sim.horizon,
                n_reps: reps,
                n_failed: reps - n,
                mean_estimate: mean,
                empirical_variance: var,
                predicted_variance: predicted,
                ratio: sim.horizon * var / predicted,
            })
        })
        .collect()
}
