use std::sync::Arc;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use stochres::estimators::{self, ChannelConfig, SchemeKind};
use stochres::law::{check_ergodicity, ErgodicityReport, DEFAULT_PROBE};
use stochres::map_test::{find_perr_minimum, p_err_surface, simulate_error_rate, PerrTemplate, Priors, TestProblem};
use stochres::noise::{custom_spec, NoiseModel, NoiseRegistry, NoiseSpec};
use stochres::numerics::Bracket;
use stochres::resonance::{find_resonance, ResonanceConfig};
use stochres::scheme::{EnergyAboveThreshold, ObservationScheme, SchemeRegistry, TimeAboveThreshold};
use stochres::simulator::{simulate_observation, SimConfig};
use stochres::validation::variance_studies;

use crate::config::{config_error, GridSpec, Settings};
use crate::output::Sink;

const MIN_VALIDATE_REPS: usize = 50;

fn sink(s: &Settings) -> Sink {
    Sink::new(s.out.clone(), s.format())
}

fn noise_model(spec: &NoiseSpec) -> Result<NoiseModel> {
    Ok(NoiseRegistry::builtin().resolve(spec)?)
}

fn scheme(s: &Settings) -> Result<Arc<dyn ObservationScheme>> {
    Ok(SchemeRegistry::builtin().get(s.scheme.as_deref().unwrap_or("time"))?)
}

fn below_threshold(theta: f64, tau: f64, what: &str) -> Result<()> {
    if !(theta < tau) {
        return Err(config_error(format!("{what} = {theta} must lie below the threshold tau = {tau}")));
    }
    Ok(())
}

fn grid_bracket(points: &[f64]) -> Result<Bracket> {
    if points.len() < 3 {
        return Err(config_error("noise-level grid needs at least 3 points"));
    }
    Ok(Bracket::new(points[0], points[points.len() - 1])?)
}

#[derive(Serialize)]
struct LawRow {
    x: f64,
    density: f64,
    cdf: f64,
}

#[derive(Serialize)]
struct LawReport {
    noise: String,
    ergodic: bool,
    ergodicity: ErgodicityReport,
    grid: String,
    rows: usize,
}

pub fn law(s: &Settings) -> Result<()> {
    let noise = s.noise();
    let spec = match &noise {
        NoiseSpec::Custom { drift, diffusion } => custom_spec(drift, diffusion)?,
        label => noise_model(label)?.spec,
    };
    let ergodicity = check_ergodicity(&spec, Bracket::new(-DEFAULT_PROBE, DEFAULT_PROBE)?)?;
    if !ergodicity.is_ergodic() {
        let report = serde_json::to_string(&ergodicity)?;
        return Err(stochres::Error::NotErgodic(format!("{noise}: {report}")).into());
    }
    let model = noise_model(&noise)?;
    let grid = s.grid.unwrap_or(GridSpec::new(-4.0, 4.0, 0.1));
    let rows: Vec<LawRow> = grid
        .points()
        .into_iter()
        .map(|x| LawRow {
            x,
            density: model.law.density(x),
            cdf: model.law.cdf(x),
        })
        .collect();
    let report = LawReport {
        noise: noise.to_string(),
        ergodic: true,
        ergodicity,
        grid: grid.to_string(),
        rows: rows.len(),
    };
    sink(s).table(&report, "table", &rows)
}

#[derive(Serialize)]
struct EstimateReport {
    noise: String,
    tau: f64,
    theta: f64,
    eps: f64,
    #[serde(rename = "T")]
    horizon: f64,
    dt: f64,
    seed: u64,
    #[serde(rename = "gamma_T")]
    gamma_t: f64,
    #[serde(rename = "nu_T")]
    nu_t: f64,
    theta_hat_time: f64,
    theta_hat_energy: f64,
    #[serde(rename = "Sigma")]
    sigma: f64,
    #[serde(rename = "Sigma_tilde")]
    sigma_tilde: f64,
}

pub fn estimate(s: &Settings) -> Result<()> {
    let noise = s.noise();
    let (tau, theta, eps) = (s.tau.unwrap_or(1.0), s.theta.unwrap_or(0.5), s.eps.unwrap_or(0.7244));
    below_threshold(theta, tau, "theta")?;
    let model = noise_model(&noise)?;
    let ch = ChannelConfig::new(tau, eps, model.law.clone())?;
    let sim = SimConfig::new(s.horizon.unwrap_or(1000.0), s.dt.unwrap_or(0.01), s.seed.unwrap_or(0))?;
    let obs = simulate_observation(&model.spec, &sim, theta, eps, tau)?;
    let report = EstimateReport {
        noise: noise.to_string(),
        tau,
        theta,
        eps,
        horizon: sim.horizon,
        dt: sim.dt,
        seed: sim.seed,
        gamma_t: obs.gamma,
        nu_t: obs.energy,
        theta_hat_time: estimators::estimate_theta_time(obs.gamma, &ch)?,
        theta_hat_energy: estimators::estimate_theta_energy(obs.energy, &ch)?,
        sigma: estimators::sigma_time(theta, &ch)?.value,
        sigma_tilde: estimators::sigma_energy(theta, &ch)?.value,
    };
    sink(s).report(&report)
}

#[derive(Serialize)]
struct CurveRow {
    eps: f64,
    fisher: f64,
    scheme: SchemeKind,
    theta: f64,
    tau: f64,
    flagged: bool,
}

#[derive(Serialize)]
struct Peak {
    eps: f64,
    fisher: f64,
}

#[derive(Serialize)]
struct ResonanceReport {
    noise: String,
    scheme: SchemeKind,
    theta: f64,
    tau: f64,
    eps_star: f64,
    fisher_star: f64,
    local_maxima: Vec<Peak>,
    flagged_points: usize,
}

pub fn resonance(s: &Settings) -> Result<()> {
    let noise = s.noise();
    let (tau, theta) = (s.tau.unwrap_or(1.0), s.theta.unwrap_or(0.0));
    below_threshold(theta, tau, "theta")?;
    let scheme = scheme(s)?;
    let mut cfg = ResonanceConfig::default();
    if let Some(grid) = s.grid {
        let points = grid.points();
        cfg.bracket = grid_bracket(&points)?;
        cfg.grid_points = points.len();
    }
    let model = noise_model(&noise)?;
    let base = ChannelConfig::new(tau, 1.0, model.law)?;
    let r = find_resonance(theta, &base, scheme.as_ref(), &cfg)?;
    let rows: Vec<CurveRow> = r
        .curve
        .iter()
        .map(|p| CurveRow {
            eps: p.eps,
            fisher: p.fisher,
            scheme: r.scheme,
            theta,
            tau,
            flagged: p.flagged,
        })
        .collect();
    let report = ResonanceReport {
        noise: noise.to_string(),
        scheme: r.scheme,
        theta,
        tau,
        eps_star: r.eps_star,
        fisher_star: r.fisher_star,
        local_maxima: r.local_maxima.iter().map(|&(eps, fisher)| Peak { eps, fisher }).collect(),
        flagged_points: r.flagged_points(),
    };
    sink(s).table(&report, "curve", &rows)
}

#[derive(Serialize)]
struct Trough {
    eps: f64,
    p_err: f64,
}

#[derive(Serialize)]
struct MinimumEntry {
    theta1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_err_min: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    local_minima: Vec<Trough>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_err_at_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_err_at_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct TestReport {
    noise: String,
    scheme: SchemeKind,
    theta0: f64,
    tau: f64,
    #[serde(rename = "T")]
    horizon: f64,
    p0: f64,
    eps_grid: String,
    theta1_grid: String,
    minima: Vec<MinimumEntry>,
}

pub fn test(s: &Settings) -> Result<()> {
    let noise = s.noise();
    let (tau, theta0) = (s.tau.unwrap_or(1.0), s.theta0.unwrap_or(0.0));
    below_threshold(theta0, tau, "theta0")?;
    let priors = Priors::new(s.p0.unwrap_or(0.5))?;
    let horizon = s.horizon.unwrap_or(100.0);
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(config_error(format!("T = {horizon} must be positive")));
    }
    let eps_grid = s.grid.unwrap_or(GridSpec::new(0.05, 3.0, 0.05));
    let theta1_grid = s.theta1_grid.unwrap_or(GridSpec::new(0.05, 0.95, 0.05));
    let eps = eps_grid.points();
    let bracket = grid_bracket(&eps)?;
    let theta1 = theta1_grid.points();
    let scheme = scheme(s)?;
    let model = noise_model(&noise)?;
    let template = PerrTemplate {
        theta0,
        priors,
        base: ChannelConfig::new(tau, 1.0, model.law)?,
        horizon,
        scheme: scheme.clone(),
    };
    let surface = p_err_surface(&template, &theta1, &eps)?;
    let minima = theta1
        .par_iter()
        .map(|&t1| match find_perr_minimum(&template, t1, bracket, eps.len(), 1e-7) {
            Ok(m) => MinimumEntry {
                theta1: t1,
                eps_star: Some(m.eps_star),
                p_err_min: Some(m.p_err_min),
                local_minima: m.local_minima.iter().map(|&(eps, p_err)| Trough { eps, p_err }).collect(),
                p_err_at_lo: Some(m.p_err_at_lo),
                p_err_at_hi: Some(m.p_err_at_hi),
                error: None,
            },
            Err(e) => MinimumEntry {
                theta1: t1,
                eps_star: None,
                p_err_min: None,
                local_minima: Vec::new(),
                p_err_at_lo: None,
                p_err_at_hi: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let report = TestReport {
        noise: noise.to_string(),
        scheme: scheme.kind(),
        theta0,
        tau,
        horizon,
        p0: priors.p0(),
        eps_grid: eps_grid.to_string(),
        theta1_grid: theta1_grid.to_string(),
        minima,
    };
    sink(s).table(&report, "surface", &surface)
}

#[derive(Serialize)]
struct SeedRange {
    first: u64,
    last: u64,
}

#[derive(Serialize)]
struct Seeds {
    variance_study: SeedRange,
    error_rate: SeedRange,
}

#[derive(Serialize)]
struct ValidateReport {
    noise: String,
    tau: f64,
    theta: f64,
    theta0: f64,
    theta1: f64,
    eps: f64,
    #[serde(rename = "T")]
    horizon: f64,
    dt: f64,
    p0: f64,
    scheme: SchemeKind,
    empirical_var_ratio_time: f64,
    empirical_var_ratio_energy: f64,
    empirical_error_rate: f64,
    predicted_p_err: f64,
    error_rate_z: f64,
    n_reps: usize,
    n_paths: usize,
    seeds: Seeds,
    variance_studies: Vec<stochres::validation::VarianceStudy>,
}

pub fn validate(s: &Settings) -> Result<()> {
    let reps = s.reps.unwrap_or(200);
    if reps < MIN_VALIDATE_REPS {
        return Err(config_error(format!("reps = {reps} is below the minimum of {MIN_VALIDATE_REPS}")));
    }
    let paths = s.paths.unwrap_or(2000);
    let noise = s.noise();
    let tau = s.tau.unwrap_or(1.0);
    let (theta, theta0, theta1) = (s.theta.unwrap_or(0.5), s.theta0.unwrap_or(0.0), s.theta1.unwrap_or(0.5));
    for (v, name) in [(theta, "theta"), (theta0, "theta0"), (theta1, "theta1")] {
        below_threshold(v, tau, name)?;
    }
    let eps = s.eps.unwrap_or(0.7244);
    let priors = Priors::new(s.p0.unwrap_or(0.5))?;
    let seed = s.seed.unwrap_or(0);
    let sim = SimConfig::new(s.horizon.unwrap_or(1000.0), s.dt.unwrap_or(0.01), seed)?;
    let scheme = scheme(s)?;
    let model = noise_model(&noise)?;
    let ch = ChannelConfig::new(tau, eps, model.law.clone())?;

    let schemes: [&dyn ObservationScheme; 2] = [&TimeAboveThreshold, &EnergyAboveThreshold];
    let studies = variance_studies(&model.spec, &ch, &schemes, theta, &sim, reps)?;
    let ratio = |kind| studies.iter().find(|v| v.scheme == kind).map_or(f64::NAN, |v| v.ratio);

    let problem = TestProblem::new(theta0, theta1, priors, ch.clone(), sim.horizon, scheme.clone())?;
    let error_seed = seed.wrapping_add(reps as u64);
    let errors = simulate_error_rate(&problem, &model.spec, sim.dt, paths, error_seed)?;

    let report = ValidateReport {
        noise: noise.to_string(),
        tau,
        theta,
        theta0,
        theta1,
        eps,
        horizon: sim.horizon,
        dt: sim.dt,
        p0: priors.p0(),
        scheme: scheme.kind(),
        empirical_var_ratio_time: ratio(SchemeKind::Time),
        empirical_var_ratio_energy: ratio(SchemeKind::Energy),
        empirical_error_rate: errors.empirical_error_rate,
        predicted_p_err: errors.predicted_p_err,
        error_rate_z: errors.z_score(),
        n_reps: reps,
        n_paths: paths,
        seeds: Seeds {
            variance_study: SeedRange {
                first: seed,
                last: seed.wrapping_add(reps as u64 - 1),
            },
            error_rate: SeedRange {
                first: error_seed,
                last: error_seed.wrapping_add(paths as u64 - 1),
            },
        },
        variance_studies: studies,
    };
    sink(s).report(&report)
}
