//! Forward maps `pi(theta)` and `nu(theta)`, their inverses (the estimators),
//! and the asymptotic variances of both estimators.
//!
//! With `a = (tau - theta) / eps` and `xi` distributed by the invariant law:
//!
//! * time scheme: `pi = 1 - F(a)`, EDF variance
//!   `V(x) = 4 E[(F(xi ^ x)(1 - F(xi v x)) / (sigma(xi) f(xi)))^2]` and
//!   `Sigma = eps^2 V(a) / f(a)^2`;
//! * energy scheme: `nu = E[(eps xi + theta)^2 ; xi > a]`,
//!   `V~ = 4 E[(M(xi) / (sigma(xi) f(xi)))^2]` with the kernel
//!   `M(y) = E[(F(y) - chi(xi < y)) (eps xi + theta)^2 ; xi > a]`, and
//!   `Sigma~ = V~ / nu'(theta)^2`.
//!
//! Variances are integrated in log space so that tails far below the
//! double-precision range (small `eps`) still produce finite ratios.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{tail_moment_by_quadrature, ClosedForm, InvariantLaw};
use crate::numerics::{self, Bracket, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Time,
    Energy,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Time => "time",
            SchemeKind::Energy => "energy",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Threshold, noise level and noise law of the channel.
#[derive(Clone)]
pub struct ChannelConfig {
    pub tau: f64,
    pub eps: f64,
    pub law: Arc<dyn InvariantLaw>,
    pub quadrature: QuadratureConfig,
}

impl fmt::Debug for ChannelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelConfig")
            .field("tau", &self.tau)
            .field("eps", &self.eps)
            .field("law", &self.law.label())
            .finish()
    }
}

impl ChannelConfig {
    pub fn new(tau: f64, eps: f64, law: Arc<dyn InvariantLaw>) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::invalid(format!("threshold must be finite, got {tau}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("noise level must be positive, got {eps}")));
        }
        Ok(Self {
            tau,
            eps,
            law,
            quadrature: QuadratureConfig::default(),
        })
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut ch = Self::new(self.tau, eps, self.law.clone())?;
        ch.quadrature = self.quadrature;
        Ok(ch)
    }

    /// Standardized gap `a = (tau - theta) / eps` between signal and threshold.
    #[inline]
    pub fn gap(&self, theta: f64) -> f64 {
        (self.tau - theta) / self.eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    /// Asymptotic variance of `sqrt(T) (theta_hat - theta)`.
    pub value: f64,
    /// Fisher information, `1 / value`.
    pub fisher: f64,
    pub scheme: SchemeKind,
}

impl VarianceReport {
    fn new(value: f64, scheme: SchemeKind) -> Result<Self> {
        if value.is_nan() || value <= 0.0 {
            return Err(Error::NonFinite { x: value });
        }
        Ok(Self { value, fisher: 1.0 / value, scheme })
    }

    fn from_ln(ln_value: f64, scheme: SchemeKind) -> Result<Self> {
        if ln_value.is_nan() {
            return Err(Error::NonFinite { x: ln_value });
        }
        Ok(Self {
            value: ln_value.exp(),
            fisher: (-ln_value).exp(),
            scheme,
        })
    }
}

/// `pi(theta) = 1 - F((tau - theta) / eps)`.
pub fn pi_of_theta(theta: f64, ch: &ChannelConfig) -> f64 {
    ch.law.sf(ch.gap(theta))
}

/// `theta_hat = tau - eps F^-1(1 - gamma)`.
pub fn estimate_theta_time(gamma: f64, ch: &ChannelConfig) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 || gamma >= 1.0 {
        return Err(Error::DegenerateObservation(format!(
            "time fraction above threshold is {gamma}; the estimator diverges"
        )));
    }
    Ok(ch.tau - ch.eps * ch.law.quantile(1.0 - gamma)?)
}

/// `ln V(x) - ln_scale`. The integrand is assembled from logarithms and
/// shifted by its own value at `x`, so the result stays finite even when
/// `V(x)` itself under- or overflows.
fn ln_edf_variance(
    x: f64,
    law: &dyn InvariantLaw,
    sigma: &dyn Fn(f64) -> f64,
    ln_scale: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let ln_integrand = |xi: f64| {
        let ln_lo = law.ln_cdf(xi.min(x));
        let ln_hi = law.ln_sf(xi.max(x));
        let ln_f = law.ln_density(xi);
        if ln_lo == f64::NEG_INFINITY || ln_hi == f64::NEG_INFINITY || ln_f == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        2.0 * (ln_lo + ln_hi) - 2.0 * sigma(xi).ln() - ln_f
    };
    let shift = ln_integrand(x);
    if !shift.is_finite() {
        return Err(Error::NonFinite { x });
    }
    let v = numerics::integrate_with_breaks(
        |xi| (ln_integrand(xi) - shift).exp(),
        f64::NEG_INFINITY,
        f64::INFINITY,
        &[x],
        cfg,
    )?;
    Ok((4.0 * v).ln() + shift - ln_scale)
}

/// Asymptotic variance `V(x)` of the empirical distribution function at `x`.
pub fn edf_variance(x: f64, law: &dyn InvariantLaw, sigma: impl Fn(f64) -> f64) -> Result<f64> {
    edf_variance_with(x, law, sigma, &QuadratureConfig::default())
}

pub fn edf_variance_with(
    x: f64,
    law: &dyn InvariantLaw,
    sigma: impl Fn(f64) -> f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    Ok(ln_edf_variance(x, law, &sigma, 0.0, cfg)?.exp())
}

/// `Sigma(theta) = eps^2 V(a) / f(a)^2` by the delta method.
pub fn sigma_time(theta: f64, ch: &ChannelConfig) -> Result<VarianceReport> {
    let a = ch.gap(theta);
    let law = ch.law.as_ref();
    let ln_ratio = ln_edf_variance(a, law, &|x| law.diffusion(x), 2.0 * law.ln_density(a), &ch.quadrature)?;
    VarianceReport::from_ln(2.0 * ch.eps.ln() + ln_ratio, SchemeKind::Time)
}

/// The closed-form OU expression
/// `eps^2 pi^(3/2) e^(2a^2) int (1 + erf(x ^ a))^2 (1 - erf(x v a))^2 e^(x^2) dx`
/// as commonly printed. It differs from [`sigma_time`] on the OU law by the
/// constant factor 4, so it is only useful up to scale.
pub fn sigma_time_ou_printed(theta: f64, tau: f64, eps: f64) -> Result<f64> {
    let a = (tau - theta) / eps;
    // (1 + erf(lo)) = erfc(-lo), (1 - erf(hi)) = erfc(hi)
    let ln_integrand =
        |x: f64| 2.0 * numerics::ln_erfc(-x.min(a)) + 2.0 * numerics::ln_erfc(x.max(a)) + x * x + 2.0 * a * a;
    let shift = ln_integrand(a);
    let cfg = QuadratureConfig::default();
    let v = numerics::integrate_with_breaks(
        |x| (ln_integrand(x) - shift).exp(),
        f64::NEG_INFINITY,
        f64::INFINITY,
        &[a],
        &cfg,
    )?;
    Ok((2.0 * eps.ln() + 1.5 * PI.ln() + v.ln() + shift).exp())
}

/// `nu(theta) = eps^2 E[xi^2; xi > a] + 2 theta eps E[xi; xi > a] + theta^2 (1 - F(a))`.
/// Uses the closed form for the standard OU law and quadrature otherwise.
pub fn nu_of_theta(theta: f64, ch: &ChannelConfig) -> Result<f64> {
    match ch.law.closed_form() {
        Some(ClosedForm::StandardOrnsteinUhlenbeck) => Ok(nu_ou_closed(theta, ch.tau, ch.eps)),
        None => nu_by_quadrature(theta, ch),
    }
}

/// Quadrature route for `nu(theta)`, for any law.
pub fn nu_by_quadrature(theta: f64, ch: &ChannelConfig) -> Result<f64> {
    let a = ch.gap(theta);
    let law = ch.law.as_ref();
    let m0 = tail_moment_by_quadrature(law, 0, a)?;
    let m1 = tail_moment_by_quadrature(law, 1, a)?;
    let m2 = tail_moment_by_quadrature(law, 2, a)?;
    Ok(ch.eps * ch.eps * m2 + 2.0 * theta * ch.eps * m1 + theta * theta * m0)
}

/// OU closed form
/// `nu = (eps^2 + 2 theta^2 + 2 eps (theta + tau) e^(-a^2) / sqrt(pi) - (eps^2 + 2 theta^2) erf(a)) / 4`,
/// written with `erfc` to keep precision when `erf(a)` is close to one.
pub fn nu_ou_closed(theta: f64, tau: f64, eps: f64) -> f64 {
    let a = (tau - theta) / eps;
    let base = eps * eps + 2.0 * theta * theta;
    0.25 * (base * numerics::erfc(a) + 2.0 * eps * (theta + tau) * (-a * a).exp() / PI.sqrt())
}

/// `nu'(theta) = (tau^2 / eps) f(a) + 2 theta (1 - F(a)) + 2 eps E[xi; xi > a]`.
pub fn nu_prime(theta: f64, ch: &ChannelConfig) -> Result<f64> {
    match ch.law.closed_form() {
        Some(ClosedForm::StandardOrnsteinUhlenbeck) => Ok(nu_prime_ou_closed(theta, ch.tau, ch.eps)),
        None => nu_prime_by_quadrature(theta, ch),
    }
}

pub fn nu_prime_by_quadrature(theta: f64, ch: &ChannelConfig) -> Result<f64> {
    let a = ch.gap(theta);
    let law = ch.law.as_ref();
    let m1 = tail_moment_by_quadrature(law, 1, a)?;
    Ok(ch.tau * ch.tau / ch.eps * law.density(a) + 2.0 * theta * law.sf(a) + 2.0 * ch.eps * m1)
}

/// OU closed form `nu' = theta + (eps^2 + tau^2) e^(-a^2) / (eps sqrt(pi)) - theta erf(a)`.
pub fn nu_prime_ou_closed(theta: f64, tau: f64, eps: f64) -> f64 {
    let a = (tau - theta) / eps;
    theta * numerics::erfc(a) + (eps * eps + tau * tau) * (-a * a).exp() / (eps * PI.sqrt())
}

/// Inverts `nu` by monotone root finding on `[0, tau]`, widened to
/// `[-tau, 2 tau]` when the first bracket misses.
pub fn estimate_theta_energy(nu_t: f64, ch: &ChannelConfig) -> Result<f64> {
    if nu_t.is_nan() || nu_t < 0.0 {
        return Err(Error::OutOfRange { value: nu_t });
    }
    if nu_t == 0.0 {
        return Err(Error::DegenerateObservation(
            "observed energy is zero; the signal never crossed the threshold".into(),
        ));
    }
    let g = |theta: f64| nu_of_theta(theta, ch).map(|v| v - nu_t).unwrap_or(f64::NAN);
    let width = if ch.tau > 0.0 { ch.tau } else { 1.0 };
    for (lo, hi) in [(0.0, width), (-width, 2.0 * width)] {
        let (g_lo, g_hi) = (g(lo), g(hi));
        if g_lo.is_finite() && g_hi.is_finite() && g_lo * g_hi <= 0.0 {
            return numerics::find_root(g, Bracket::new(lo, hi)?, 1e-12);
        }
    }
    Err(Error::OutOfRange { value: nu_t })
}

/// `int_y^inf (eps x + theta)^2 f(x) dx` from the law's tail moments.
fn tail_energy(theta: f64, y: f64, ch: &ChannelConfig) -> Result<f64> {
    let law = ch.law.as_ref();
    let m0 = law.tail_moment(0, y)?;
    let m1 = law.tail_moment(1, y)?;
    let m2 = law.tail_moment(2, y)?;
    Ok(ch.eps * ch.eps * m2 + 2.0 * theta * ch.eps * m1 + theta * theta * m0)
}

/// Kernel `M(y) = E[(F(y) - chi(xi < y)) (eps xi + theta)^2 ; xi > a]`.
///
/// Expanding the indicator gives `M(y) = F(y) nu` for `y <= a` and
/// `M(y) = H(y) - (1 - F(y)) nu` above, with `H` the tail energy.
pub fn m_kernel(y: f64, theta: f64, ch: &ChannelConfig) -> Result<f64> {
    let a = ch.gap(theta);
    let nu = tail_energy(theta, a, ch)?;
    kernel_with(y, a, nu, theta, ch)
}

#[inline]
fn kernel_with(y: f64, a: f64, nu: f64, theta: f64, ch: &ChannelConfig) -> Result<f64> {
    if y <= a {
        Ok(ch.law.cdf(y) * nu)
    } else {
        Ok(tail_energy(theta, y, ch)? - ch.law.sf(y) * nu)
    }
}

fn energy_variance_scaled(theta: f64, ch: &ChannelConfig, ln_scale: f64) -> Result<f64> {
    let a = ch.gap(theta);
    let nu = tail_energy(theta, a, ch)?;
    let law = ch.law.as_ref();
    let ln_nu = nu.ln();
    let integrand = |y: f64| {
        let ln_f = law.ln_density(y);
        if ln_f == f64::NEG_INFINITY {
            return 0.0;
        }
        let ln_m = if y <= a {
            law.ln_cdf(y) + ln_nu
        } else {
            match kernel_with(y, a, nu, theta, ch) {
                Ok(m) => m.abs().ln(),
                Err(_) => return f64::NAN,
            }
        };
        if ln_m == f64::NEG_INFINITY {
            return 0.0;
        }
        (2.0 * ln_m - 2.0 * law.diffusion(y).ln() - ln_f - ln_scale).exp()
    };
    let v = numerics::integrate_with_breaks(integrand, f64::NEG_INFINITY, f64::INFINITY, &[a], &ch.quadrature)?;
    Ok(4.0 * v)
}

/// Asymptotic variance `V~(theta)` of the energy statistic.
pub fn energy_variance(theta: f64, ch: &ChannelConfig) -> Result<f64> {
    energy_variance_scaled(theta, ch, 0.0)
}

/// `Sigma~(theta) = V~(theta) / nu'(theta)^2`.
pub fn sigma_energy(theta: f64, ch: &ChannelConfig) -> Result<VarianceReport> {
    let slope = nu_prime(theta, ch)?;
    if !(slope > 0.0) {
        return Err(Error::NonFinite { x: slope });
    }
    let value = energy_variance_scaled(theta, ch, 2.0 * slope.ln())?;
    VarianceReport::new(value, SchemeKind::Energy)
}

/// Log of the Gaussian approximation to the likelihood of a statistic,
/// split into the variance prefactor and the quadratic exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLikelihood {
    pub ln_prefactor: f64,
    pub exponent: f64,
}

impl LogLikelihood {
    pub fn total(&self) -> f64 {
        self.ln_prefactor + self.exponent
    }

    pub(crate) fn gaussian(statistic: f64, mean: f64, variance: f64, horizon: f64) -> Self {
        let r = statistic - mean;
        Self {
            ln_prefactor: 0.5 * horizon.ln() - 0.5 * (2.0 * PI * variance).ln(),
            exponent: -0.5 * horizon * r * r / variance,
        }
    }
}

/// `ln phi(theta; gamma)` with
/// `phi ~ sqrt(T / (2 pi V(a))) exp(-T (1 - gamma - F(a))^2 / (2 V(a)))`.
pub fn approx_log_likelihood_time(theta: f64, gamma: f64, horizon: f64, ch: &ChannelConfig) -> Result<LogLikelihood> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::DegenerateObservation(format!("time fraction {gamma} is not in (0, 1)")));
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    let a = ch.gap(theta);
    let law = ch.law.as_ref();
    let v = edf_variance_with(a, law, |x| law.diffusion(x), &ch.quadrature)?;
    Ok(LogLikelihood::gaussian(gamma, law.sf(a), v, horizon))
}
