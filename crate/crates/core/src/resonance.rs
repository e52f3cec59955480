//! Fisher information as a function of the noise level, and its maximizer.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{ChannelConfig, SchemeKind};
use crate::numerics::{self, Bracket};
use crate::scheme::ObservationScheme;

pub const DEFAULT_EPS_LO: f64 = 0.02;
pub const DEFAULT_EPS_HI: f64 = 3.0;
pub const DEFAULT_GRID_POINTS: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub eps: f64,
    pub fisher: f64,
    /// The variance could not be evaluated here and `fisher` was set to 0.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceResult {
    pub scheme: SchemeKind,
    pub theta: f64,
    pub tau: f64,
    pub eps_star: f64,
    pub fisher_star: f64,
    /// Refined interior maxima `(eps, fisher)`; more than one means multi-resonance.
    pub local_maxima: Vec<(f64, f64)>,
    pub curve: Vec<CurvePoint>,
}

impl ResonanceResult {
    pub fn flagged_points(&self) -> usize {
        self.curve.iter().filter(|p| p.flagged).count()
    }
}

/// Fisher information at one noise level. Failures and non-finite values
/// become `(0, true)`.
pub fn fisher_at(theta: f64, eps: f64, base: &ChannelConfig, scheme: &dyn ObservationScheme) -> (f64, bool) {
    let report = base.with_eps(eps).and_then(|ch| scheme.asymptotic_variance(theta, &ch));
    match report {
        Ok(r) if r.fisher.is_finite() && r.fisher >= 0.0 => (r.fisher, false),
        _ => (0.0, true),
    }
}

fn check_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return Err(Error::invalid("noise-level grid is empty"));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("noise levels must be positive and finite"));
    }
    if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("noise-level grid must be strictly increasing"));
    }
    Ok(())
}

/// Fisher information on `eps_grid`, evaluated in parallel. `base` supplies
/// the threshold, law and quadrature settings; its own `eps` is ignored.
pub fn resonance_curve(
    theta: f64,
    base: &ChannelConfig,
    scheme: &dyn ObservationScheme,
    eps_grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    check_grid(eps_grid)?;
    Ok(eps_grid
        .par_iter()
        .map(|&eps| {
            let (fisher, flagged) = fisher_at(theta, eps, base, scheme);
            CurvePoint { eps, fisher, flagged }
        })
        .collect())
}

/// Evenly spaced grid with both ends included.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceConfig {
    pub bracket: Bracket,
    pub grid_points: usize,
    pub tol: f64,
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        Self {
            bracket: Bracket::new(DEFAULT_EPS_LO, DEFAULT_EPS_HI).expect("valid default bracket"),
            grid_points: DEFAULT_GRID_POINTS,
            tol: DEFAULT_TOL,
        }
    }
}

/// Scans the bracket, then refines every interior peak of `eps -> fisher`.
pub fn find_resonance(
    theta: f64,
    base: &ChannelConfig,
    scheme: &dyn ObservationScheme,
    cfg: &ResonanceConfig,
) -> Result<ResonanceResult> {
    if !(cfg.bracket.lo() > 0.0) {
        return Err(Error::invalid("noise-level bracket must be positive"));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if cfg.grid_points < 3 {
        return Err(Error::invalid("resonance scan needs at least 3 grid points"));
    }
    let grid = linear_grid(cfg.bracket.lo(), cfg.bracket.hi(), cfg.grid_points);
    let curve = resonance_curve(theta, base, scheme, &grid)?;
    let values: Vec<f64> = curve.iter().map(|p| p.fisher).collect();
    let max = numerics::maximize_sampled(|eps| fisher_at(theta, eps, base, scheme).0, &grid, &values, cfg.tol)?;
    Ok(ResonanceResult {
        scheme: scheme.kind(),
        theta,
        tau: base.tau,
        eps_star: max.x_star,
        fisher_star: max.h_star,
        local_maxima: max.local_maxima,
        curve,
    })
}
