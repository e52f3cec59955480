//! Stationary (invariant) laws of one-dimensional ergodic diffusions
//! `dX = S(X) dt + sigma(X) dW`.
//!
//! The invariant density is `f(x) = sigma(x)^-2 exp(2 int_0^x S/sigma^2) / G`.
//! [`NumericLaw`] builds it for arbitrary coefficients on an adaptive grid;
//! [`OuLaw`] is the closed form for `S(x) = -x`, `sigma = 1`, i.e. the
//! Gaussian law with mean 0 and variance 1/2.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{self, Bracket, QuadratureConfig};

pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Drift and diffusion coefficients of the noise SDE.
#[derive(Clone)]
pub struct DiffusionSpec {
    label: String,
    drift: Coefficient,
    diffusion: Coefficient,
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionSpec").field("label", &self.label).finish_non_exhaustive()
    }
}

impl DiffusionSpec {
    pub fn new(
        label: impl Into<String>,
        drift: impl Fn(f64) -> f64 + Send + Sync + 'static,
        diffusion: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
        }
    }

    /// `dX = -X dt + dW`.
    pub fn ornstein_uhlenbeck() -> Self {
        Self::new("ou", |x| -x, |_| 1.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    #[inline]
    pub fn diffusion(&self, x: f64) -> f64 {
        (self.diffusion)(x)
    }

    /// Checks positivity of sigma and finiteness of both coefficients on an
    /// evenly spaced probe grid.
    pub fn validate_on(&self, probe: Bracket) -> Result<()> {
        const N: usize = 401;
        for i in 0..N {
            let x = probe.lo() + probe.width() * i as f64 / (N - 1) as f64;
            let (s, sigma) = (self.drift(x), self.diffusion(x));
            if !s.is_finite() || !sigma.is_finite() {
                return Err(Error::invalid(format!(
                    "coefficients of '{}' are not finite at x = {x}",
                    self.label
                )));
            }
            if sigma <= 0.0 {
                return Err(Error::invalid(format!(
                    "diffusion coefficient of '{}' must be positive, got {sigma} at x = {x}",
                    self.label
                )));
            }
        }
        Ok(())
    }

    /// `2 S / sigma^2`, the derivative of the log scale density.
    fn potential_rate(&self, x: f64) -> f64 {
        let s = self.diffusion(x);
        2.0 * self.drift(x) / (s * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicityReport {
    /// `int_0^y S/sigma^2 du` at the left probe.
    pub c2_left_limit: f64,
    /// Same integral at the right probe.
    pub c2_right_limit: f64,
    /// Normalizer `G`; infinite when the scale density is not integrable.
    pub normalizer: f64,
    pub c2_holds: bool,
    pub c3_holds: bool,
}

impl ErgodicityReport {
    pub fn is_ergodic(&self) -> bool {
        self.c2_holds && self.c3_holds
    }
}

/// Known closed-form laws that some estimators special-case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    StandardOrnsteinUhlenbeck,
}

/// Invariant distribution of an ergodic diffusion together with the
/// diffusion coefficient that generated it.
pub trait InvariantLaw: fmt::Debug + Send + Sync {
    fn label(&self) -> &str;

    fn density(&self, x: f64) -> f64;

    fn ln_density(&self, x: f64) -> f64 {
        self.density(x).ln()
    }

    fn cdf(&self, x: f64) -> f64;

    /// Survival function `1 - F(x)`, accurate in the right tail.
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    fn ln_cdf(&self, x: f64) -> f64 {
        self.cdf(x).ln()
    }

    fn ln_sf(&self, x: f64) -> f64 {
        self.sf(x).ln()
    }

    fn quantile(&self, p: f64) -> Result<f64>;

    /// The normalizer `G`.
    fn normalizer(&self) -> f64;

    /// `sigma(x)` of the generating SDE.
    fn diffusion(&self, x: f64) -> f64;

    /// `int_y^inf x^k f(x) dx`.
    fn tail_moment(&self, k: u32, y: f64) -> Result<f64> {
        tail_moment_by_quadrature(self, k, y)
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        None
    }
}

fn tail_cfg() -> QuadratureConfig {
    QuadratureConfig::default().with_rel_tol(1e-12).with_abs_tol(1e-300)
}

/// Quadrature route for [`InvariantLaw::tail_moment`], usable for any law.
pub fn tail_moment_by_quadrature<L: InvariantLaw + ?Sized>(law: &L, k: u32, y: f64) -> Result<f64> {
    let integrand = |x: f64| {
        let d = law.density(x);
        if d == 0.0 {
            0.0
        } else {
            x.powi(k as i32) * d
        }
    };
    // Split at the origin so that moments below it keep their sign structure.
    numerics::integrate_with_breaks(integrand, y, f64::INFINITY, &[0.0], &tail_cfg())
}

/// Closed-form stationary law of `dX = -X dt + dW`: `N(0, 1/2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OuLaw;

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

impl InvariantLaw for OuLaw {
    fn label(&self) -> &str {
        "ou"
    }

    fn density(&self, x: f64) -> f64 {
        (-x * x).exp() / PI.sqrt()
    }

    fn ln_density(&self, x: f64) -> f64 {
        -x * x - LN_SQRT_PI
    }

    fn cdf(&self, x: f64) -> f64 {
        0.5 * numerics::erfc(-x)
    }

    fn sf(&self, x: f64) -> f64 {
        0.5 * numerics::erfc(x)
    }

    fn ln_cdf(&self, x: f64) -> f64 {
        numerics::ln_erfc(-x) - LN_2
    }

    fn ln_sf(&self, x: f64) -> f64 {
        numerics::ln_erfc(x) - LN_2
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(if p < 0.5 {
            -numerics::erfc_inv(2.0 * p)
        } else {
            numerics::erfc_inv(2.0 * (1.0 - p))
        })
    }

    fn normalizer(&self) -> f64 {
        PI.sqrt()
    }

    fn diffusion(&self, _x: f64) -> f64 {
        1.0
    }

    fn tail_moment(&self, k: u32, y: f64) -> Result<f64> {
        if y == f64::NEG_INFINITY {
            return Ok(match k {
                0 => 1.0,
                1 => 0.0,
                2 => 0.5,
                _ => return tail_moment_by_quadrature(self, k, y),
            });
        }
        let g = (-y * y).exp() / (2.0 * PI.sqrt());
        Ok(match k {
            0 => self.sf(y),
            1 => g,
            2 => (if g == 0.0 { 0.0 } else { y * g }) + 0.5 * self.sf(y),
            _ => return tail_moment_by_quadrature(self, k, y),
        })
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        Some(ClosedForm::StandardOrnsteinUhlenbeck)
    }
}

pub fn ou_law() -> OuLaw {
    OuLaw
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("quantile level must lie in (0, 1), got {p}")))
    }
}

/// Default probe half-width for the ergodicity checks.
pub const DEFAULT_PROBE: f64 = 50.0;
const BASE_STEP: f64 = 0.05;
const MAX_DEPTH: u32 = 24;

/// Log scale density `psi(x) = 2 int_0^x S/sigma^2 - 2 ln sigma(x)` tabulated
/// on a grid containing the origin.
struct Potential {
    nodes: Vec<f64>,
    /// `2 int_0^x S/sigma^2` at each node.
    phi: Vec<f64>,
}

impl Potential {
    fn build(spec: &DiffusionSpec, probe: Bracket, cfg: &QuadratureConfig) -> Result<Self> {
        let n_left = (-probe.lo() / BASE_STEP).ceil() as usize;
        let n_right = (probe.hi() / BASE_STEP).ceil() as usize;
        let mut nodes = Vec::with_capacity(n_left + n_right + 1);
        for i in (1..=n_left).rev() {
            nodes.push((-(i as f64) * BASE_STEP).max(probe.lo()));
        }
        nodes.push(0.0);
        for i in 1..=n_right {
            nodes.push((i as f64 * BASE_STEP).min(probe.hi()));
        }
        nodes.dedup();
        let zero = nodes.iter().position(|&n| n == 0.0).unwrap_or(0);
        let mut phi = vec![0.0; nodes.len()];
        let rate = |x: f64| spec.potential_rate(x);
        for j in zero + 1..nodes.len() {
            phi[j] = phi[j - 1] + numerics::integrate(rate, nodes[j - 1], nodes[j], cfg)?;
        }
        for j in (0..zero).rev() {
            phi[j] = phi[j + 1] - numerics::integrate(rate, nodes[j], nodes[j + 1], cfg)?;
        }
        Ok(Self { nodes, phi })
    }
}

/// Checks the ergodicity conditions numerically on `probe`:
/// (C2) `int_0^y S/sigma^2 -> -inf` as `|y| -> inf`, judged by the integral
/// being negative and still decreasing over the outer half of each side;
/// (C3) finiteness of `G`, judged by negligible scale density at the probes.
pub fn check_ergodicity(spec: &DiffusionSpec, probe: Bracket) -> Result<ErgodicityReport> {
    check_ergodicity_with(spec, probe, &QuadratureConfig::default())
}

pub fn check_ergodicity_with(
    spec: &DiffusionSpec,
    probe: Bracket,
    cfg: &QuadratureConfig,
) -> Result<ErgodicityReport> {
    if !(probe.lo() < 0.0 && probe.hi() > 0.0) {
        return Err(Error::invalid("ergodicity probe must contain the origin"));
    }
    spec.validate_on(probe)?;
    let grid = Grid::build(spec, probe, cfg)?;

    let half_phi = |x: f64| 0.5 * grid.phi_node(x);
    let (left, left_mid) = (half_phi(probe.lo()), half_phi(0.5 * probe.lo()));
    let (right, right_mid) = (half_phi(probe.hi()), half_phi(0.5 * probe.hi()));
    let c2_holds = left < 0.0 && right < 0.0 && left < left_mid && right < right_mid;

    let ln_g = grid.ln_normalizer();
    let normalizer = ln_g.exp();
    let edge_mass = |x: f64| (grid.psi_node(x) - ln_g).exp() * x.abs();
    let c3_holds = normalizer.is_finite()
        && normalizer > 0.0
        && edge_mass(probe.lo()) < 1e-8
        && edge_mass(probe.hi()) < 1e-8;

    Ok(ErgodicityReport {
        c2_left_limit: left,
        c2_right_limit: right,
        normalizer: if c3_holds { normalizer } else { f64::INFINITY },
        c2_holds,
        c3_holds,
    })
}

/// Adaptive grid holding the log scale density at nodes and the scaled mass
/// of each cell.
struct Grid {
    spec: DiffusionSpec,
    nodes: Vec<f64>,
    phi: Vec<f64>,
    /// Log shift applied to every mass (max of psi over the nodes).
    shift: f64,
    /// `cum_left[j] = sum of masses of cells left of node j`.
    cum_left: Vec<f64>,
    /// `cum_right[j] = sum of masses of cells right of node j`.
    cum_right: Vec<f64>,
}

impl Grid {
    fn build(spec: &DiffusionSpec, probe: Bracket, cfg: &QuadratureConfig) -> Result<Self> {
        let coarse = Potential::build(spec, probe, cfg)?;
        let psi_of = |x: f64, phi: f64| phi - 2.0 * spec.diffusion(x).ln();
        let shift = coarse
            .nodes
            .iter()
            .zip(&coarse.phi)
            .map(|(&x, &p)| psi_of(x, p))
            .fold(f64::NEG_INFINITY, f64::max);

        let mut nodes = vec![coarse.nodes[0]];
        let mut phi = vec![coarse.phi[0]];
        let mut masses = Vec::with_capacity(coarse.nodes.len());
        for j in 0..coarse.nodes.len() - 1 {
            refine_cell(
                spec,
                shift,
                (coarse.nodes[j], coarse.phi[j]),
                (coarse.nodes[j + 1], coarse.phi[j + 1]),
                0,
                &mut nodes,
                &mut phi,
                &mut masses,
            )?;
        }

        let mut cum_left = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cum_left.push(0.0);
        for &m in &masses {
            acc += m;
            cum_left.push(acc);
        }
        let mut cum_right = vec![0.0; nodes.len()];
        let mut acc = 0.0;
        for j in (0..masses.len()).rev() {
            acc += masses[j];
            cum_right[j] = acc;
        }

        Ok(Self {
            spec: spec.clone(),
            nodes,
            phi,
            shift,
            cum_left,
            cum_right,
        })
    }

    fn total(&self) -> f64 {
        *self.cum_left.last().unwrap_or(&0.0)
    }

    fn ln_normalizer(&self) -> f64 {
        self.shift + self.total().ln()
    }

    fn lo(&self) -> f64 {
        self.nodes[0]
    }

    fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index `j` of the cell `[nodes[j], nodes[j + 1]]` containing `x`.
    fn cell(&self, x: f64) -> usize {
        let j = self.nodes.partition_point(|&n| n <= x);
        j.saturating_sub(1).min(self.nodes.len() - 2)
    }

    /// `2 int_0^x S/sigma^2` for `x` inside the grid.
    fn phi_node(&self, x: f64) -> f64 {
        let j = self.cell(x);
        phi_from(&self.spec, self.nodes[j], self.phi[j], x)
    }

    fn psi_node(&self, x: f64) -> f64 {
        self.phi_node(x) - 2.0 * self.spec.diffusion(x).ln()
    }

    /// Scaled mass between the left node of `x`'s cell and `x`.
    fn partial_left(&self, j: usize, x: f64) -> f64 {
        let (a, pa) = (self.nodes[j], self.phi[j]);
        numerics::gauss_kronrod_15(|t| scaled_density(&self.spec, self.shift, a, pa, t), a, x).unwrap_or(f64::NAN)
    }
}

#[inline]
fn phi_from(spec: &DiffusionSpec, a: f64, phi_a: f64, x: f64) -> f64 {
    if x == a {
        return phi_a;
    }
    phi_a + numerics::gauss_kronrod_15(|u| spec.potential_rate(u), a, x).unwrap_or(f64::NAN)
}

#[inline]
fn scaled_density(spec: &DiffusionSpec, shift: f64, a: f64, phi_a: f64, x: f64) -> f64 {
    let s = spec.diffusion(x);
    (phi_from(spec, a, phi_a, x) - shift).exp() / (s * s)
}

#[allow(clippy::too_many_arguments)]
fn refine_cell(
    spec: &DiffusionSpec,
    shift: f64,
    (a, phi_a): (f64, f64),
    (b, phi_b): (f64, f64),
    depth: u32,
    nodes: &mut Vec<f64>,
    phi: &mut Vec<f64>,
    masses: &mut Vec<f64>,
) -> Result<()> {
    let mass = numerics::gauss_kronrod_15(|t| scaled_density(spec, shift, a, phi_a, t), a, b)?;
    let mid = 0.5 * (a + b);
    let halves = numerics::gauss_kronrod_15(|t| scaled_density(spec, shift, a, phi_a, t), a, mid)?
        + numerics::gauss_kronrod_15(|t| scaled_density(spec, shift, a, phi_a, t), mid, b)?;
    let phi_err = (phi_from(spec, a, phi_a, b) - phi_b).abs();
    let mass_err = (mass - halves).abs();
    let accurate = phi_err <= 1e-11 * phi_b.abs().max(1.0) && (mass_err <= 1e-13 * mass || mass_err < 1e-300);
    if accurate || depth >= MAX_DEPTH {
        nodes.push(b);
        phi.push(phi_b);
        masses.push(halves);
        return Ok(());
    }
    let phi_mid = phi_a + numerics::integrate(|u| spec.potential_rate(u), a, mid, &QuadratureConfig::default())?;
    refine_cell(spec, shift, (a, phi_a), (mid, phi_mid), depth + 1, nodes, phi, masses)?;
    refine_cell(spec, shift, (mid, phi_mid), (b, phi_b), depth + 1, nodes, phi, masses)
}

/// Invariant law of an arbitrary ergodic diffusion, tabulated on an adaptive
/// grid. Between nodes the distribution function is completed by a local
/// 15-point Kronrod rule, so `F` is exact to quadrature precision everywhere.
pub struct NumericLaw {
    grid: Grid,
    report: ErgodicityReport,
}

impl fmt::Debug for NumericLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericLaw")
            .field("label", &self.grid.spec.label())
            .field("nodes", &self.grid.nodes.len())
            .field("report", &self.report)
            .finish()
    }
}

impl NumericLaw {
    pub fn report(&self) -> &ErgodicityReport {
        &self.report
    }

    pub fn spec(&self) -> &DiffusionSpec {
        &self.grid.spec
    }

    /// Support of the tabulation; outside it the density is treated as zero.
    pub fn support(&self) -> (f64, f64) {
        (self.grid.lo(), self.grid.hi())
    }
}

/// Builds the invariant law with the default probe `[-50, 50]`.
pub fn build_invariant_law(spec: &DiffusionSpec) -> Result<NumericLaw> {
    build_invariant_law_on(spec, Bracket::new(-DEFAULT_PROBE, DEFAULT_PROBE)?)
}

pub fn build_invariant_law_on(spec: &DiffusionSpec, probe: Bracket) -> Result<NumericLaw> {
    let report = check_ergodicity(spec, probe)?;
    if !report.c2_holds {
        return Err(Error::NotErgodic(format!(
            "'{}': int_0^y S/sigma^2 does not diverge to -inf (left {:.4e}, right {:.4e})",
            spec.label(),
            report.c2_left_limit,
            report.c2_right_limit
        )));
    }
    if !report.c3_holds {
        return Err(Error::NotErgodic(format!(
            "'{}': normalizer G is not finite on the probe range",
            spec.label()
        )));
    }
    let grid = Grid::build(spec, probe, &QuadratureConfig::default())?;
    Ok(NumericLaw { grid, report })
}

impl InvariantLaw for NumericLaw {
    fn label(&self) -> &str {
        self.grid.spec.label()
    }

    fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    fn ln_density(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < self.grid.lo() || x > self.grid.hi() {
            return f64::NEG_INFINITY;
        }
        self.grid.psi_node(x) - self.grid.ln_normalizer()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.grid.lo() {
            return 0.0;
        }
        if x >= self.grid.hi() {
            return 1.0;
        }
        let j = self.grid.cell(x);
        ((self.grid.cum_left[j] + self.grid.partial_left(j, x)) / self.grid.total()).clamp(0.0, 1.0)
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= self.grid.lo() {
            return 1.0;
        }
        if x >= self.grid.hi() {
            return 0.0;
        }
        let j = self.grid.cell(x);
        let cell_mass = self.grid.cum_left[j + 1] - self.grid.cum_left[j];
        let right = self.grid.cum_right[j + 1] + (cell_mass - self.grid.partial_left(j, x)).max(0.0);
        (right / self.grid.total()).clamp(0.0, 1.0)
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let (lo_lim, hi_lim) = (self.grid.lo(), self.grid.hi());
        let q = 1.0 - p;
        // Solve on whichever side of the median keeps the target representable.
        let g = |x: f64| if p <= 0.5 { self.cdf(x) - p } else { q - self.sf(x) };
        let mut lo = -1.0f64;
        while g(lo) > 0.0 && lo > lo_lim {
            lo = (2.0 * lo).max(lo_lim);
        }
        let mut hi = 1.0f64;
        while g(hi) < 0.0 && hi < hi_lim {
            hi = (2.0 * hi).min(hi_lim);
        }
        numerics::find_root(g, Bracket::new(lo, hi)?, 1e-13)
    }

    fn normalizer(&self) -> f64 {
        self.report.normalizer
    }

    fn diffusion(&self, x: f64) -> f64 {
        self.grid.spec.diffusion(x)
    }
}
