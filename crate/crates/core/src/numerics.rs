//! Numerical kernels shared by the statistical modules: the error-function
//! family, adaptive Gauss-Kronrod quadrature on finite and infinite domains,
//! bracketed root finding and grid-plus-golden-section maximization.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// `erf(x) = 2/sqrt(pi) * int_0^x exp(-t^2) dt`.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Inverse of [`erf`] on (-1, 1).
pub fn erf_inv(y: f64) -> f64 {
    let mut x = statrs::function::erf::erf_inv(y);
    // Newton polish; the starting point is already within ~1e-9.
    for _ in 0..2 {
        let slope = FRAC_2_SQRT_PI * (-x * x).exp();
        if !x.is_finite() || slope == 0.0 {
            break;
        }
        x -= (erf(x) - y) / slope;
    }
    x
}

/// Inverse of [`erfc`] on (0, 2).
pub fn erfc_inv(y: f64) -> f64 {
    let mut x = statrs::function::erf::erfc_inv(y);
    for _ in 0..2 {
        let slope = -FRAC_2_SQRT_PI * (-x * x).exp();
        if !x.is_finite() || slope == 0.0 {
            break;
        }
        x -= (erfc(x) - y) / slope;
    }
    x
}

/// `ln(erfc(x))`, finite far beyond the point where `erfc` underflows.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 26.0 {
        return erfc(x).ln();
    }
    // Asymptotic series; at x >= 26 the truncation error is below 1e-12.
    let r = 1.0 / (2.0 * x * x);
    let series = 1.0 - r + 3.0 * r * r - 15.0 * r.powi(3) + 105.0 * r.powi(4);
    -x * x - (x * PI.sqrt()).ln() + series.ln()
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::invalid("max_subdivisions must be at least 1"));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::invalid(format!("bracket requires lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss-Kronrod 7/15 panel. Returns (kronrod estimate, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { x })
        }
    };
    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&node, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * node;
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Fixed (non-adaptive) 15-point Kronrod estimate of `int_a^b f`.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    gk15(&f, a, b).map(|(v, _)| v)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive bisection on a finite interval, starting from `initial`
/// equal panels.
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    initial: usize,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    cfg.validate()?;
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let step = (b - a) / initial as f64;
    for k in 0..initial {
        let lo = a + step * k as f64;
        let hi = if k + 1 == initial { b } else { lo + step };
        let (value, error) = gk15(f, lo, hi)?;
        total += value;
        total_err += error;
        heap.push(Panel { a: lo, b: hi, value, error });
    }

    let mut splits = 0;
    loop {
        let tolerance = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= tolerance {
            return Ok(total);
        }
        if splits >= cfg.max_subdivisions {
            return Err(Error::NonConvergence {
                subdivisions: splits,
                estimate: total_err,
                tolerance,
            });
        }
        let Some(worst) = heap.pop() else {
            return Ok(total);
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel is at floating-point resolution; nothing left to refine.
            return Err(Error::NonConvergence {
                subdivisions: splits,
                estimate: total_err,
                tolerance,
            });
        }
        let (v1, e1) = gk15(f, worst.a, mid)?;
        let (v2, e2) = gk15(f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        // Guard against drift in the running sums.
        if total_err < 0.0 {
            total_err = heap.iter().map(|p| p.error).sum::<f64>() + e1 + e2;
        }
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        splits += 1;
    }
}

const INITIAL_PANELS: usize = 8;

/// Integrates `f` over `[lo, hi]`, where either end may be infinite.
///
/// Doubly infinite domains use `x = t / (1 - t^2)` on `(-1, 1)`; half lines
/// use `x = lo + t / (1 - t)` (or its mirror) on `[0, 1)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::invalid("integration limits must not be NaN"));
    }
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return integrate(f, hi, lo, cfg).map(|v| -v);
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive(&f, lo, hi, INITIAL_PANELS, cfg),
        (false, false) => {
            let g = |t: f64| {
                let d = 1.0 - t * t;
                let x = t / d;
                let jac = (1.0 + t * t) / (d * d);
                weighted(&f, x, jac)
            };
            adaptive(&g, -1.0, 1.0, INITIAL_PANELS, cfg)
        }
        (true, false) => {
            let g = |t: f64| {
                let d = 1.0 - t;
                weighted(&f, lo + t / d, 1.0 / (d * d))
            };
            adaptive(&g, 0.0, 1.0, INITIAL_PANELS, cfg)
        }
        (false, true) => {
            let g = |t: f64| {
                let d = 1.0 - t;
                weighted(&f, hi - t / d, 1.0 / (d * d))
            };
            adaptive(&g, 0.0, 1.0, INITIAL_PANELS, cfg)
        }
    }
}

// A vanishing integrand times an exploding Jacobian counts as zero.
#[inline]
fn weighted<F: Fn(f64) -> f64>(f: &F, x: f64, jac: f64) -> f64 {
    if !x.is_finite() || !jac.is_finite() {
        return 0.0;
    }
    let v = f(x);
    if v == 0.0 {
        0.0
    } else {
        v * jac
    }
}

/// `int_{-inf}^{inf} f(x) dx`.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<f64> {
    integrate(f, f64::NEG_INFINITY, f64::INFINITY, cfg)
}

/// Integrates over `[lo, hi]` split at the interior `breaks` (kinks,
/// discontinuities, peaks). Breaks outside the open interval are ignored.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&p| p.is_finite() && p > lo && p < hi)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(lo);
    edges.extend(points);
    edges.push(hi);
    let mut sum = 0.0;
    for w in edges.windows(2) {
        sum += integrate(&f, w[0], w[1], cfg)?;
    }
    Ok(sum)
}

/// Brent's method. Returns a root with final bracket width at most `tol`.
pub fn find_root<G: Fn(f64) -> f64>(g: G, bracket: Bracket, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("root tolerance must be positive"));
    }
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (g(a), g(b));
    if !fa.is_finite() {
        return Err(Error::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(Error::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BadBracket { lo: a, hi: b, g_lo: fa, g_hi: fb });
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1.max(0.5 * tol) * 0.999_999 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = g(b);
        if !fb.is_finite() {
            return Err(Error::NonFinite { x: b });
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarMaximum {
    pub x_star: f64,
    pub h_star: f64,
    /// Refined interior local maxima `(x, h(x))`, in increasing `x`.
    pub local_maxima: Vec<(f64, f64)>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_section<H: Fn(f64) -> f64>(h: &H, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let checked = |x: f64| -> Result<f64> {
        let v = h(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { x })
        }
    };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut h1 = checked(x1)?;
    let mut h2 = checked(x2)?;
    while (b - a) > tol {
        if h1 < h2 {
            a = x1;
            x1 = x2;
            h1 = h2;
            x2 = a + INV_PHI * (b - a);
            h2 = checked(x2)?;
        } else {
            b = x2;
            x2 = x1;
            h2 = h1;
            x1 = b - INV_PHI * (b - a);
            h1 = checked(x1)?;
        }
    }
    Ok(if h1 >= h2 { (x1, h1) } else { (x2, h2) })
}

/// Scans `grid_n` equally spaced points of the bracket, refines every
/// interior local maximum by golden-section search down to `tol`, and returns
/// the global maximizer among the refined peaks and the two endpoints.
pub fn maximize_scalar<H: Fn(f64) -> f64>(
    h: H,
    bracket: Bracket,
    grid_n: usize,
    tol: f64,
) -> Result<ScalarMaximum> {
    if grid_n < 16 {
        return Err(Error::invalid("maximize_scalar needs at least 16 grid points"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("maximization tolerance must be positive"));
    }
    let step = bracket.width() / (grid_n - 1) as f64;
    let xs: Vec<f64> = (0..grid_n)
        .map(|i| if i + 1 == grid_n { bracket.hi } else { bracket.lo + step * i as f64 })
        .collect();
    let hs: Vec<f64> = xs.iter().map(|&x| h(x)).collect();
    maximize_sampled(h, &xs, &hs, tol)
}

/// Refinement stage of [`maximize_scalar`] for a grid that has already been
/// evaluated, e.g. in parallel. `xs` must be increasing.
pub fn maximize_sampled<H: Fn(f64) -> f64>(h: H, xs: &[f64], hs: &[f64], tol: f64) -> Result<ScalarMaximum> {
    let grid_n = xs.len();
    if grid_n < 3 || hs.len() != grid_n {
        return Err(Error::invalid("sampled grid needs at least 3 points and one value per point"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("maximization tolerance must be positive"));
    }
    if let Some(i) = hs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { x: xs[i] });
    }

    let mut local_maxima = Vec::new();
    for i in 1..grid_n - 1 {
        if hs[i] >= hs[i - 1] && hs[i] > hs[i + 1] {
            let refined = golden_section(&h, xs[i - 1], xs[i + 1], tol)?;
            local_maxima.push(if refined.1 >= hs[i] { refined } else { (xs[i], hs[i]) });
        }
    }

    let mut best = (xs[0], hs[0]);
    let last = (xs[grid_n - 1], hs[grid_n - 1]);
    if last.1 > best.1 {
        best = last;
    }
    for &(x, v) in &local_maxima {
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(ScalarMaximum {
        x_star: best.0,
        h_star: best.1,
        local_maxima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    // Maclaurin series for erf; converges quickly for |x| <= 3.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x * x / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn erf_values() {
        assert_eq!(erf(0.0), 0.0);
        assert_abs_diff_eq!(erf_series(1.0), 0.842_700_792_9, epsilon = 1e-9);
        assert_abs_diff_eq!(erf(1.0), erf_series(1.0), epsilon = 1e-14);
        assert_abs_diff_eq!(erf(-1.0), -0.842_700_792_9, epsilon = 1e-9);
        for &x in &[0.1, 0.5, 1.7, 2.5] {
            assert_abs_diff_eq!(erf(x), erf_series(x), epsilon = 1e-13);
        }
    }

    #[test]
    fn erf_is_odd_increasing_and_bounded() {
        let mut prev = -1.0;
        for i in -400..=400 {
            let x = i as f64 * 0.01;
            let v = erf(x);
            assert!(v.abs() < 1.0 || x.abs() > 5.0);
            assert!(v >= prev);
            assert_eq!(v, -erf(-x));
            prev = v;
        }
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_abs_diff_eq!(normal_cdf(1.0), 0.5 * (1.0 + erf_series(1.0 / SQRT_2)), epsilon = 1e-12);
        assert_abs_diff_eq!(normal_cdf(1.0), 0.841_344_746_1, epsilon = 1e-9);
        assert!(normal_cdf(-40.0) < 1e-300);
        for i in 0..=80 {
            let z = i as f64 * 0.1;
            assert_abs_diff_eq!(normal_cdf(z) + normal_cdf(-z), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ln_erfc_matches_direct_value_and_continues_past_underflow() {
        for &x in &[-3.0, 0.0, 1.0, 10.0, 25.9] {
            assert_abs_diff_eq!(ln_erfc(x), erfc(x).ln(), epsilon = 1e-10);
        }
        // Continuity across the switch point.
        assert_abs_diff_eq!(ln_erfc(25.999_999), ln_erfc(26.0), epsilon = 1e-4);
        assert!(ln_erfc(40.0).is_finite());
        assert!(ln_erfc(40.0) < -1600.0);
    }

    #[test]
    fn gaussian_integrals_on_the_line() {
        let cfg = QuadratureConfig::default();
        let v = integrate_line(|x| (-x * x).exp(), &cfg).unwrap();
        assert_abs_diff_eq!(v, PI.sqrt(), epsilon = 1e-9);
        let v = integrate_line(|x| x * (-x * x).exp(), &cfg).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        let v = integrate_line(|x| x * x * (-x * x).exp(), &cfg).unwrap();
        assert_abs_diff_eq!(v, PI.sqrt() / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn half_lines_and_reversed_limits() {
        let cfg = QuadratureConfig::default();
        let right = integrate(|x| (-x).exp(), 1.0, f64::INFINITY, &cfg).unwrap();
        assert_abs_diff_eq!(right, (-1.0f64).exp(), epsilon = 1e-12);
        let left = integrate(|x| x.exp(), f64::NEG_INFINITY, 0.0, &cfg).unwrap();
        assert_abs_diff_eq!(left, 1.0, epsilon = 1e-12);
        let rev = integrate(|x| x * x, 3.0, 0.0, &cfg).unwrap();
        assert_abs_diff_eq!(rev, -9.0, epsilon = 1e-12);
    }

    #[test]
    fn kinked_integrand_with_breaks() {
        let cfg = QuadratureConfig::default();
        let v = integrate_with_breaks(|x: f64| (x - 0.3).abs(), -1.0, 1.0, &[0.3], &cfg).unwrap();
        assert_abs_diff_eq!(v, 0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7, epsilon = 1e-13);
    }

    #[test]
    fn exhausted_budget_is_reported() {
        let cfg = QuadratureConfig { rel_tol: 1e-15, abs_tol: 1e-300, max_subdivisions: 3 };
        let err = integrate(|x: f64| (1.0 / x).sin(), 0.001, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig { rel_tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig { max_subdivisions: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(Bracket::new(1.0, 1.0).is_err());
    }

    #[test]
    fn roots() {
        let r = find_root(|x| x - 2.0, Bracket::new(0.0, 5.0).unwrap(), 1e-10).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-10);

        // Oracle: plain bisection on the series erf.
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if erf_series(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_abs_diff_eq!(lo, 0.476_936_276_2, epsilon = 1e-9);
        let r = find_root(|x| erf(x) - 0.5, Bracket::new(0.0, 1.0).unwrap(), 1e-10).unwrap();
        assert_abs_diff_eq!(r, lo, epsilon = 1e-8);
        assert!((erf(r) - 0.5).abs() < 10.0 * 1e-10 * 2.0 / PI.sqrt());

        let err = find_root(|x| x * x + 1.0, Bracket::new(0.0, 1.0).unwrap(), 1e-10).unwrap_err();
        assert!(matches!(err, Error::BadBracket { .. }));
    }

    #[test]
    fn maximize_examples() {
        let tol = 1e-7;
        let m = maximize_scalar(|x| -(x - 1.0).powi(2), Bracket::new(0.0, 3.0).unwrap(), 32, tol).unwrap();
        assert_abs_diff_eq!(m.x_star, 1.0, epsilon = 1e-6);

        let m = maximize_scalar(f64::sin, Bracket::new(0.0, 2.0 * PI).unwrap(), 32, tol).unwrap();
        assert_abs_diff_eq!(m.x_star, PI / 2.0, epsilon = 1e-6);
        assert_eq!(m.local_maxima.len(), 1);

        let bumps = |x: f64| (-(x - 1.0).powi(2)).exp() + 0.5 * (-(x - 3.0).powi(2)).exp();
        // Dense-grid oracle for the global peak.
        let oracle = (0..=500_000)
            .map(|i| i as f64 * 1e-5)
            .max_by(|a, b| bumps(*a).total_cmp(&bumps(*b)))
            .unwrap();
        let m = maximize_scalar(bumps, Bracket::new(0.0, 5.0).unwrap(), 64, tol).unwrap();
        assert_eq!(m.local_maxima.len(), 2);
        assert_abs_diff_eq!(m.x_star, oracle, epsilon = 1e-4);
        assert!(m.x_star < 2.0);
    }

    #[test]
    fn maximize_rejects_non_finite_and_small_grids() {
        let b = Bracket::new(-1.0, 1.0).unwrap();
        assert!(matches!(maximize_scalar(|x| 1.0 / x, b, 17, 1e-6), Err(Error::NonFinite { .. })));
        assert!(matches!(maximize_scalar(|_| f64::NAN, b, 16, 1e-6), Err(Error::NonFinite { .. })));
        assert!(maximize_scalar(|x| x, b, 8, 1e-6).is_err());
    }

    #[test]
    fn argmax_is_invariant_under_positive_scaling() {
        let b = Bracket::new(0.0, 5.0).unwrap();
        let base = |x: f64| (-(x - 1.3).powi(2)).exp() + 0.4 * (-(x - 3.5).powi(2)).exp();
        let reference = maximize_scalar(base, b, 40, 1e-9).unwrap();
        for &c in &[1e-6, 0.3, 7.0, 1e5] {
            let m = maximize_scalar(|x| c * base(x), b, 40, 1e-9).unwrap();
            assert_abs_diff_eq!(m.x_star, reference.x_star, epsilon = 1e-7);
        }
    }
}
