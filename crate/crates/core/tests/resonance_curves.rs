use std::sync::Arc;

use stochres::estimators::{self, ChannelConfig};
use stochres::law::OuLaw;
use stochres::numerics::{self, Bracket};
use stochres::resonance::{find_resonance, linear_grid, resonance_curve, ResonanceConfig};
use stochres::scheme::{EnergyAboveThreshold, ObservationScheme, TimeAboveThreshold};

fn base() -> ChannelConfig {
    ChannelConfig::new(1.0, 1.0, Arc::new(OuLaw)).unwrap()
}

fn fisher_values(theta: f64, scheme: &dyn ObservationScheme, grid: &[f64]) -> Vec<f64> {
    let curve = resonance_curve(theta, &base(), scheme, grid).unwrap();
    assert!(curve.iter().all(|p| !p.flagged));
    curve.iter().map(|p| p.fisher).collect()
}

fn endpoint_fractions(theta: f64, scheme: &dyn ObservationScheme) -> (f64, f64) {
    let grid = linear_grid(0.05, 3.0, 296);
    let f = fisher_values(theta, scheme, &grid);
    let peak = f.iter().cloned().fold(0.0, f64::max);
    (f[0] / peak, f[f.len() - 1] / peak)
}

#[test]
fn information_vanishes_at_both_ends_of_the_scan() {
    for (theta, scheme) in [
        (0.5, &TimeAboveThreshold as &dyn ObservationScheme),
        (0.5, &EnergyAboveThreshold),
    ] {
        let (lo, hi) = endpoint_fractions(theta, scheme);
        assert!(lo < 0.1 && hi < 0.1, "{} theta={theta}: {lo} {hi}", scheme.name());
    }
}

#[test]
fn zero_signal_decays_slowly_at_large_noise() {
    // With the gap at its widest the large-noise tail is heavier: at eps = 3
    // the information is still above a tenth of the peak for both schemes.
    for scheme in [&TimeAboveThreshold as &dyn ObservationScheme, &EnergyAboveThreshold] {
        let (lo, hi) = endpoint_fractions(0.0, scheme);
        assert!(lo < 0.1);
        assert!(hi > 0.1 && hi < 0.2, "{}: {hi}", scheme.name());
    }
}

#[test]
fn curves_are_positive_and_continuous() {
    let grid = linear_grid(0.05, 3.0, 591);
    for scheme in [&TimeAboveThreshold as &dyn ObservationScheme, &EnergyAboveThreshold] {
        for theta in [0.0, 0.5] {
            let f = fisher_values(theta, scheme, &grid);
            let peak = f.iter().cloned().fold(0.0, f64::max);
            assert!(f.iter().all(|&v| v > 0.0));
            for w in f.windows(2) {
                assert!((w[1] - w[0]).abs() < 0.05 * peak);
            }
        }
    }
}

#[test]
fn information_grows_as_signal_approaches_threshold() {
    let grid = linear_grid(0.05, 3.0, 60);
    let near = fisher_values(0.5, &TimeAboveThreshold, &grid);
    let far = fisher_values(0.0, &TimeAboveThreshold, &grid);
    for (i, (n, f)) in near.iter().zip(&far).enumerate() {
        assert!(n > f, "eps = {}", grid[i]);
    }
}

#[test]
fn single_interior_resonance_for_each_setting() {
    for scheme in [&TimeAboveThreshold as &dyn ObservationScheme, &EnergyAboveThreshold] {
        for theta in [0.0, 0.5] {
            let r = find_resonance(theta, &base(), scheme, &ResonanceConfig::default()).unwrap();
            assert_eq!(r.local_maxima.len(), 1, "{} theta={theta}", scheme.name());
            assert!(r.eps_star > 0.02 && r.eps_star < 3.0);
            let curve_max = r.curve.iter().map(|p| p.fisher).fold(0.0, f64::max);
            assert!(r.fisher_star >= curve_max && r.fisher_star < curve_max * 1.01);
        }
    }
}

#[test]
fn doubling_grid_density_keeps_the_discrete_argmax() {
    let coarse = linear_grid(0.05, 1.0, 96);
    let fine = linear_grid(0.05, 1.0, 191);
    let argmax = |grid: &[f64]| {
        let f = fisher_values(0.0, &TimeAboveThreshold, grid);
        let i = (0..f.len()).max_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap();
        grid[i]
    };
    let step = 0.95 / 95.0;
    assert!((argmax(&coarse) - argmax(&fine)).abs() <= step + 1e-12);
}

#[test]
fn printed_closed_form_and_generic_pipeline_share_the_optimum() {
    let b = Bracket::new(0.02, 3.0).unwrap();
    for theta in [0.0, 0.5] {
        let generic = numerics::maximize_scalar(
            |eps| estimators::sigma_time(theta, &base().with_eps(eps).unwrap()).unwrap().fisher,
            b,
            64,
            1e-7,
        )
        .unwrap();
        let printed = numerics::maximize_scalar(
            |eps| 1.0 / estimators::sigma_time_ou_printed(theta, 1.0, eps).unwrap(),
            b,
            64,
            1e-7,
        )
        .unwrap();
        assert!((generic.x_star - printed.x_star).abs() < 0.005);
        assert!((generic.h_star / printed.h_star - 4.0).abs() < 1e-5);
    }
}

#[test]
fn energy_optimum_shrinks_with_the_gap() {
    let r0 = find_resonance(0.0, &base(), &EnergyAboveThreshold, &ResonanceConfig::default()).unwrap();
    let r1 = find_resonance(0.5, &base(), &EnergyAboveThreshold, &ResonanceConfig::default()).unwrap();
    assert!(r1.eps_star < r0.eps_star);
    assert!(r1.fisher_star > r0.fisher_star);
}
