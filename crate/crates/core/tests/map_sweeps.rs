use std::sync::Arc;

use stochres::estimators::ChannelConfig;
use stochres::law::OuLaw;
use stochres::map_test::{find_perr_minimum, p_err, p_err_surface, PerrTemplate, Priors};
use stochres::numerics::Bracket;
use stochres::resonance::linear_grid;
use stochres::scheme::{EnergyAboveThreshold, ObservationScheme, TimeAboveThreshold};

fn template(horizon: f64, p0: f64, scheme: Arc<dyn ObservationScheme>) -> PerrTemplate {
    PerrTemplate {
        theta0: 0.0,
        priors: Priors::new(p0).unwrap(),
        base: ChannelConfig::new(1.0, 1.0, Arc::new(OuLaw)).unwrap(),
        horizon,
        scheme,
    }
}

fn interior_minimum(horizon: f64, scheme: Arc<dyn ObservationScheme>) -> (f64, f64, stochres::map_test::PerrMinimum) {
    let t = template(horizon, 0.5, scheme);
    let min = find_perr_minimum(&t, 0.5, Bracket::new(0.05, 3.0).unwrap(), 64, 1e-7).unwrap();
    assert_eq!(min.local_minima.len(), 1, "{min:?}");
    let (eps, value) = min.local_minima[0];
    (eps, value, min)
}

#[test]
fn interior_local_minimum_matches_dense_grid() {
    let (eps, value, min) = interior_minimum(100.0, Arc::new(TimeAboveThreshold));
    assert!(eps > 0.3 && eps < 0.8, "{eps}");
    assert!(value < min.p_err_at_hi);

    let t = template(100.0, 0.5, Arc::new(TimeAboveThreshold));
    let dense = linear_grid(eps - 0.1, eps + 0.1, 2001)
        .into_iter()
        .map(|e| p_err(&t.problem(0.5, e).unwrap()).unwrap().p_err)
        .fold(f64::INFINITY, f64::min);
    assert!(value <= dense + 1e-12);
    assert!(dense - value < 1e-9);
}

#[test]
fn gaussian_error_vanishes_at_tiny_noise() {
    // As eps -> 0 both variances collapse, the ratio s1/s0 diverges and the
    // rule accepts H0 only on a shrinking window around mu0; the Gaussian
    // error estimate then tends to zero and the global minimum sits at the
    // lower edge of the bracket.
    let (_, value, min) = interior_minimum(100.0, Arc::new(TimeAboveThreshold));
    assert!(min.p_err_at_lo < 1e-60);
    assert_eq!(min.eps_star, 0.05);
    assert!(value > min.p_err_at_lo);
}

#[test]
fn longer_observation_lowers_the_error_at_every_noise_level() {
    for scheme in [
        Arc::new(TimeAboveThreshold) as Arc<dyn ObservationScheme>,
        Arc::new(EnergyAboveThreshold),
    ] {
        let short = template(50.0, 0.5, scheme.clone());
        let long = template(500.0, 0.5, scheme);
        for eps in linear_grid(0.3, 3.0, 28) {
            let a = p_err(&short.problem(0.5, eps).unwrap()).unwrap().p_err;
            let b = p_err(&long.problem(0.5, eps).unwrap()).unwrap().p_err;
            assert!(b < a, "eps = {eps}: {b} vs {a}");
        }
    }
}

#[test]
fn surface_respects_the_prior_bound_and_is_reproducible() {
    for p0 in [0.5, 0.3] {
        let t = template(100.0, p0, Arc::new(TimeAboveThreshold));
        let theta1 = linear_grid(0.05, 0.95, 19);
        let eps = linear_grid(0.05, 3.0, 30);
        let a = p_err_surface(&t, &theta1, &eps).unwrap();
        let b = p_err_surface(&t, &theta1, &eps).unwrap();
        assert_eq!(a, b);
        for cell in &a {
            assert!(!cell.flagged);
            let v = cell.p_err.unwrap();
            assert!(v >= 0.0 && v <= p0.min(1.0 - p0) + 1e-12, "{cell:?}");
        }
    }
}
