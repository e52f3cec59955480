//! Euler-Maruyama paths of the noise, the perturbed signal `Y = theta + eps X`
//! and the two observables: time fraction above the threshold and energy of
//! the observed part of the signal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::DiffusionSpec;

pub const DEFAULT_DT: f64 = 0.01;
const BLOWUP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Time horizon `T`.
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub x0: f64,
}

impl SimConfig {
    pub fn new(horizon: f64, dt: f64, seed: u64) -> Result<Self> {
        let cfg = Self { horizon, dt, seed, x0: 0.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon must satisfy dt <= T, got T = {} with dt = {}",
                self.horizon, self.dt
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("initial value must be finite"));
        }
        if self.horizon / self.dt > u32::MAX as f64 {
            return Err(Error::invalid("too many steps for one path"));
        }
        Ok(())
    }

    /// Number of Euler steps, `floor(T / dt)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt * (1.0 + 1e-12)).floor() as usize
    }
}

/// Seed of replication `k` in a Monte Carlo study.
pub fn replication_seed(base: u64, k: u64) -> u64 {
    base.wrapping_add(k)
}

/// Values of a process on the grid `t_k = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: Vec<f64>,
    dt: f64,
    seed: u64,
}

impl Trajectory {
    pub fn from_values(values: Vec<f64>, dt: f64, seed: u64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a trajectory needs at least two points"));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("dt must be positive"));
        }
        Ok(Self { values, dt, seed })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Elapsed time `(len - 1) dt`.
    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.dt)
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationSummary {
    /// Fraction of time spent above the threshold.
    pub gamma: f64,
    /// Time average of `Y^2` restricted to the excursions above the threshold.
    pub energy: f64,
    pub horizon: f64,
}

#[inline]
fn euler_step(spec: &DiffusionSpec, x: f64, dt: f64, sqrt_dt: f64, z: f64) -> f64 {
    x + spec.drift(x) * dt + spec.diffusion(x) * sqrt_dt * z
}

/// Euler-Maruyama path with standard normal increments drawn from `normals`.
pub fn simulate_path_with<N: FnMut() -> f64>(
    spec: &DiffusionSpec,
    cfg: &SimConfig,
    mut normals: N,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.steps();
    let sqrt_dt = cfg.dt.sqrt();
    let mut values = Vec::with_capacity(n + 1);
    let mut x = cfg.x0;
    values.push(x);
    for step in 1..=n {
        x = euler_step(spec, x, cfg.dt, sqrt_dt, normals());
        if !(x.abs() <= BLOWUP) {
            return Err(Error::NumericBlowup { step, value: x.abs() });
        }
        values.push(x);
    }
    Ok(Trajectory { values, dt: cfg.dt, seed: cfg.seed })
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Euler-Maruyama path driven by the seeded ChaCha8 stream; the same
/// `(spec, cfg)` always yields the same path.
pub fn simulate_path(spec: &DiffusionSpec, cfg: &SimConfig) -> Result<Trajectory> {
    let mut rng = rng_for(cfg.seed);
    simulate_path_with(spec, cfg, || rng.sample(StandardNormal))
}

/// `Y = theta + eps X`, elementwise.
pub fn perturb(traj: &Trajectory, theta: f64, eps: f64) -> Result<Trajectory> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("noise level must be positive, got {eps}")));
    }
    Ok(Trajectory {
        values: traj.values.iter().map(|&x| theta + eps * x).collect(),
        ..*traj
    })
}

#[derive(Default)]
struct Accumulator {
    above: u64,
    energy: f64,
}

impl Accumulator {
    #[inline]
    fn push(&mut self, y: f64, tau: f64) {
        if y > tau {
            self.above += 1;
            self.energy += y * y;
        }
    }

    fn finish(self, steps: usize, dt: f64) -> ObservationSummary {
        let n = steps as f64;
        ObservationSummary {
            gamma: self.above as f64 / n,
            energy: self.energy / n,
            horizon: n * dt,
        }
    }
}

/// Left-endpoint time averages of `chi(Y > tau)` and `Y^2 chi(Y > tau)`.
pub fn observe(y: &Trajectory, tau: f64) -> ObservationSummary {
    let steps = y.values.len() - 1;
    let mut acc = Accumulator::default();
    for &v in &y.values[..steps] {
        acc.push(v, tau);
    }
    acc.finish(steps, y.dt)
}

/// Simulates and observes `Y = theta + eps X` without storing the path.
/// Bit-identical to `observe(perturb(simulate_path(..)))`.
pub fn simulate_observation(
    spec: &DiffusionSpec,
    cfg: &SimConfig,
    theta: f64,
    eps: f64,
    tau: f64,
) -> Result<ObservationSummary> {
    cfg.validate()?;
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("noise level must be positive, got {eps}")));
    }
    let mut rng = rng_for(cfg.seed);
    let n = cfg.steps();
    let sqrt_dt = cfg.dt.sqrt();
    let mut acc = Accumulator::default();
    let mut x = cfg.x0;
    for step in 1..=n {
        acc.push(theta + eps * x, tau);
        x = euler_step(spec, x, cfg.dt, sqrt_dt, rng.sample(StandardNormal));
        if !(x.abs() <= BLOWUP) {
            return Err(Error::NumericBlowup { step, value: x.abs() });
        }
    }
    Ok(acc.finish(n, cfg.dt))
}

/// Runs `run(k, seed_k)` for `k in 0..reps` on the rayon pool, with
/// `seed_k = base_seed + k`. Results come back in replication order.
pub fn replicate<T, F>(reps: usize, base_seed: u64, run: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|k| run(k, replication_seed(base_seed, k as u64)))
        .collect()
}
