//! Seedable noise processes: Wiener increments, the exact
//! Ornstein-Uhlenbeck transition, and Lorentzian-spectrum colored noise
//! built from a one-pole shaping filter.
//!
//! Every generator is a pure function of (seed, parameters); replay with
//! the same seed is bit-exact. Monte Carlo trials derive independent
//! streams from (master seed, trial index) via the ChaCha stream counter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Parameters of the Ornstein-Uhlenbeck signal phase: diffusion magnitude
/// `kappa` (rad^2/s) and inverse correlation time `lambda` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OuParams {
    pub kappa: f64,
    pub lambda: f64,
}

impl OuParams {
    pub fn new(kappa: f64, lambda: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::Parameter(format!("kappa must be >= 0, got {kappa}")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Parameter(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        Ok(Self { kappa, lambda })
    }

    /// Stationary variance kappa / (2 lambda), rad^2.
    pub fn stationary_variance(&self) -> f64 {
        self.kappa / (2.0 * self.lambda)
    }
}

/// One standard-normal draw together with the step size it scales.
/// Consumers multiply `value` by `sqrt(dt)` to obtain a Wiener increment.
#[derive(Debug, Clone, Copy)]
pub struct NoiseDraw {
    pub value: f64,
    pub dt: f64,
}

impl NoiseDraw {
    /// Wiener increment with variance `dt`.
    pub fn increment(&self) -> f64 {
        self.value * self.dt.sqrt()
    }
}

/// RNG for one Monte Carlo trial: the master seed keys the cipher, the
/// trial index selects an independent stream.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Draw one standard normal.
pub fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `n` i.i.d. Wiener increments with mean 0 and variance `dt`.
pub fn wiener_increments(seed: u64, n: usize, dt: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Parameter("n must be >= 1".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be > 0, got {dt}")));
    }
    let mut rng = trial_rng(seed, 0);
    let s = dt.sqrt();
    Ok((0..n).map(|_| s * standard_normal(&mut rng)).collect())
}

/// One step of the exact OU transition kernel. Statistics are independent
/// of `dt`, so the signal path carries no discretization bias.
pub fn ou_step(prev: f64, params: &OuParams, dt: f64, g: f64) -> f64 {
    let decay = (-params.lambda * dt).exp();
    let var = params.kappa * (1.0 - (-2.0 * params.lambda * dt).exp()) / (2.0 * params.lambda);
    decay * prev + var.sqrt() * g
}

/// Precomputed OU transition for a fixed step size.
#[derive(Debug, Clone, Copy)]
pub struct OuPropagator {
    decay: f64,
    noise_scale: f64,
}

impl OuPropagator {
    pub fn new(params: &OuParams, dt: f64) -> Self {
        let decay = (-params.lambda * dt).exp();
        let var = params.kappa * (1.0 - (-2.0 * params.lambda * dt).exp()) / (2.0 * params.lambda);
        Self {
            decay,
            noise_scale: var.sqrt(),
        }
    }

    pub fn step(&self, prev: f64, g: f64) -> f64 {
        self.decay * prev + self.noise_scale * g
    }
}

/// One-pole shaping filter producing increments whose power spectral
/// density is `1 + (level - 1) * b^2 / (omega^2 + b^2)` relative to the
/// white input, via the spectral factorization H(s) = (s + b sqrt(level)) / (s + b).
#[derive(Debug, Clone, Copy)]
pub struct ShapingFilterState {
    pub pole_rate: f64,
    pub level: f64,
    internal: f64,
}

impl ShapingFilterState {
    pub fn new(pole_rate: f64, level: f64) -> Result<Self> {
        if !(pole_rate > 0.0) {
            return Err(Error::Parameter(format!(
                "pole_rate must be > 0, got {pole_rate}"
            )));
        }
        if !(level > 0.0) {
            return Err(Error::Parameter(format!("level must be > 0, got {level}")));
        }
        Ok(Self {
            pole_rate,
            level,
            internal: 0.0,
        })
    }

    /// Feed one white increment, produce one shaped increment.
    ///
    /// The direct path passes the input through unchanged; the colored
    /// correction is `b (sqrt(level) - 1) z dt` with `dz = -b z dt + dW`.
    /// With `level = 1` the output equals the input exactly.
    pub fn step(&mut self, white_in: NoiseDraw) -> f64 {
        let dw = white_in.increment();
        let dt = white_in.dt;
        let b = self.pole_rate;
        let out = dw + b * (self.level.sqrt() - 1.0) * self.internal * dt;
        self.internal = (-b * dt).exp() * self.internal + dw;
        out
    }
}

/// Free-function form of [`ShapingFilterState::step`].
pub fn shaped_noise_step(
    mut state: ShapingFilterState,
    white_in: NoiseDraw,
) -> (ShapingFilterState, f64) {
    let out = state.step(white_in);
    (state, out)
}
