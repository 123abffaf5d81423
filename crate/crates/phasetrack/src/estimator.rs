//! Causal Kalman filtering of the homodyne current, offline exponential
//! smoothing, closed-form MSE predictions for white and finite-bandwidth
//! squeezing, and the scalar optimizers for feedback gain and squeezing
//! level.

use crate::error::{Error, Result};
use crate::optics::{self, BandwidthModel};

/// Feedback filter configuration: gain `gamma`, pole `lambda` (equal to
/// the signal bandwidth), and the current normalization `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: f64,
}

impl FilterConfig {
    pub fn new(gamma: f64, lambda: f64, alpha: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::Parameter(format!("gamma must be >= 0, got {gamma}")));
        }
        if !(lambda > 0.0) || !(alpha > 0.0) {
            return Err(Error::Parameter(format!(
                "lambda and alpha must be > 0, got lambda={lambda}, alpha={alpha}"
            )));
        }
        Ok(Self {
            gamma,
            lambda,
            alpha,
        })
    }
}

/// Running causal estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FilterState {
    pub phi_f: f64,
    pub t: f64,
}

/// Closed-form prediction bundle for one operating point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MsePrediction {
    pub sigma_f_sq: f64,
    pub sigma_s_sq: f64,
    pub gamma: f64,
    pub r_bar: f64,
    pub epsilon: f64,
}

/// Kalman gain for a whitened current with noise level `r_bar`:
/// `-lambda + sqrt(lambda^2 + 4 kappa alpha_sq / r_bar)`.
pub fn gain_whitened(alpha_sq: f64, kappa: f64, lambda: f64, r_bar: f64) -> f64 {
    -lambda + (lambda * lambda + 4.0 * kappa * alpha_sq / r_bar).sqrt()
}

/// Filtered MSE for a whitened current with noise level `r_bar`.
pub fn sigma_f_whitened(alpha_sq: f64, kappa: f64, lambda: f64, r_bar: f64) -> f64 {
    let u = 4.0 * kappa * alpha_sq / (lambda * lambda * r_bar);
    lambda * r_bar / (4.0 * alpha_sq) * ((1.0 + u).sqrt() - 1.0)
}

/// Kalman gain with the sigma_f^2 <-> r_bar self-consistency resolved in
/// closed form.
pub fn gain_explicit(alpha_sq: f64, kappa: f64, lambda: f64, r_m: f64, r_p: f64) -> f64 {
    let em = (-2.0 * r_m).exp();
    let ep = (2.0 * r_p).exp();
    let d = ep - em;
    -lambda - kappa * d / (2.0 * em)
        + 0.5 * ((kappa * d / em + 2.0 * lambda).powi(2) + 16.0 * alpha_sq * kappa / em).sqrt()
}

/// Filtered MSE with the self-consistency resolved in closed form.
pub fn sigma_f_explicit(alpha_sq: f64, kappa: f64, lambda: f64, r_m: f64, r_p: f64) -> f64 {
    let em = (-2.0 * r_m).exp();
    let ep = (2.0 * r_p).exp();
    let d = ep - em;
    let a = 2.0 * lambda * em + kappa * d;
    (-2.0 * lambda * em + kappa * d + (a * a + 16.0 * alpha_sq * kappa * em).sqrt())
        / (8.0 * alpha_sq + 4.0 * lambda * d)
}

/// Smoothed MSE: `kappa / (2 sqrt(4 kappa alpha_sq / r_bar + lambda^2))`.
pub fn sigma_s(alpha_sq: f64, kappa: f64, lambda: f64, r_bar: f64) -> f64 {
    kappa / (2.0 * (4.0 * kappa * alpha_sq / r_bar + lambda * lambda).sqrt())
}

/// Small parameter of the operating regime:
/// `sqrt(lambda^2 r_bar / (4 alpha_sq kappa))`.
pub fn epsilon(alpha_sq: f64, kappa: f64, lambda: f64, r_bar: f64) -> f64 {
    (lambda * lambda * r_bar / (4.0 * alpha_sq * kappa)).sqrt()
}

/// Closed-form prediction bundle at measured squeezing (r_m, r_p).
/// `alpha_sq` is the efficiency-scaled coherent flux.
pub fn predict(
    alpha_sq: f64,
    kappa: f64,
    lambda: f64,
    r_m: f64,
    r_p: f64,
) -> Result<MsePrediction> {
    let sigma_f_sq = sigma_f_explicit(alpha_sq, kappa, lambda, r_m, r_p);
    let r_bar = optics::effective_r(sigma_f_sq, r_m, r_p)?;
    Ok(MsePrediction {
        sigma_f_sq,
        sigma_s_sq: sigma_s(alpha_sq, kappa, lambda, r_bar),
        gamma: gain_explicit(alpha_sq, kappa, lambda, r_m, r_p),
        r_bar,
        epsilon: epsilon(alpha_sq, kappa, lambda, r_bar),
    })
}

/// One Euler step of the causal filter driven by a current increment:
/// `phi_f += -lambda phi_f dt + (gamma / 2 alpha) dI`.
pub fn filter_step(
    state: FilterState,
    current_increment: f64,
    cfg: &FilterConfig,
    dt: f64,
) -> FilterState {
    FilterState {
        phi_f: state.phi_f
            + (-cfg.lambda * state.phi_f * dt + cfg.gamma / (2.0 * cfg.alpha) * current_increment),
        t: state.t + dt,
    }
}

/// Anticausal exponential smoother applied to a filtered series:
/// `phi_s(t) = (2 lambda + gamma) ∫_t^∞ e^{-(lambda+gamma)(s-t)} phi_f(s) ds`
/// by a single backward recursion, truncating the tail at the series end.
pub fn smooth(phi_f: &[f64], lambda: f64, gamma: f64, dt: f64) -> Result<Vec<f64>> {
    if phi_f.is_empty() {
        return Err(Error::Parameter("smooth: empty series".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be > 0, got {dt}")));
    }
    let rate = lambda + gamma;
    let decay = (-rate * dt).exp();
    // piecewise-constant phi_f over each step
    let weight = (1.0 - decay) / rate;
    let gain = 2.0 * lambda + gamma;
    let n = phi_f.len();
    let mut out = vec![0.0; n];
    // seed the tail integral as if phi_f stayed at its last value
    let mut integral = phi_f[n - 1] / rate;
    out[n - 1] = gain * integral;
    for k in (0..n - 1).rev() {
        integral = weight * phi_f[k] + decay * integral;
        out[k] = gain * integral;
    }
    Ok(out)
}

/// Finite-bandwidth filtered MSE, solving the defining relation (linear
/// in sigma_f^2) in closed form. `r_minus`/`r_plus` are center-frequency
/// levels; the bandwidth ratios are `h_± = (1 ∓ x) delta_omega0 / (lambda + gamma_t)`.
pub fn sigma_f_finite_bw(
    gamma_t: f64,
    alpha_sq: f64,
    kappa: f64,
    lambda: f64,
    r_minus: f64,
    r_plus: f64,
    bw: &BandwidthModel,
) -> Result<f64> {
    if !(gamma_t >= 0.0) {
        return Err(Error::Parameter(format!(
            "gamma_t must be >= 0, got {gamma_t}"
        )));
    }
    let rate = lambda + gamma_t;
    let h_p = bw.antisqueezing_pole() / rate;
    let h_m = bw.squeezing_pole() / rate;
    let a = kappa / (2.0 * rate);
    let b = gamma_t * gamma_t / (8.0 * alpha_sq * rate);
    let p = (r_plus - 1.0) * h_p / (h_p + 1.0);
    let m = (r_minus - 1.0) * h_m / (h_m + 1.0);
    let denom = 1.0 - b * (p - m);
    if denom <= 0.0 {
        return Err(Error::Domain(format!(
            "finite-bandwidth MSE relation is not solvable (denominator {denom})"
        )));
    }
    Ok((a + b * (1.0 + m)) / denom)
}

/// Finite-bandwidth smoothed MSE, evaluated with the self-consistent
/// filtered MSE from [`sigma_f_finite_bw`].
pub fn sigma_s_finite_bw(
    gamma_t: f64,
    alpha_sq: f64,
    kappa: f64,
    lambda: f64,
    r_minus: f64,
    r_plus: f64,
    bw: &BandwidthModel,
) -> Result<f64> {
    let sf2 = sigma_f_finite_bw(gamma_t, alpha_sq, kappa, lambda, r_minus, r_plus, bw)?;
    let rate = lambda + gamma_t;
    let h_p = bw.antisqueezing_pole() / rate;
    let h_m = bw.squeezing_pole() / rate;
    let t1 = kappa * (2.0 * lambda * lambda + gamma_t * gamma_t + 2.0 * lambda * gamma_t)
        / (4.0 * rate.powi(3));
    let t2 =
        gamma_t * gamma_t * (2.0 * lambda + gamma_t).powi(2) / (16.0 * alpha_sq * rate.powi(3));
    let brace = 1.0
        + sf2 * (r_plus - 1.0) * h_p * (h_p + 2.0) / ((h_p + 1.0) * (h_p + 1.0))
        + (1.0 - sf2) * (r_minus - 1.0) * h_m * (h_m + 2.0) / ((h_m + 1.0) * (h_m + 1.0));
    Ok(t1 + t2 * brace)
}

/// Which MSE the finite-bandwidth gain search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainObjective {
    /// Minimize the filtered MSE (default).
    #[default]
    Filtered,
    /// Minimize the smoothed MSE.
    Smoothed,
}

/// Numerically optimal finite-bandwidth feedback gain, located by
/// golden-section search on `(0, 20 gamma_coherent]`.
pub fn optimize_gain(
    alpha_sq: f64,
    kappa: f64,
    lambda: f64,
    r_minus: f64,
    r_plus: f64,
    bw: &BandwidthModel,
    objective: GainObjective,
) -> Result<f64> {
    let gamma_coherent = gain_whitened(alpha_sq, kappa, lambda, 1.0);
    let hi = 20.0 * gamma_coherent;
    if !(hi > 0.0) {
        // kappa = 0: nothing to track
        return Ok(0.0);
    }
    let f = |g: f64| -> f64 {
        let r = match objective {
            GainObjective::Filtered => {
                sigma_f_finite_bw(g, alpha_sq, kappa, lambda, r_minus, r_plus, bw)
            }
            GainObjective::Smoothed => {
                sigma_s_finite_bw(g, alpha_sq, kappa, lambda, r_minus, r_plus, bw)
            }
        };
        r.unwrap_or(f64::INFINITY)
    };
    let (g, fg) = golden_section_min(&f, 0.0, hi, 1e-8);
    if !fg.is_finite() {
        return Err(Error::Numeric(
            "gain search found no finite objective value in the bracket".into(),
        ));
    }
    Ok(g)
}

/// Squeezing level minimizing the smoothed MSE under a loss budget.
///
/// Returns the pure squeezing parameter `r` and the measured squeezing
/// level in dB (negative). Ties break toward smaller `r`.
pub fn optimal_squeezing(alpha_sq: f64, kappa: f64, lambda: f64, l_sq: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&l_sq) {
        return Err(Error::Parameter(format!(
            "l_sq must be in [0, 1), got {l_sq}"
        )));
    }
    // bracket [0 dB, 20 dB] of pure squeezing
    let r_hi = db_span_to_r(20.0);
    let f = |r: f64| -> f64 {
        let (r_minus, r_plus) = optics::lossy_levels(r, l_sq);
        let r_m = -(r_minus.ln()) / 2.0;
        let r_p = r_plus.ln() / 2.0;
        let sf2 = sigma_f_explicit(alpha_sq, kappa, lambda, r_m, r_p);
        match optics::effective_r(sf2, r_m, r_p) {
            Ok(r_bar) => sigma_s(alpha_sq, kappa, lambda, r_bar),
            Err(_) => f64::INFINITY,
        }
    };
    let (mut r_star, f_star) = golden_section_min(&f, 0.0, r_hi, 1e-6);
    // flat objective (e.g. l_sq -> 1): prefer no squeezing
    if f(0.0) <= f_star * (1.0 + 1e-9) {
        r_star = 0.0;
    }
    let (r_minus, _) = optics::lossy_levels(r_star, l_sq);
    Ok((r_star, optics::ratio_to_db(r_minus)))
}

fn db_span_to_r(db: f64) -> f64 {
    // pure squeezing parameter giving `db` decibels of squeezing
    (db / 10.0) * std::f64::consts::LN_10 / 2.0
}

/// Golden-section search for the minimum of `f` on `[a, b]` to relative
/// bracket tolerance `rel_tol`.
fn golden_section_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let span = b - a;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a) > rel_tol * span.max(1e-300) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
