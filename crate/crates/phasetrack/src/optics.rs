//! Squeezed-beam measurement model: homodyne current generation in three
//! fidelity tiers, loss and detection-efficiency transforms, Lorentzian
//! squeezing spectra, and photon-flux accounting.
//!
//! Squeezing conventions: the squeezed-quadrature variance relative to
//! shot noise is `R_minus = exp(-2 r_m)`, the anti-squeezed one is
//! `R_plus = exp(2 r_p)`, and a dB level is `10 log10(R)` (negative for
//! squeezing).

use crate::error::{Error, Result};

/// Coherent amplitude plus measured squeezing of the probe beam.
///
/// `r_m` and `r_p` are the post-loss (measured) squeezing and
/// anti-squeezing parameters; `eta` is the homodyne detection efficiency,
/// applied by scaling the coherent photon flux against unit vacuum noise.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SqueezedBeam {
    pub alpha_sq: f64,
    pub r_m: f64,
    pub r_p: f64,
    pub eta: f64,
}

impl SqueezedBeam {
    pub fn new(alpha_sq: f64, r_m: f64, r_p: f64, eta: f64) -> Result<Self> {
        if !(alpha_sq >= 0.0) || !alpha_sq.is_finite() {
            return Err(Error::Parameter(format!(
                "alpha_sq must be >= 0, got {alpha_sq}"
            )));
        }
        if !(r_m >= 0.0) || !(r_p >= 0.0) {
            return Err(Error::Parameter(format!(
                "squeezing parameters must be >= 0, got r_m={r_m}, r_p={r_p}"
            )));
        }
        if r_p < r_m {
            return Err(Error::Parameter(format!(
                "r_p >= r_m required by the purity bound, got r_m={r_m}, r_p={r_p}"
            )));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Parameter(format!(
                "eta must be in (0, 1], got {eta}"
            )));
        }
        Ok(Self {
            alpha_sq,
            r_m,
            r_p,
            eta,
        })
    }

    /// Build from dB levels: squeezing_db <= 0 <= antisqueezing_db.
    pub fn from_db(
        alpha_sq: f64,
        squeezing_db: f64,
        antisqueezing_db: f64,
        eta: f64,
    ) -> Result<Self> {
        if squeezing_db > 0.0 {
            return Err(Error::Parameter(format!(
                "squeezing_db must be <= 0 (noise below shot noise), got {squeezing_db}"
            )));
        }
        if antisqueezing_db < 0.0 {
            return Err(Error::Parameter(format!(
                "antisqueezing_db must be >= 0, got {antisqueezing_db}"
            )));
        }
        let r_m = -db_to_ratio(squeezing_db).ln() / 2.0;
        let r_p = db_to_ratio(antisqueezing_db).ln() / 2.0;
        Self::new(alpha_sq, r_m, r_p, eta)
    }

    /// Detection-efficiency-scaled coherent photon flux.
    pub fn effective_alpha_sq(&self) -> f64 {
        self.eta * self.alpha_sq
    }

    /// Squeezed-quadrature noise variance rate `exp(-2 r_m)`.
    pub fn squeezed_level(&self) -> f64 {
        (-2.0 * self.r_m).exp()
    }

    /// Anti-squeezed-quadrature noise variance rate `exp(2 r_p)`.
    pub fn antisqueezed_level(&self) -> f64 {
        (2.0 * self.r_p).exp()
    }
}

/// Variance ratio for a dB level: `10^(db/10)`.
pub fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// dB level of a variance ratio: `10 log10(ratio)`; negative for squeezing.
pub fn ratio_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Total optical + detection loss budget of the squeezing path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub l_sq: f64,
}

impl LossModel {
    pub fn new(l_sq: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&l_sq) {
            return Err(Error::Parameter(format!(
                "l_sq must be in [0, 1), got {l_sq}"
            )));
        }
        Ok(Self { l_sq })
    }
}

/// Lorentzian squeezing-spectrum parameters: `delta_omega0` is half the
/// squeezing-resource decay rate, `x` the normalized pump amplitude.
/// The squeezed quadrature has pole rate `(1 + x) delta_omega0`, the
/// anti-squeezed one `(1 - x) delta_omega0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BandwidthModel {
    pub delta_omega0: f64,
    pub x: f64,
}

impl BandwidthModel {
    pub fn new(delta_omega0: f64, x: f64) -> Result<Self> {
        if !(delta_omega0 > 0.0) {
            return Err(Error::Parameter(format!(
                "delta_omega0 must be > 0, got {delta_omega0}"
            )));
        }
        if !(0.0..1.0).contains(&x) {
            return Err(Error::Parameter(format!("x must be in [0, 1), got {x}")));
        }
        Ok(Self { delta_omega0, x })
    }

    pub fn squeezing_pole(&self) -> f64 {
        (1.0 + self.x) * self.delta_omega0
    }

    pub fn antisqueezing_pole(&self) -> f64 {
        (1.0 - self.x) * self.delta_omega0
    }
}

/// Which quadrature a spectrum refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// The squeezed (minus) quadrature, pole `(1 + x) delta_omega0`.
    Squeezed,
    /// The anti-squeezed (plus) quadrature, pole `(1 - x) delta_omega0`.
    AntiSqueezed,
}

/// Full sine-model homodyne current increment.
///
/// `noise_x` and `noise_p` are increments for the squeezed and
/// anti-squeezed quadratures, already scaled to variance
/// `exp(-2 r_m) dt` and `exp(2 r_p) dt` (or colored equivalents).
pub fn homodyne_increment_full(
    delta: f64,
    beam: &SqueezedBeam,
    dt: f64,
    noise_x: f64,
    noise_p: f64,
) -> f64 {
    let alpha = beam.effective_alpha_sq().sqrt();
    2.0 * alpha * delta.sin() * dt + delta.sin() * noise_p + delta.cos() * noise_x
}

/// Second-order expansion of the homodyne current in the tracking error.
/// `noise` is a raw Wiener increment with variance `dt`.
pub fn homodyne_increment_second_order(
    delta: f64,
    beam: &SqueezedBeam,
    dt: f64,
    noise: f64,
) -> f64 {
    let alpha = beam.effective_alpha_sq().sqrt();
    let d2 = delta * delta;
    let rate = d2 * beam.antisqueezed_level() + (1.0 - d2) * beam.squeezed_level();
    2.0 * alpha * delta * dt + rate.sqrt() * noise
}

/// Effective time-independent squeezing factor seen by the filter:
/// the tracking-error-weighted mixture of the two quadrature variances.
pub fn effective_r(sigma_f_sq: f64, r_m: f64, r_p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&sigma_f_sq) {
        return Err(Error::Parameter(format!(
            "sigma_f_sq must be in [0, 1] for the expansion to hold, got {sigma_f_sq}"
        )));
    }
    Ok(sigma_f_sq * (2.0 * r_p).exp() + (1.0 - sigma_f_sq) * (-2.0 * r_m).exp())
}

/// Measured squeezing and anti-squeezing levels of a pure state with
/// squeezing parameter `r` seen through total loss `l_sq`:
/// `R_∓ = (1 - l_sq) exp(∓2r) + l_sq`.
pub fn lossy_levels(r: f64, l_sq: f64) -> (f64, f64) {
    let t = 1.0 - l_sq;
    (t * (-2.0 * r).exp() + l_sq, t * (2.0 * r).exp() + l_sq)
}

/// Anti-squeezing level implied by a measured squeezing level and loss.
pub fn antisq_from_sq(r_minus: f64, l_sq: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&l_sq) {
        return Err(Error::Parameter(format!(
            "l_sq must be in [0, 1), got {l_sq}"
        )));
    }
    if r_minus <= l_sq {
        return Err(Error::Domain(format!(
            "no pure state maps to R_minus = {r_minus} under loss {l_sq}"
        )));
    }
    let t = 1.0 - l_sq;
    Ok(t * t / (r_minus - l_sq) + l_sq)
}

/// Overall homodyne detection efficiency from visibility `xi`,
/// transmission `rho`, photodiode quantum efficiency `zeta`, and the
/// shot-to-circuit-noise ratio `s`.
pub fn efficiency(xi: f64, rho: f64, zeta: f64, s: f64) -> Result<f64> {
    for (name, v) in [("xi", xi), ("rho", rho), ("zeta", zeta)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::Parameter(format!(
                "{name} must be in (0, 1], got {v}"
            )));
        }
    }
    if s <= 1.0 {
        return Err(Error::Domain(format!(
            "shot-to-circuit-noise ratio must exceed 1, got {s}"
        )));
    }
    Ok(xi * xi * rho * zeta * (s - 1.0) / s)
}

/// Lorentzian quadrature spectrum:
/// `1 + (level - 1) b^2 / (omega^2 + b^2)` with the quadrature's pole `b`.
pub fn spectrum(omega: f64, level: f64, bw: &BandwidthModel, quad: Quadrature) -> f64 {
    let b = match quad {
        Quadrature::Squeezed => bw.squeezing_pole(),
        Quadrature::AntiSqueezed => bw.antisqueezing_pole(),
    };
    1.0 + (level - 1.0) * b * b / (omega * omega + b * b)
}

/// Normalized pump amplitude from center-frequency squeezing levels.
pub fn pump_x(r_minus: f64, r_plus: f64) -> Result<f64> {
    if !(r_minus < 1.0 && r_plus > 1.0) {
        return Err(Error::Domain(format!(
            "pump amplitude undefined unless R_minus < 1 < R_plus, got ({r_minus}, {r_plus})"
        )));
    }
    let num = r_plus - r_minus - 2.0 * ((1.0 - r_minus) * (r_plus - 1.0)).sqrt();
    Ok(num / (r_plus + r_minus - 2.0))
}

/// Photon number density of the squeezed vacuum at detuning `omega`.
pub fn photon_number_density(omega: f64, r_minus: f64, r_plus: f64, bw: &BandwidthModel) -> f64 {
    0.25 * (spectrum(omega, r_plus, bw, Quadrature::AntiSqueezed)
        + spectrum(omega, r_minus, bw, Quadrature::Squeezed))
        - 0.5
}

/// Photon flux carried by the squeezed vacuum for a Lorentzian spectrum
/// of bandwidth parameter `delta_omega`.
pub fn photon_flux_sq(r_minus: f64, r_plus: f64, x: f64, delta_omega: f64) -> Result<f64> {
    if !(delta_omega > 0.0) {
        return Err(Error::Parameter(format!(
            "delta_omega must be > 0, got {delta_omega}"
        )));
    }
    Ok(0.25 * ((r_plus - 1.0) * (1.0 - x) + (r_minus - 1.0) * (1.0 + x)) * delta_omega / 2.0)
}

/// Narrowest squeezing bandwidth that leaves the tracking MSE essentially
/// unchanged: twice the estimator bandwidth.
pub fn effective_bandwidth(lambda: f64, gamma: f64) -> f64 {
    2.0 * (lambda + gamma)
}
