//! TOML scenario files. Every key has a default matching the reference
//! operating point (kappa = 1.9e4, lambda = 5.9e4, alpha_sq = 1e6, 100 MHz
//! sampling, 15 trials of 2 ms), so an empty file is a valid config.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::{NoiseModel, Scenario};
use crate::optics::{self, BandwidthModel, SqueezedBeam};
use crate::sde::OuParams;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub signal: SignalSection,
    pub beam: BeamSection,
    /// Optional Lorentzian squeezing bandwidth; omit for broadband squeezing.
    pub bandwidth: Option<BandwidthSection>,
    pub run: RunSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    /// Phase diffusion magnitude, rad^2/s.
    pub kappa: f64,
    /// Inverse phase correlation time, rad/s.
    pub lambda: f64,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            kappa: 1.9e4,
            lambda: 5.9e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    /// Coherent photon flux, 1/s.
    pub alpha_sq: f64,
    /// Measured squeezing level in dB (<= 0). Mutually exclusive with `r_m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squeezing_db: Option<f64>,
    /// Measured anti-squeezing level in dB (>= 0). Mutually exclusive with `r_p`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antisqueezing_db: Option<f64>,
    /// Measured squeezing parameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_m: Option<f64>,
    /// Measured anti-squeezing parameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_p: Option<f64>,
    /// Homodyne detection efficiency.
    pub eta: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            alpha_sq: 1e6,
            squeezing_db: None,
            antisqueezing_db: None,
            r_m: None,
            r_p: None,
            eta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSection {
    /// Lorentzian bandwidth parameter, rad/s.
    pub delta_omega0: f64,
    /// Normalized pump amplitude; derived from the squeezing levels when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub noise_model: NoiseModel,
    /// Step size, s.
    pub dt: f64,
    /// Post-warmup trajectory length, s.
    pub duration: f64,
    /// Discarded settling time, s; defaults to 5 / lambda.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup: Option<f64>,
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            noise_model: NoiseModel::FullSine,
            dt: 1e-8,
            duration: 2e-3,
            warmup: None,
            trials: 15,
            master_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Squeezing levels in dB for squeezing sweeps and heatmap rows.
    pub squeezing_db: Vec<f64>,
    /// Anti-squeezing levels: paired with `squeezing_db` for sweeps (same
    /// length), or the column grid for heatmaps. When empty and `l_sq` is
    /// set, anti-squeezing is derived from the loss model.
    pub antisqueezing_db: Vec<f64>,
    /// Amplitude grid for amplitude and bandwidth sweeps.
    pub alpha_sq: Vec<f64>,
    /// Squeezing-path loss for derived anti-squeezing and the heatmap overlay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_sq: Option<f64>,
}

impl Config {
    pub fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve_beam(&self) -> Result<SqueezedBeam> {
        let b = &self.beam;
        let db_given = b.squeezing_db.is_some() || b.antisqueezing_db.is_some();
        let r_given = b.r_m.is_some() || b.r_p.is_some();
        if db_given && r_given {
            return Err(Error::Config(
                "beam: give squeezing either in dB or as (r_m, r_p), not both".into(),
            ));
        }
        if db_given {
            let (Some(s), Some(a)) = (b.squeezing_db, b.antisqueezing_db) else {
                return Err(Error::Config(
                    "beam: squeezing_db and antisqueezing_db must be given together".into(),
                ));
            };
            return SqueezedBeam::from_db(b.alpha_sq, s, a, b.eta);
        }
        if r_given {
            let (Some(r_m), Some(r_p)) = (b.r_m, b.r_p) else {
                return Err(Error::Config(
                    "beam: r_m and r_p must be given together".into(),
                ));
            };
            return SqueezedBeam::new(b.alpha_sq, r_m, r_p, b.eta);
        }
        SqueezedBeam::new(b.alpha_sq, 0.0, 0.0, b.eta)
    }

    pub fn resolve_bandwidth(&self, beam: &SqueezedBeam) -> Result<Option<BandwidthModel>> {
        match &self.bandwidth {
            None => Ok(None),
            Some(bw) => {
                let x = match bw.x {
                    Some(x) => x,
                    None => optics::pump_x(beam.squeezed_level(), beam.antisqueezed_level())?,
                };
                Ok(Some(BandwidthModel::new(bw.delta_omega0, x)?))
            }
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let ou = OuParams::new(self.signal.kappa, self.signal.lambda)?;
        let beam = self.resolve_beam()?;
        let bw = self.resolve_bandwidth(&beam)?;
        let sc = Scenario {
            ou,
            beam,
            bw,
            noise_model: self.run.noise_model,
            dt: self.run.dt,
            duration: self.run.duration,
            warmup: self.run.warmup.unwrap_or(5.0 / ou.lambda),
            trials: self.run.trials,
            master_seed: self.run.master_seed,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// (r_m, r_p) pairs for a squeezing sweep, from explicit dB pairs or
    /// from the squeezing grid plus the loss model.
    pub fn squeezing_levels(&self) -> Result<Vec<(f64, f64)>> {
        let s = &self.sweep;
        if s.squeezing_db.is_empty() {
            return Err(Error::Config("sweep: squeezing_db list is empty".into()));
        }
        let pairs: Vec<(f64, f64)> = if !s.antisqueezing_db.is_empty() {
            if s.antisqueezing_db.len() != s.squeezing_db.len() {
                return Err(Error::Config(format!(
                    "sweep: squeezing_db ({}) and antisqueezing_db ({}) lengths differ",
                    s.squeezing_db.len(),
                    s.antisqueezing_db.len()
                )));
            }
            s.squeezing_db
                .iter()
                .zip(&s.antisqueezing_db)
                .map(|(&a, &b)| (a, b))
                .collect()
        } else if let Some(l) = s.l_sq {
            let mut out = Vec::with_capacity(s.squeezing_db.len());
            for &s_db in &s.squeezing_db {
                let r_plus = optics::antisq_from_sq(optics::db_to_ratio(s_db), l)?;
                out.push((s_db, optics::ratio_to_db(r_plus)));
            }
            out
        } else {
            return Err(Error::Config(
                "sweep: need antisqueezing_db or l_sq to fix the anti-squeezing".into(),
            ));
        };
        pairs
            .into_iter()
            .map(|(s_db, a_db)| {
                if s_db > 0.0 || a_db < 0.0 {
                    return Err(Error::Config(format!(
                        "sweep: invalid level pair ({s_db} dB, {a_db} dB)"
                    )));
                }
                let r_m = -optics::db_to_ratio(s_db).ln() / 2.0;
                let r_p = optics::db_to_ratio(a_db).ln() / 2.0;
                Ok((r_m, r_p))
            })
            .collect()
    }
}
