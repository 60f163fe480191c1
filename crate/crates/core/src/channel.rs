//! Path loss, fading and received power.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constellation::seeded_rng;
use crate::geometry::{Observer, SatellitePos};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("laplace argument must be non-negative, got {0}")]
    NegativeArgument(f64),
    #[error("invalid fading parameters: {0}")]
    Fading(String),
    #[error("invalid channel model: {0}")]
    Model(String),
    #[error("satellite and observer coincide")]
    CoincidentPoints,
}

/// Law of the fading power `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum FadingLaw {
    Deterministic { h: f64 },
    /// Exponential power with the given mean.
    Rayleigh { mean: f64 },
    /// Gamma power with shape `m` and mean `omega`.
    Nakagami { m: f64, omega: f64 },
}

impl Default for FadingLaw {
    fn default() -> Self {
        FadingLaw::Nakagami { m: 3.0, omega: 1.0 }
    }
}

impl FadingLaw {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let ok = match *self {
            FadingLaw::Deterministic { h } => h >= 0.0 && h.is_finite(),
            FadingLaw::Rayleigh { mean } => mean > 0.0 && mean.is_finite(),
            FadingLaw::Nakagami { m, omega } => m >= 0.5 && m.is_finite() && omega > 0.0 && omega.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(ChannelError::Fading(format!("{self:?}")))
        }
    }

    /// Rayleigh is the `m = 1` Nakagami law.
    fn gamma_shape_scale(&self) -> Option<(f64, f64)> {
        match *self {
            FadingLaw::Deterministic { .. } => None,
            FadingLaw::Rayleigh { mean } => Some((1.0, mean)),
            FadingLaw::Nakagami { m, omega } => Some((m, omega / m)),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FadingLaw::Deterministic { h } => h,
            FadingLaw::Rayleigh { mean } => mean,
            FadingLaw::Nakagami { omega, .. } => omega,
        }
    }

    /// `E[exp(-s H)]` without argument checks, for use inside integrands.
    pub(crate) fn laplace_unchecked(&self, s: f64) -> f64 {
        match self.gamma_shape_scale() {
            None => (-s * self.mean()).exp(),
            Some((shape, scale)) => (1.0 + s * scale).powf(-shape),
        }
    }

    /// Draws one fading power.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.gamma_shape_scale() {
            None => self.mean(),
            Some((shape, scale)) => Gamma::new(shape, scale).expect("validated law").sample(rng),
        }
    }
}

/// Laplace transform of the fading power, `E[exp(-s H)]`.
pub fn fading_laplace(law: &FadingLaw, s: f64) -> Result<f64, ChannelError> {
    if !(s >= 0.0) {
        return Err(ChannelError::NegativeArgument(s));
    }
    law.validate()?;
    Ok(law.laplace_unchecked(s))
}

pub fn sample_fading(law: &FadingLaw, rng_seed: u64, n: usize) -> Result<Vec<f64>, ChannelError> {
    law.validate()?;
    let mut rng = seeded_rng(rng_seed);
    match law.gamma_shape_scale() {
        None => Ok(vec![law.mean(); n]),
        Some((shape, scale)) => {
            let gamma = Gamma::new(shape, scale).map_err(|e| ChannelError::Fading(e.to_string()))?;
            Ok((0..n).map(|_| gamma.sample(&mut rng)).collect())
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn default_alpha() -> f64 {
    2.0
}

fn default_reuse() -> u32 {
    1
}

/// Propagation settings shared by serving and interfering links. Powers are
/// referenced to unit power at 1 km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub fading: FadingLaw,
    #[serde(default)]
    pub serving_gain_db: f64,
    #[serde(default)]
    pub interferer_gain_db: f64,
    #[serde(default = "default_reuse")]
    pub reuse_factor: u32,
    #[serde(default)]
    pub noise_power: f64,
    /// Carried for provenance; the SIR computations do not use it.
    #[serde(default)]
    pub carrier_ghz: Option<f64>,
    #[serde(default)]
    pub bandwidth_mhz: Option<f64>,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            fading: FadingLaw::default(),
            serving_gain_db: 0.0,
            interferer_gain_db: 0.0,
            reuse_factor: 1,
            noise_power: 0.0,
            carrier_ghz: None,
            bandwidth_mhz: None,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ChannelError::Model(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.reuse_factor == 0 {
            return Err(ChannelError::Model("reuse_factor must be at least 1".into()));
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(ChannelError::Model(format!("noise_power must be >= 0, got {}", self.noise_power)));
        }
        if !(self.serving_gain_db.is_finite() && self.interferer_gain_db.is_finite()) {
            return Err(ChannelError::Model("antenna gains must be finite".into()));
        }
        self.fading.validate()
    }

    /// `d^-alpha` path gain.
    pub fn path_gain(&self, distance: f64) -> f64 {
        distance.powf(-self.alpha)
    }
}

/// `g h d^-alpha` with `g = 10^(gain_db / 10)` and `d = |sat - obs|`.
pub fn received_power(
    sat: &SatellitePos,
    obs: &Observer,
    h: f64,
    gain_db: f64,
    model: &ChannelModel,
) -> Result<f64, ChannelError> {
    let d = sat.cartesian.distance(obs.cartesian);
    if !(d > 0.0) {
        return Err(ChannelError::CoincidentPoints);
    }
    Ok(db_to_linear(gain_db) * h * model.path_gain(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{satellite_position, EarthFrame, Vec3};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn laplace_at_zero_is_one() {
        for law in [
            FadingLaw::Deterministic { h: 2.0 },
            FadingLaw::Rayleigh { mean: 3.0 },
            FadingLaw::Nakagami { m: 2.5, omega: 0.4 },
        ] {
            assert_eq!(fading_laplace(&law, 0.0).unwrap(), 1.0);
        }
        assert!(fading_laplace(&FadingLaw::default(), -1.0).is_err());
    }

    #[test]
    fn exponential_laplace_value() {
        let v = fading_laplace(&FadingLaw::Nakagami { m: 1.0, omega: 1.0 }, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let r = fading_laplace(&FadingLaw::Rayleigh { mean: 1.7 }, 0.3).unwrap();
        let n = fading_laplace(&FadingLaw::Nakagami { m: 1.0, omega: 1.7 }, 0.3).unwrap();
        assert_eq!(r, n);
    }

    #[test]
    fn nakagami_laplace_matches_sampling() {
        let law = FadingLaw::Nakagami { m: 3.0, omega: 2.0 };
        let s = 0.7;
        let draws = sample_fading(&law, 11, 10_000_000).unwrap();
        let n = draws.len() as f64;
        let vals: Vec<f64> = draws.iter().map(|h| (-s * h).exp()).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let exact = fading_laplace(&law, s).unwrap();
        assert!((mean - exact).abs() < 3.0 * (var / n).sqrt(), "{mean} vs {exact}");
    }

    #[test]
    fn sampler_moments() {
        assert_eq!(sample_fading(&FadingLaw::Deterministic { h: 1.0 }, 0, 5).unwrap(), vec![1.0; 5]);
        let draws = sample_fading(&FadingLaw::Nakagami { m: 2.0, omega: 1.0 }, 5, 1_000_000).unwrap();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 3.0 * (var / n).sqrt());
        // Var of Gamma(m, omega / m) is omega^2 / m.
        assert!((var - 0.5).abs() < 0.01, "{var}");
    }

    #[test]
    fn laplace_completely_monotone_on_grid() {
        let law = FadingLaw::Nakagami { m: 2.3, omega: 1.4 };
        let vals: Vec<f64> = (0..100).map(|i| fading_laplace(&law, 0.05 * i as f64).unwrap()).collect();
        for w in vals.windows(3) {
            assert!(w[1] <= w[0]);
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-15);
        }
    }

    #[test]
    fn received_power_cases() {
        let f = EarthFrame::default();
        let model = ChannelModel {
            alpha: 2.0,
            ..Default::default()
        };
        let origin = Observer {
            latitude: 0.0,
            longitude: 0.0,
            cartesian: Vec3::new(0.0, 0.0, 0.0),
        };
        let orbit = f.orbit(7000.0, 0.0, FRAC_PI_2).unwrap();
        let mut sat = satellite_position(&orbit, 0.0);
        sat.cartesian = Vec3::new(1.0, 0.0, 0.0);
        assert!((received_power(&sat, &origin, 1.0, 0.0, &model).unwrap() - 1.0).abs() < 1e-15);
        sat.cartesian = Vec3::new(10.0, 0.0, 0.0);
        assert!((received_power(&sat, &origin, 1.0, 20.0, &model).unwrap() - 1.0).abs() < 1e-12);
        let zenith = satellite_position(&orbit, FRAC_PI_2);
        let p = received_power(&zenith, &f.north_pole(), 1.0, 0.0, &model).unwrap();
        assert!((p - 629f64.powi(-2)).abs() < 1e-18);
        sat.cartesian = origin.cartesian;
        assert_eq!(
            received_power(&sat, &origin, 1.0, 0.0, &model),
            Err(ChannelError::CoincidentPoints)
        );
    }
}
