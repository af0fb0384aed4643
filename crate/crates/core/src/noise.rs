//! Static longitudinal noise: box, Gaussian and Lorentzian (Cauchy) line
//! shapes, their samplers and exact characteristic functions.
//!
//! Draws are a pure function of `(seed, index)`. Realizations are grouped in
//! blocks of [`STRATA`] consecutive indices; inside a block each index owns
//! one equal-probability stratum of the quantile range, assigned by a
//! seed-keyed affine permutation, and jittered uniformly within it. Every draw
//! is marginally distributed exactly as the target law for any ensemble size,
//! and full blocks are stratified.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{FidError, Result};
use crate::hamiltonians::{frequency_scale, NoiseSample};

/// Realizations per stratified block.
pub const STRATA: u64 = 1024;

const STRATUM_KEY: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Uniform on `[-a, a]`.
    White,
    /// Zero-mean normal with standard deviation `sigma`.
    Gaussian,
    /// Cauchy with half width at half maximum `gamma`.
    Lorentzian,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::White, NoiseKind::Gaussian, NoiseKind::Lorentzian];
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::White => "white",
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Lorentzian => "lorentzian",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// `a`, `sigma` or `gamma` in Hz.
    pub width_hz: f64,
    /// Follows the spin system's unit flag; not part of the noise schema.
    #[serde(skip)]
    pub angular_units: bool,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, width_hz: f64) -> Self {
        NoiseModel {
            kind,
            width_hz,
            angular_units: false,
        }
    }

    pub fn lorentzian(gamma_hz: f64) -> Self {
        Self::new(NoiseKind::Lorentzian, gamma_hz)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_hz >= 0.0 && self.width_hz.is_finite()) {
            return Err(FidError::Config(format!(
                "noise width must be finite and >= 0, got {}",
                self.width_hz
            )));
        }
        Ok(())
    }

    /// Width in rad/s.
    pub fn width(&self) -> f64 {
        self.width_hz * frequency_scale(self.angular_units)
    }

    /// Maps a quantile level `u` in `(0, 1)` to a noise value in rad/s.
    pub fn quantile(&self, u: f64) -> f64 {
        let w = self.width();
        if w == 0.0 {
            return 0.0;
        }
        match self.kind {
            NoiseKind::White => w * (2.0 * u - 1.0),
            NoiseKind::Gaussian => w * standard_normal().inverse_cdf(u),
            NoiseKind::Lorentzian => w * (std::f64::consts::PI * (u - 0.5)).tan(),
        }
    }

    /// Exact `E[cos(eta t)]`.
    pub fn avg_cos(&self, t: f64) -> f64 {
        let w = self.width();
        let t = t.abs();
        match self.kind {
            NoiseKind::White => {
                let x = w * t;
                if x.abs() < 1e-8 {
                    1.0 - x * x / 6.0
                } else {
                    x.sin() / x
                }
            }
            NoiseKind::Gaussian => (-0.5 * (w * t).powi(2)).exp(),
            NoiseKind::Lorentzian => (-w * t).exp(),
        }
    }

    /// Exact `E[sin(eta t)]`; zero for every symmetric line shape.
    pub fn avg_sin(&self, _t: f64) -> f64 {
        0.0
    }
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Uniform in the open interval `(0, 1)` from 53 random bits.
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn stream_word(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Stratified quantile level for realization `index`.
pub fn quantile_level(seed: u64, index: u64) -> f64 {
    let block = index / STRATA;
    let slot = index % STRATA;
    let key = stream_word(seed ^ STRATUM_KEY, block);
    let mult = ((key >> 32) % STRATA) | 1;
    let offset = key % STRATA;
    let stratum = (mult * slot + offset) % STRATA;
    let jitter = open_unit(stream_word(seed, index));
    (stratum as f64 + jitter) / STRATA as f64
}

/// One noise draw for realization `index` of the ensemble keyed by `seed`.
pub fn sample(model: &NoiseModel, seed: u64, index: u64) -> NoiseSample {
    NoiseSample::new(model.quantile(quantile_level(seed, index)))
}
