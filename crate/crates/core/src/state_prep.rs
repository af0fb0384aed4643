//! Initial spin states and ideal hard pulses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FidError, Result};
use crate::hamiltonians::SpinSystemSpec;
use crate::spin_algebra::{embed, pauli, Axis, DensityMatrix, Operator, C64};

/// An instantaneous rotation `exp(-i angle sigma_axis / 2)` on one spin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    /// Spin index, 0-based (`0` is F1).
    pub target: usize,
    pub axis: Axis,
    /// Rotation angle, radians.
    pub angle: f64,
}

impl PulseSpec {
    /// `pi/2` about `y` on `target`.
    pub fn y90(target: usize) -> Self {
        PulseSpec {
            target,
            axis: Axis::Y,
            angle: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn validate(&self, n_spins: usize) -> Result<()> {
        if self.target >= n_spins {
            return Err(FidError::Config(format!(
                "pulse target {} out of range for {n_spins} spins",
                self.target
            )));
        }
        if !self.angle.is_finite() {
            return Err(FidError::Config("pulse angle must be finite".into()));
        }
        Ok(())
    }

    pub fn rotation(&self, n_spins: usize) -> Result<Operator> {
        self.validate(n_spins)?;
        let half = 0.5 * self.angle;
        let single = &Operator::identity(2).scale(half.cos())
            + &pauli(self.axis).scale_complex(C64::new(0.0, -half.sin()));
        embed(&single, self.target, n_spins)
    }
}

/// Computational-basis label such as `101`; leftmost bit is spin 1, and bit
/// `0` is the `+1` eigenstate of `sigma_z`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    bits: Vec<u8>,
}

impl BasisLabel {
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Basis-state index with spin 1 as the most significant bit.
    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    /// `+1` for bit 0, `-1` for bit 1: twice the `I_z` eigenvalue of spin `i`.
    pub fn z_sign(&self, i: usize) -> f64 {
        if self.bits[i] == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl FromStr for BasisLabel {
    type Err = FidError;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(FidError::invalid("basis label is empty"));
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(FidError::invalid(format!(
                    "basis label {s:?} contains {other:?}; only 0 and 1 are allowed"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(BasisLabel { bits })
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl Serialize for BasisLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BasisLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// High-temperature thermal state before any pulse:
/// `1/2^n + (p/2^n) sum_i sigma_iz`.
pub fn thermal_state(spec: &SpinSystemSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    let p = spec.polarization;
    if p.abs() > 1.0 {
        return Err(FidError::invalid(format!(
            "thermal polarization must satisfy |p| <= 1, got {p}"
        )));
    }
    let n = spec.n_spins;
    let dim = spec.dim() as f64;
    let mut op = Operator::identity(spec.dim()).scale(1.0 / dim);
    for i in 0..n {
        op = op + embed(&pauli(Axis::Z), i, n)?.scale(p / dim);
    }
    DensityMatrix::linearized(op)
}

/// Pseudo-pure state `((1-p)/2^n) 1 + p |label><label|`, with `p` in `(0, 1]`.
pub fn pps_state(spec: &SpinSystemSpec, label: &BasisLabel) -> Result<DensityMatrix> {
    spec.validate()?;
    let p = spec.polarization;
    if !(p > 0.0 && p <= 1.0) {
        return Err(FidError::invalid(format!(
            "pseudo-pure polarization must lie in (0, 1], got {p}"
        )));
    }
    if label.len() != spec.n_spins {
        return Err(FidError::invalid(format!(
            "label {label} has {} bits, expected {}",
            label.len(),
            spec.n_spins
        )));
    }
    let dim = spec.dim();
    let op = &Operator::identity(dim).scale((1.0 - p) / dim as f64)
        + &Operator::basis_projector(dim, label.index())?.scale(p);
    DensityMatrix::new(op)
}

/// `R rho R^dagger` for an ideal hard pulse.
pub fn apply_pulse(rho: &DensityMatrix, pulse: &PulseSpec) -> Result<DensityMatrix> {
    let n = rho.dim().trailing_zeros() as usize;
    let r = pulse.rotation(n)?;
    DensityMatrix::linearized(&(&r * rho.op()) * &r.dagger())
}
