//! Closed-form FID results for the weak-coupling model and the first-order
//! flip-flop correction.
//!
//! Every formula is written in terms of the noise characteristic pair
//! `(E[cos eta t], E[sin eta t])`. Passing the exact averages of a
//! [`NoiseModel`] gives the ensemble signal; passing `(cos eta t, sin eta t)`
//! for a single draw gives that realization's signal.
//!
//! Readout conventions. The single-spin and thermal-state forms report the
//! spin-1/2 magnetization with amplitude `p/2` and a clockwise `M_y`; the
//! simulation engine reports `Tr(rho sigma)` with counter-clockwise
//! precession under `exp(-iHt)`. [`to_pauli_readout`] converts the former to
//! the latter: `(m_x, m_y) -> (2 m_x, -2 m_y)`. The pseudo-pure forms already
//! use amplitude `p`, with the `M_x` sign of a spin pulsed from `|0>`; when the
//! observed spin starts in `|1>` the simulated `m_x` has the opposite sign.

use serde::Serialize;

use crate::engine::{residual_ratio_on_grid, TimeGrid};
use crate::error::{FidError, Result};
use crate::hamiltonians::SpinSystemSpec;
use crate::noise::NoiseModel;
use crate::state_prep::BasisLabel;

/// `|lambda1| + |lambda2|` above which the first-order result is flagged.
pub const PERTURBATIVE_LIMIT: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Magnetization {
    pub mx: f64,
    pub my: f64,
    pub mperp: f64,
}

/// `(E[cos eta t], E[sin eta t])`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Characteristic {
    pub cos: f64,
    pub sin: f64,
}

impl Characteristic {
    pub fn of_model(model: &NoiseModel, t: f64) -> Self {
        Characteristic {
            cos: model.avg_cos(t),
            sin: model.avg_sin(t),
        }
    }

    /// A single static draw `eta` (rad/s).
    pub fn of_draw(eta: f64, t: f64) -> Self {
        let (sin, cos) = (eta * t).sin_cos();
        Characteristic { cos, sin }
    }

    pub fn modulus(&self) -> f64 {
        self.cos.hypot(self.sin)
    }

    /// `E[cos(w t + eta t)]`.
    fn shifted_cos(&self, phase: f64) -> f64 {
        phase.cos() * self.cos - phase.sin() * self.sin
    }

    /// `E[sin(w t + eta t)]`.
    fn shifted_sin(&self, phase: f64) -> f64 {
        phase.sin() * self.cos + phase.cos() * self.sin
    }
}

/// Spin-1/2 readout to `Tr(rho sigma)` readout for the single-spin and
/// thermal-state forms.
pub fn to_pauli_readout(m: Magnetization) -> Magnetization {
    Magnetization {
        mx: 2.0 * m.mx,
        my: -2.0 * m.my,
        mperp: 2.0 * m.mperp,
    }
}

pub fn single_from(p: f64, ch: Characteristic) -> Magnetization {
    Magnetization {
        mx: 0.5 * p * ch.cos,
        my: -0.5 * p * ch.sin,
        mperp: (0.5 * p).abs() * ch.modulus(),
    }
}

/// FID of an isolated spin after a `pi/2` pulse, dephased by static noise.
pub fn fid_single(model: &NoiseModel, p: f64, t: f64) -> Magnetization {
    single_from(p, Characteristic::of_model(model, t))
}

/// `M0(t) = -(p/2) prod_i cos(m J_i,obs t / 2)` for the last (pulsed) spin.
pub fn thermal_envelope(spec: &SpinSystemSpec, t: f64) -> f64 {
    let obs = spec.n_spins - 1;
    let product: f64 = (0..obs)
        .map(|i| (0.5 * spec.effective_coupling(i, obs) * t).cos())
        .product();
    -0.5 * spec.polarization * product
}

pub fn thermal_from(spec: &SpinSystemSpec, t: f64, ch: Characteristic) -> Result<Magnetization> {
    spec.validate()?;
    let m0 = thermal_envelope(spec, t);
    let phase = spec.delta(spec.n_spins - 1) * t;
    Ok(Magnetization {
        mx: -m0 * ch.shifted_cos(phase),
        my: m0 * ch.shifted_sin(phase),
        mperp: m0.abs() * ch.modulus(),
    })
}

/// Thermal-state FID of the last spin after a selective `pi/2` pulse under
/// the Ising Hamiltonian. Spin-1/2 readout.
pub fn fid_thermal(spec: &SpinSystemSpec, model: &NoiseModel, t: f64) -> Result<Magnetization> {
    thermal_from(spec, t, Characteristic::of_model(model, t))
}

/// Precession frequency (rad/s, without noise) of the last spin when the
/// others sit in the basis state `label`.
pub fn pps_frequency(spec: &SpinSystemSpec, label: &BasisLabel) -> Result<f64> {
    spec.validate()?;
    if label.len() != spec.n_spins {
        return Err(FidError::invalid(format!(
            "label {label} has {} bits, expected {}",
            label.len(),
            spec.n_spins
        )));
    }
    let obs = spec.n_spins - 1;
    let shift: f64 = (0..obs)
        .map(|i| 0.5 * label.z_sign(i) * spec.effective_coupling(i, obs))
        .sum();
    Ok(spec.delta(obs) + shift)
}

pub fn pps_from(
    spec: &SpinSystemSpec,
    label: &BasisLabel,
    t: f64,
    ch: Characteristic,
) -> Result<Magnetization> {
    let theta = pps_frequency(spec, label)? * t;
    let p = spec.polarization;
    Ok(Magnetization {
        mx: p * ch.shifted_cos(theta),
        my: -p * ch.shifted_sin(theta),
        mperp: p.abs() * ch.modulus(),
    })
}

/// Pseudo-pure-state FID of the last spin under the Ising Hamiltonian.
/// The amplitude does not depend on the couplings or shifts.
pub fn fid_pps(
    spec: &SpinSystemSpec,
    label: &BasisLabel,
    model: &NoiseModel,
    t: f64,
) -> Result<Magnetization> {
    pps_from(spec, label, t, Characteristic::of_model(model, t))
}

/// First-order flip-flop mixing for the `|101>` pseudo-pure state of three
/// spins with `delta_1 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationCoeffs {
    /// `m J23 / [2 (delta3 - delta2)]`: weight of the spin-2 branch.
    pub lambda1: f64,
    /// `-m J13 / [2 (delta3 - delta1)]`: weight of the spin-1 branch.
    pub lambda2: f64,
    /// Branch frequencies for spins 1, 2, 3 (rad/s, noise excluded).
    pub theta_freq: [f64; 3],
}

impl PerturbationCoeffs {
    pub fn new(spec: &SpinSystemSpec) -> Result<Self> {
        spec.validate()?;
        if spec.n_spins != 3 {
            return Err(FidError::invalid(format!(
                "perturbative result is defined for three spins, got {}",
                spec.n_spins
            )));
        }
        if spec.delta_hz[0] != 0.0 {
            return Err(FidError::invalid(format!(
                "perturbative result assumes delta_1 = 0, got {} Hz",
                spec.delta_hz[0]
            )));
        }
        let m = spec.magnification;
        let d = &spec.delta_hz;
        let j13 = spec.j_hz[1];
        let j23 = spec.j_hz[2];
        let (g12, g13, g23) = (
            spec.effective_coupling(0, 1),
            spec.effective_coupling(0, 2),
            spec.effective_coupling(1, 2),
        );
        Ok(PerturbationCoeffs {
            lambda1: m * j23 / (2.0 * (d[2] - d[1])),
            lambda2: -m * j13 / (2.0 * (d[2] - d[0])),
            theta_freq: [
                spec.delta(0) + 0.5 * (g12 - g13),
                spec.delta(1) + 0.5 * (g23 - g12),
                spec.delta(2) + 0.5 * (g23 - g13),
            ],
        })
    }

    pub fn out_of_regime(&self) -> bool {
        self.lambda1.abs() + self.lambda2.abs() > PERTURBATIVE_LIMIT
    }

    /// `F = 1 - l1 - l2 + l1 cos((d3 - d2) t) + l2 cos(d3 t)`.
    pub fn amplitude_factor(&self, spec: &SpinSystemSpec, t: f64) -> f64 {
        let (l1, l2) = (self.lambda1, self.lambda2);
        1.0 - l1 - l2
            + l1 * ((spec.delta(2) - spec.delta(1)) * t).cos()
            + l2 * (spec.delta(2) * t).cos()
    }

    fn weights(&self) -> [f64; 3] {
        [
            self.lambda2,
            self.lambda1,
            1.0 - self.lambda1 - self.lambda2,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbativeFid {
    /// `m_x, m_y` from the three branches; `mperp = |p| F(t) |E[exp(i eta t)]|`.
    pub magnetization: Magnetization,
    /// `sqrt(m_x^2 + m_y^2)` of the three-branch sum.
    pub branch_modulus: f64,
    pub out_of_regime: bool,
}

pub fn perturbative_from(
    spec: &SpinSystemSpec,
    t: f64,
    ch: Characteristic,
) -> Result<PerturbativeFid> {
    let coeffs = PerturbationCoeffs::new(spec)?;
    let p = spec.polarization;
    let (mut cx, mut sy) = (0.0, 0.0);
    for (w, freq) in coeffs.weights().iter().zip(coeffs.theta_freq) {
        cx += w * ch.shifted_cos(freq * t);
        sy += w * ch.shifted_sin(freq * t);
    }
    let mx = -p * cx;
    let my = p * sy;
    Ok(PerturbativeFid {
        magnetization: Magnetization {
            mx,
            my,
            mperp: p.abs() * coeffs.amplitude_factor(spec, t) * ch.modulus(),
        },
        branch_modulus: mx.hypot(my),
        out_of_regime: coeffs.out_of_regime(),
    })
}

/// First-order FID of the `|101>` pseudo-pure state under full `J I.I`
/// coupling, ensemble-averaged over `model`.
pub fn fid_perturbative(
    spec: &SpinSystemSpec,
    model: &NoiseModel,
    t: f64,
) -> Result<PerturbativeFid> {
    perturbative_from(spec, t, Characteristic::of_model(model, t))
}

/// Residual ratio predicted by the first-order amplitude factor, on the same
/// trapezoid quadrature the simulation uses.
pub fn residual_ratio_analytic(
    spec: &SpinSystemSpec,
    model: &NoiseModel,
    m: f64,
    grid: &TimeGrid,
) -> Result<f64> {
    grid.validate()?;
    let label: BasisLabel = "101".parse()?;
    let spec_m = spec.clone().with_magnification(m);
    let spec_0 = spec.clone().with_magnification(0.0);
    let times = grid.points();
    let a_m = times
        .iter()
        .map(|&t| fid_perturbative(&spec_m, model, t).map(|f| f.magnetization.mperp))
        .collect::<Result<Vec<_>>>()?;
    let a_0 = times
        .iter()
        .map(|&t| fid_pps(&spec_0, &label, model, t).map(|f| f.mperp))
        .collect::<Result<Vec<_>>>()?;
    residual_ratio_on_grid(grid, &a_m, &a_0)
}
