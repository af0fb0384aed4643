//! Spin Hamiltonians for a chain of chemically shifted, J-coupled spin-1/2
//! nuclei with a common-mode static longitudinal noise field.
//!
//! Configured frequencies are in Hz and are converted to rad/s exactly once,
//! here, when an operator is assembled.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{FidError, Result};
use crate::spin_algebra::{embed, spin_half, Axis, Operator, MAX_DIM};

/// Which coupling survives in the rotating frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingForm {
    /// Secular `J I_z I_z` coupling only (weak-coupling effective Hamiltonian).
    #[serde(alias = "effective")]
    Ising,
    /// Full isotropic `J I.I` coupling.
    Heisenberg,
}

/// Physical parameters of the spin system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSystemSpec {
    pub n_spins: usize,
    /// Chemical shifts, Hz.
    pub delta_hz: Vec<f64>,
    /// Couplings `J_ij` for `i < j` in lexicographic pair order, Hz.
    /// For three spins: `[J12, J13, J23]`.
    pub j_hz: Vec<f64>,
    /// Larmor frequency, Hz. Only the lab-frame Hamiltonian needs it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_hz: Option<f64>,
    #[serde(default = "default_polarization")]
    pub polarization: f64,
    #[serde(default = "default_magnification")]
    pub magnification: f64,
    #[serde(default = "default_coupling_form")]
    pub coupling_form: CouplingForm,
    /// Treat configured frequencies as already angular (no 2*pi factor).
    #[serde(default)]
    pub angular_units: bool,
}

fn default_polarization() -> f64 {
    -1.0
}

fn default_magnification() -> f64 {
    1.0
}

fn default_coupling_form() -> CouplingForm {
    CouplingForm::Ising
}

/// Factor taking a configured frequency to rad/s.
pub fn frequency_scale(angular_units: bool) -> f64 {
    if angular_units {
        1.0
    } else {
        TAU
    }
}

/// Index of the pair `(i, j)`, `i < j`, in lexicographic order.
pub fn pair_index(i: usize, j: usize, n_spins: usize) -> usize {
    debug_assert!(i < j && j < n_spins);
    i * (2 * n_spins - i - 1) / 2 + (j - i - 1)
}

impl SpinSystemSpec {
    /// Trifluoroiodoethylene fluorine triplet: shifts (0, -1393, 1027) Hz and
    /// couplings J12 = -130, J13 = 69, J23 = 50 Hz.
    pub fn c2f3i() -> Self {
        SpinSystemSpec {
            n_spins: 3,
            delta_hz: vec![0.0, -1393.0, 1027.0],
            j_hz: vec![-130.0, 69.0, 50.0],
            omega0_hz: None,
            polarization: default_polarization(),
            magnification: 1.0,
            coupling_form: CouplingForm::Ising,
            angular_units: false,
        }
    }

    /// A lone spin with no chemical shift.
    pub fn single_spin() -> Self {
        SpinSystemSpec {
            n_spins: 1,
            delta_hz: vec![0.0],
            j_hz: vec![],
            omega0_hz: None,
            polarization: default_polarization(),
            magnification: 1.0,
            coupling_form: CouplingForm::Ising,
            angular_units: false,
        }
    }

    pub fn with_magnification(mut self, m: f64) -> Self {
        self.magnification = m;
        self
    }

    pub fn with_coupling_form(mut self, form: CouplingForm) -> Self {
        self.coupling_form = form;
        self
    }

    pub fn with_polarization(mut self, p: f64) -> Self {
        self.polarization = p;
        self
    }

    /// Multiplies every `J_ij` in the table (not the magnification).
    pub fn with_scaled_couplings(mut self, factor: f64) -> Self {
        for j in &mut self.j_hz {
            *j *= factor;
        }
        self
    }

    pub fn n_pairs(&self) -> usize {
        self.n_spins * self.n_spins.saturating_sub(1) / 2
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 || (1usize << self.n_spins.min(63)) > MAX_DIM {
            return Err(FidError::Config(format!(
                "n_spins must be between 1 and 4, got {}",
                self.n_spins
            )));
        }
        if self.delta_hz.len() != self.n_spins {
            return Err(FidError::Config(format!(
                "delta_hz has {} entries, expected n_spins = {}",
                self.delta_hz.len(),
                self.n_spins
            )));
        }
        if self.j_hz.len() != self.n_pairs() {
            return Err(FidError::Config(format!(
                "j_hz has {} entries, expected n_spins(n_spins-1)/2 = {}",
                self.j_hz.len(),
                self.n_pairs()
            )));
        }
        if !(self.magnification >= 0.0 && self.magnification.is_finite()) {
            return Err(FidError::Config(format!(
                "magnification must be a finite value >= 0, got {}",
                self.magnification
            )));
        }
        if !self.polarization.is_finite() {
            return Err(FidError::Config("polarization must be finite".into()));
        }
        let all_finite = self
            .delta_hz
            .iter()
            .chain(&self.j_hz)
            .chain(self.omega0_hz.iter())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(FidError::Config("frequencies must be finite".into()));
        }
        Ok(())
    }

    /// Factor taking configured frequencies to rad/s.
    pub fn freq_scale(&self) -> f64 {
        frequency_scale(self.angular_units)
    }

    /// Chemical shift of spin `i`, rad/s.
    pub fn delta(&self, i: usize) -> f64 {
        self.delta_hz[i] * self.freq_scale()
    }

    /// Unmagnified coupling `J_ij`, rad/s. Symmetric in `i, j`; zero on the diagonal.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.j_hz[pair_index(a, b, self.n_spins)] * self.freq_scale()
    }

    /// `m * J_ij`, rad/s.
    pub fn effective_coupling(&self, i: usize, j: usize) -> f64 {
        self.magnification * self.coupling(i, j)
    }

    /// `min |delta_i - delta_j| > 10 * max |m J_ij|` over all pairs.
    pub fn weak_coupling(&self) -> bool {
        let mut min_gap = f64::INFINITY;
        let mut max_j = 0.0f64;
        for i in 0..self.n_spins {
            for j in (i + 1)..self.n_spins {
                min_gap = min_gap.min((self.delta_hz[i] - self.delta_hz[j]).abs());
                max_j = max_j
                    .max((self.magnification * self.j_hz[pair_index(i, j, self.n_spins)]).abs());
            }
        }
        min_gap > 10.0 * max_j
    }
}

/// One static draw of the longitudinal noise field, rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSample {
    pub eta_z: f64,
}

impl NoiseSample {
    pub const ZERO: NoiseSample = NoiseSample { eta_z: 0.0 };

    pub fn new(eta_z: f64) -> Self {
        NoiseSample { eta_z }
    }
}

/// Per-site spin operators `I_x, I_y, I_z` embedded in the full register.
struct SpinOps {
    x: Vec<Operator>,
    y: Vec<Operator>,
    z: Vec<Operator>,
}

impl SpinOps {
    fn new(n: usize) -> Result<Self> {
        let make = |axis| -> Result<Vec<Operator>> {
            (0..n).map(|i| embed(&spin_half(axis), i, n)).collect()
        };
        Ok(SpinOps {
            x: make(Axis::X)?,
            y: make(Axis::Y)?,
            z: make(Axis::Z)?,
        })
    }
}

fn zeeman(spec: &SpinSystemSpec, ops: &SpinOps, eta: NoiseSample, omega0: f64) -> Operator {
    let mut h = Operator::zeros(spec.dim());
    for i in 0..spec.n_spins {
        h = h + ops.z[i].scale(omega0 + spec.delta(i) + eta.eta_z);
    }
    h
}

fn ising(spec: &SpinSystemSpec, ops: &SpinOps, strength: f64) -> Operator {
    let mut h = Operator::zeros(spec.dim());
    for i in 0..spec.n_spins {
        for j in (i + 1)..spec.n_spins {
            h = h + (&ops.z[i] * &ops.z[j]).scale(strength * spec.coupling(i, j));
        }
    }
    h
}

fn flip_flop(spec: &SpinSystemSpec, ops: &SpinOps, strength: f64) -> Operator {
    let mut h = Operator::zeros(spec.dim());
    for i in 0..spec.n_spins {
        for j in (i + 1)..spec.n_spins {
            let xy = &(&ops.x[i] * &ops.x[j]) + &(&ops.y[i] * &ops.y[j]);
            h = h + xy.scale(strength * spec.coupling(i, j));
        }
    }
    h
}

/// Lab-frame Hamiltonian with the Larmor term and full `J I.I` coupling.
///
/// The magnification factor is not applied here; the lab frame describes the
/// physical molecule.
pub fn build_lab(spec: &SpinSystemSpec, eta: NoiseSample) -> Result<Operator> {
    spec.validate()?;
    let omega0 = spec
        .omega0_hz
        .ok_or_else(|| FidError::Config("lab-frame Hamiltonian requires omega0_hz".into()))?;
    let ops = SpinOps::new(spec.n_spins)?;
    Ok(zeeman(spec, &ops, eta, omega0 * spec.freq_scale())
        + ising(spec, &ops, 1.0)
        + flip_flop(spec, &ops, 1.0))
}

/// Weak-coupling rotating-frame Hamiltonian: shifts, `m J I_z I_z` and the
/// common-mode noise. Diagonal in the computational basis.
pub fn build_effective(spec: &SpinSystemSpec, eta: NoiseSample) -> Result<Operator> {
    spec.validate()?;
    let ops = SpinOps::new(spec.n_spins)?;
    Ok(zeeman(spec, &ops, eta, 0.0) + ising(spec, &ops, spec.magnification))
}

/// Rotating-frame Hamiltonian with full `m J I.I` coupling.
pub fn build_rotating_heisenberg(spec: &SpinSystemSpec, eta: NoiseSample) -> Result<Operator> {
    spec.validate()?;
    let ops = SpinOps::new(spec.n_spins)?;
    Ok(zeeman(spec, &ops, eta, 0.0)
        + ising(spec, &ops, spec.magnification)
        + flip_flop(spec, &ops, spec.magnification))
}

/// The flip-flop part `m sum J_ij (I_x I_x + I_y I_y)`.
pub fn build_flip_flop(spec: &SpinSystemSpec) -> Result<Operator> {
    spec.validate()?;
    let ops = SpinOps::new(spec.n_spins)?;
    Ok(flip_flop(spec, &ops, spec.magnification))
}

/// Rotating-frame Hamiltonian selected by `spec.coupling_form`.
pub fn build_rotating(spec: &SpinSystemSpec, eta: NoiseSample) -> Result<Operator> {
    match spec.coupling_form {
        CouplingForm::Ising => build_effective(spec, eta),
        CouplingForm::Heisenberg => build_rotating_heisenberg(spec, eta),
    }
}

/// Total `sum_i I_iz`.
pub fn total_z(n_spins: usize) -> Result<Operator> {
    let ops = SpinOps::new(n_spins)?;
    Ok(ops
        .z
        .into_iter()
        .fold(Operator::zeros(1 << n_spins), |a, b| a + b))
}
