//! Ensemble free-induction-decay simulation.
//!
//! Each realization draws one static noise value, builds the rotating-frame
//! Hamiltonian, diagonalizes it once and evaluates the transverse
//! magnetization on every grid point by phase-weighting the eigenbasis
//! components of the initial state. Realizations are summed in fixed-size
//! chunks whose partial sums are combined in index order, so the result does
//! not depend on how many worker threads ran the chunks.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FidError, Result};
use crate::hamiltonians::{build_rotating, NoiseSample, SpinSystemSpec};
use crate::noise::{sample, NoiseModel};
use crate::spin_algebra::{embed, pauli, Axis, DensityMatrix, HermitianEigen, Operator, C64};

/// Realizations per reduction chunk.
const CHUNK: u64 = 256;

/// Upper bound on realizations x grid points for one run.
pub const MAX_WORK: u64 = 20_000_000_000;

/// Uniform time grid `t_k = k t_max / (n_points - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max_s: f64,
    pub n_points: usize,
}

impl Default for TimeGrid {
    /// 0 to 24 ms in 50 us steps.
    fn default() -> Self {
        TimeGrid {
            t_max_s: 0.024,
            n_points: 481,
        }
    }
}

impl TimeGrid {
    pub fn new(t_max_s: f64, n_points: usize) -> Result<Self> {
        let g = TimeGrid { t_max_s, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(FidError::Config(format!(
                "grid needs at least 2 points, got {}",
                self.n_points
            )));
        }
        if !(self.t_max_s > 0.0 && self.t_max_s.is_finite()) {
            return Err(FidError::Config(format!(
                "grid t_max_s must be positive and finite, got {}",
                self.t_max_s
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.t_max_s / (self.n_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.t_max_s * k as f64 / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n_points)
            .map(|k| {
                if k == 0 || k + 1 == self.n_points {
                    0.5 * h
                } else {
                    h
                }
            })
            .collect()
    }
}

/// Which spins contribute to the detected transverse magnetization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `sum_i sigma_i`.
    #[default]
    Total,
    /// `sigma_spin` on one spin (0-based).
    SingleSpin { spin: usize },
}

impl ObservableSpec {
    pub fn validate(&self, n_spins: usize) -> Result<()> {
        match *self {
            ObservableSpec::SingleSpin { spin } if spin >= n_spins => Err(FidError::Config(
                format!("observable spin {spin} out of range for {n_spins} spins"),
            )),
            _ => Ok(()),
        }
    }

    fn sites(&self, n_spins: usize) -> Vec<usize> {
        match *self {
            ObservableSpec::Total => (0..n_spins).collect(),
            ObservableSpec::SingleSpin { spin } => vec![spin],
        }
    }

    /// `sum (sigma_x + i sigma_y)`; `Tr(rho O) = m_x + i m_y`.
    pub fn readout(&self, n_spins: usize) -> Result<Operator> {
        self.validate(n_spins)?;
        let plus = &pauli(Axis::X) + &pauli(Axis::Y).scale_complex(C64::new(0.0, 1.0));
        let mut op = Operator::zeros(1 << n_spins);
        for i in self.sites(n_spins) {
            op = op + embed(&plus, i, n_spins)?;
        }
        Ok(op)
    }
}

/// Ensemble-averaged transverse magnetization on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FidTrace {
    pub grid: TimeGrid,
    pub mx: Vec<f64>,
    pub my: Vec<f64>,
    /// Modulus of the ensemble means, `sqrt(mx^2 + my^2)`.
    pub mperp: Vec<f64>,
    pub n_realizations: u64,
    pub seed: u64,
}

impl FidTrace {
    pub fn from_components(
        grid: TimeGrid,
        mx: Vec<f64>,
        my: Vec<f64>,
        n_realizations: u64,
        seed: u64,
    ) -> Self {
        let mperp = mx.iter().zip(&my).map(|(x, y)| x.hypot(*y)).collect();
        FidTrace {
            grid,
            mx,
            my,
            mperp,
            n_realizations,
            seed,
        }
    }

    /// `mperp / mperp[0]`.
    pub fn normalized_mperp(&self) -> Result<Vec<f64>> {
        let a0 = self.mperp[0];
        if a0 == 0.0 {
            return Err(FidError::invalid(
                "cannot normalize a trace with zero initial amplitude",
            ));
        }
        Ok(self.mperp.iter().map(|a| a / a0).collect())
    }

    pub fn check_invariants(&self) -> Result<()> {
        self.grid.validate()?;
        let n = self.grid.n_points;
        if self.mx.len() != n || self.my.len() != n || self.mperp.len() != n {
            return Err(FidError::Invariant(format!(
                "trace columns must have {n} entries"
            )));
        }
        for k in 0..n {
            let m = self.mx[k].hypot(self.my[k]);
            if (m - self.mperp[k]).abs() > 1e-12 * m.max(1.0) {
                return Err(FidError::Invariant(format!(
                    "mperp[{k}] = {} but sqrt(mx^2 + my^2) = {m}",
                    self.mperp[k]
                )));
            }
        }
        Ok(())
    }
}

/// Inputs to one ensemble simulation. The Hamiltonian is the rotating-frame
/// form selected by `spec.coupling_form`.
#[derive(Clone, Copy, Debug)]
pub struct FidRequest<'a> {
    pub spec: &'a SpinSystemSpec,
    pub initial: &'a DensityMatrix,
    pub noise: &'a NoiseModel,
    pub grid: &'a TimeGrid,
    pub observable: ObservableSpec,
    pub n_realizations: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
}

/// Eigenbasis expansion of `Tr(U rho U^dagger O)` for one Hamiltonian.
struct Spectrum {
    /// `(E_a - E_b, rho_ab O_ba)` for every non-negligible pair.
    lines: Vec<(f64, C64)>,
}

impl Spectrum {
    fn new(h: &Operator, rho: &Operator, readout: &Operator) -> Result<Self> {
        let eig = HermitianEigen::new(h)?;
        let r: DMatrix<C64> = eig.to_eigenbasis(rho);
        let o: DMatrix<C64> = eig.to_eigenbasis(readout);
        let n = r.nrows();
        let mut lines = Vec::with_capacity(n * n);
        let mut scale = 0.0;
        for a in 0..n {
            for b in 0..n {
                let c = r[(a, b)] * o[(b, a)];
                scale += c.norm();
                lines.push((eig.values[a] - eig.values[b], c));
            }
        }
        let cutoff = 1e-15 * scale;
        lines.retain(|(_, c)| c.norm() > cutoff);
        Ok(Spectrum { lines })
    }

    /// Adds `m_x + i m_y` at each time into `acc`.
    fn accumulate(&self, times: &[f64], acc: &mut [C64]) {
        for (slot, &t) in acc.iter_mut().zip(times) {
            let mut z = C64::new(0.0, 0.0);
            for &(w, c) in &self.lines {
                z += c * C64::from_polar(1.0, -w * t);
            }
            *slot += z;
        }
    }
}

/// `m_x + i m_y` on `times` for a single fixed noise value.
pub fn evolve_realization(
    spec: &SpinSystemSpec,
    initial: &DensityMatrix,
    times: &[f64],
    observable: ObservableSpec,
    eta: NoiseSample,
) -> Result<Vec<C64>> {
    check_dims(spec, initial)?;
    let readout = observable.readout(spec.n_spins)?;
    let h = build_rotating(spec, eta)?;
    let mut out = vec![C64::new(0.0, 0.0); times.len()];
    Spectrum::new(&h, initial.op(), &readout)?.accumulate(times, &mut out);
    Ok(out)
}

fn check_dims(spec: &SpinSystemSpec, initial: &DensityMatrix) -> Result<()> {
    spec.validate()?;
    if initial.dim() != spec.dim() {
        return Err(FidError::invalid(format!(
            "initial state dimension {} does not match {} spins",
            initial.dim(),
            spec.n_spins
        )));
    }
    Ok(())
}

/// Simulates the ensemble-averaged FID.
pub fn evolve_fid(req: &FidRequest<'_>) -> Result<FidTrace> {
    check_dims(req.spec, req.initial)?;
    req.noise.validate()?;
    req.grid.validate()?;
    if req.n_realizations == 0 {
        return Err(FidError::invalid("n_realizations must be at least 1"));
    }
    let work = req
        .n_realizations
        .checked_mul(req.grid.n_points as u64)
        .filter(|w| *w <= MAX_WORK)
        .ok_or_else(|| {
            FidError::Resource(format!(
                "{} realizations x {} grid points exceeds the work limit {MAX_WORK}",
                req.n_realizations, req.grid.n_points
            ))
        })?;
    debug_assert!(work > 0);

    let readout = req.observable.readout(req.spec.n_spins)?;
    let times = req.grid.points();
    let n_chunks = req.n_realizations.div_ceil(CHUNK);

    let run_chunk = |chunk: u64| -> Result<Vec<C64>> {
        let mut acc = vec![C64::new(0.0, 0.0); times.len()];
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(req.n_realizations);
        for r in start..end {
            let eta = sample(req.noise, req.seed, r);
            let h = build_rotating(req.spec, eta)?;
            Spectrum::new(&h, req.initial.op(), &readout)?.accumulate(&times, &mut acc);
        }
        Ok(acc)
    };

    let compute =
        || -> Result<Vec<Vec<C64>>> { (0..n_chunks).into_par_iter().map(run_chunk).collect() };
    let partials = match req.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| FidError::Resource(format!("cannot start worker pool: {e}")))?
            .install(compute)?,
        None => compute()?,
    };

    let mut total = vec![C64::new(0.0, 0.0); times.len()];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    let n = req.n_realizations as f64;
    let mx = total.iter().map(|z| z.re / n).collect();
    let my = total.iter().map(|z| z.im / n).collect();
    Ok(FidTrace::from_components(
        *req.grid,
        mx,
        my,
        req.n_realizations,
        req.seed,
    ))
}

/// Trapezoid-rule `int |A_m - A_0| dt / int A_0 dt` over a shared grid.
pub fn residual_ratio_on_grid(grid: &TimeGrid, a_m: &[f64], a_0: &[f64]) -> Result<f64> {
    if a_m.len() != grid.n_points || a_0.len() != grid.n_points {
        return Err(FidError::invalid("amplitude series do not match the grid"));
    }
    let w = grid.trapezoid_weights();
    let num: f64 = w
        .iter()
        .zip(a_m.iter().zip(a_0))
        .map(|(w, (m, z))| w * (m - z).abs())
        .sum();
    let den: f64 = w.iter().zip(a_0).map(|(w, z)| w * z).sum();
    if den == 0.0 {
        return Err(FidError::invalid(
            "residual ratio reference integrates to zero",
        ));
    }
    Ok(num / den)
}

/// Residual ratio of `trace_m` against the reference `trace_0` (both `mperp`).
pub fn residual_ratio(trace_m: &FidTrace, trace_0: &FidTrace) -> Result<f64> {
    if trace_m.grid != trace_0.grid {
        return Err(FidError::invalid("residual ratio needs identical grids"));
    }
    residual_ratio_on_grid(&trace_m.grid, &trace_m.mperp, &trace_0.mperp)
}
