//! Self-checks run by `fidsim validate`.

use std::time::Instant;

use crate::analytic::{fid_pps, thermal_from, to_pauli_readout, Characteristic};
use crate::config::{parse_config, preset, serialize, PRESETS};
use crate::engine::{evolve_fid, evolve_realization, FidRequest, ObservableSpec, TimeGrid};
use crate::error::Result;
use crate::hamiltonians::{build_rotating, CouplingForm, NoiseSample, SpinSystemSpec};
use crate::noise::{sample, NoiseKind, NoiseModel};
use crate::spin_algebra::HermitianEigen;
use crate::state_prep::{apply_pulse, pps_state, thermal_state, BasisLabel, PulseSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn bound(name: &'static str, value: f64, limit: f64) -> Self {
        Check {
            name,
            passed: value <= limit,
            detail: format!("{value:.3e} (limit {limit:.1e})"),
        }
    }
}

fn label101() -> BasisLabel {
    "101".parse().expect("static label")
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn propagator_unitarity() -> Result<Check> {
    let spec = SpinSystemSpec::c2f3i().with_coupling_form(CouplingForm::Heisenberg);
    let h = build_rotating(&spec, NoiseSample::new(123.0))?;
    let defect = HermitianEigen::new(&h)?
        .propagator(0.0137)
        .unitarity_defect();
    Ok(Check::bound("propagator is unitary", defect, 1e-12))
}

fn pulse_preserves_trace() -> Result<Check> {
    let spec = SpinSystemSpec::c2f3i();
    let rho = thermal_state(&spec)?;
    let after = apply_pulse(&rho, &PulseSpec::y90(2))?;
    let drift = (after.op().trace() - rho.op().trace()).norm();
    Ok(Check::bound("pulse preserves trace", drift, 1e-14))
}

fn thermal_matches_closed_form() -> Result<Check> {
    let spec = SpinSystemSpec::c2f3i();
    let rho = apply_pulse(&thermal_state(&spec)?, &PulseSpec::y90(2))?;
    let times = TimeGrid::default().points();
    let mut worst: f64 = 0.0;
    for eta in [-250.0, 0.0, 37.0, 900.0] {
        let sim = evolve_realization(
            &spec,
            &rho,
            &times,
            ObservableSpec::Total,
            NoiseSample::new(eta),
        )?;
        for (z, &t) in sim.iter().zip(&times) {
            let m = to_pauli_readout(thermal_from(&spec, t, Characteristic::of_draw(eta, t))?);
            worst = worst.max((z.re - m.mx).abs()).max((z.im - m.my).abs());
        }
    }
    Ok(Check::bound(
        "thermal state matches closed form per draw",
        worst,
        1e-10,
    ))
}

fn pps_coupling_invariance(n: u64) -> Result<Check> {
    let grid = TimeGrid::default();
    let noise = NoiseModel::lorentzian(28.0);
    let run = |m: f64| -> Result<Vec<f64>> {
        let spec = SpinSystemSpec::c2f3i()
            .with_polarization(1.0)
            .with_magnification(m);
        let rho = apply_pulse(&pps_state(&spec, &label101())?, &PulseSpec::y90(2))?;
        Ok(evolve_fid(&FidRequest {
            spec: &spec,
            initial: &rho,
            noise: &noise,
            grid: &grid,
            observable: ObservableSpec::Total,
            n_realizations: n,
            seed: 11,
            workers: None,
        })?
        .mperp)
    };
    let diff = max_abs_diff(&run(1.0)?, &run(10.0)?);
    Ok(Check::bound(
        "pseudo-pure amplitude independent of J",
        diff,
        1e-9,
    ))
}

fn pps_noise_free_closed_form() -> Result<Check> {
    let spec = SpinSystemSpec::c2f3i().with_polarization(1.0);
    let rho = apply_pulse(&pps_state(&spec, &label101())?, &PulseSpec::y90(2))?;
    let times = TimeGrid::default().points();
    let sim = evolve_realization(
        &spec,
        &rho,
        &times,
        ObservableSpec::Total,
        NoiseSample::ZERO,
    )?;
    let none = NoiseModel::lorentzian(0.0);
    let mut worst: f64 = 0.0;
    for (z, &t) in sim.iter().zip(&times) {
        // spin 3 starts in |1>, so the pulse lays it along -x
        let m = fid_pps(&spec, &label101(), &none, t)?;
        worst = worst.max((z.re + m.mx).abs()).max((z.im - m.my).abs());
    }
    Ok(Check::bound(
        "pseudo-pure signal matches closed form",
        worst,
        1e-10,
    ))
}

fn worker_count_independence(n: u64) -> Result<Check> {
    let spec = SpinSystemSpec::c2f3i().with_coupling_form(CouplingForm::Heisenberg);
    let rho = apply_pulse(&thermal_state(&spec)?, &PulseSpec::y90(2))?;
    let noise = NoiseModel::new(NoiseKind::Gaussian, 28.0);
    let grid = TimeGrid::new(0.024, 97)?;
    let run = |workers| {
        evolve_fid(&FidRequest {
            spec: &spec,
            initial: &rho,
            noise: &noise,
            grid: &grid,
            observable: ObservableSpec::Total,
            n_realizations: n,
            seed: 5,
            workers: Some(workers),
        })
    };
    let (a, b) = (run(1)?, run(4)?);
    Ok(Check {
        name: "result independent of worker count",
        passed: a == b,
        detail: if a == b {
            "identical".into()
        } else {
            "traces differ".into()
        },
    })
}

fn sampler_characteristic(n: u64) -> Result<Check> {
    let times = TimeGrid::default().points();
    let mut worst: f64 = 0.0;
    for kind in NoiseKind::ALL {
        let model = NoiseModel::new(kind, 28.0);
        let etas: Vec<f64> = (0..n).map(|i| sample(&model, 3, i).eta_z).collect();
        for &t in &times {
            let mean = etas.iter().map(|e| (e * t).cos()).sum::<f64>() / n as f64;
            worst = worst.max((mean - model.avg_cos(t)).abs());
        }
    }
    Ok(Check::bound(
        "noise sampler matches characteristic functions",
        worst,
        5.0 / (n as f64).sqrt(),
    ))
}

fn presets_round_trip() -> Result<Check> {
    let mut failures = Vec::new();
    for name in PRESETS {
        let mut plan = preset(name)?;
        for c in plan.configs_mut() {
            if parse_config(&serialize(c)?)? != *c {
                failures.push(name);
            }
        }
    }
    Ok(Check {
        name: "presets survive serialize and parse",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{} presets", PRESETS.len())
        } else {
            failures.join(", ")
        },
    })
}

/// Runs every check with `n_realizations` draws where an ensemble is needed.
pub fn run_checks(n_realizations: u64) -> Result<Vec<(Check, f64)>> {
    let n = n_realizations.max(1);
    let checks: Vec<Box<dyn Fn() -> Result<Check>>> = vec![
        Box::new(propagator_unitarity),
        Box::new(pulse_preserves_trace),
        Box::new(thermal_matches_closed_form),
        Box::new(pps_noise_free_closed_form),
        Box::new(move || pps_coupling_invariance(n)),
        Box::new(move || worker_count_independence(n)),
        Box::new(move || sampler_characteristic(n.max(1024))),
        Box::new(presets_round_trip),
    ];
    checks
        .iter()
        .map(|check| {
            let start = Instant::now();
            check().map(|c| (c, start.elapsed().as_secs_f64()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for (check, _) in run_checks(2048).unwrap() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}
