//! Running configured experiments and writing their traces as CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analytic::{
    fid_perturbative, fid_pps, fid_single, fid_thermal, residual_ratio_analytic, to_pauli_readout,
};
use crate::config::{config_hash, OracleKind, RunConfig, StateSpec};
use crate::engine::{evolve_fid, residual_ratio, FidRequest, FidTrace, TimeGrid};
use crate::error::{FidError, Result};
use crate::noise::{NoiseKind, NoiseModel};
use crate::spin_algebra::DensityMatrix;
use crate::state_prep::{apply_pulse, pps_state, thermal_state};

/// A closed-form `mperp` series on the trace's grid, in the simulation's
/// `Tr(rho sigma)` normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleColumn {
    pub kind: OracleKind,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub trace: FidTrace,
    pub oracles: Vec<OracleColumn>,
    pub config_hash: String,
}

/// Density matrix right after the pulse.
pub fn prepare_state(config: &RunConfig) -> Result<DensityMatrix> {
    let rho = match &config.state {
        StateSpec::Thermal => thermal_state(&config.system)?,
        StateSpec::Pps { label } => pps_state(&config.system, label)?,
    };
    apply_pulse(&rho, &config.effective_pulse())
}

/// Simulates `config` and evaluates its oracle columns on the same grid.
pub fn run_experiment(config: &RunConfig, workers: Option<usize>) -> Result<Experiment> {
    config.validate()?;
    let initial = prepare_state(config)?;
    let trace = evolve_fid(&FidRequest {
        spec: &config.system,
        initial: &initial,
        noise: &config.noise,
        grid: &config.grid,
        observable: config.observable,
        n_realizations: config.ensemble.n_realizations,
        seed: config.seed(),
        workers,
    })?;
    let oracles = config
        .oracles()
        .into_iter()
        .map(|kind| oracle_column(config, kind))
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiment {
        trace,
        oracles,
        config_hash: config_hash(config)?,
    })
}

/// Evaluates one closed form over the configured grid.
pub fn oracle_column(config: &RunConfig, kind: OracleKind) -> Result<OracleColumn> {
    let sys = &config.system;
    let p = sys.polarization;
    let noise_column = |k: NoiseKind| {
        let model = NoiseModel {
            kind: k,
            ..config.noise
        };
        move |t: f64| -> Result<f64> { Ok(p.abs() * model.avg_cos(t).abs()) }
    };
    let eval: Box<dyn Fn(f64) -> Result<f64>> = match kind {
        OracleKind::Single => {
            Box::new(|t| Ok(to_pauli_readout(fid_single(&config.noise, p, t)).mperp))
        }
        OracleKind::Thermal => {
            Box::new(|t| Ok(to_pauli_readout(fid_thermal(sys, &config.noise, t)?).mperp))
        }
        OracleKind::Pps | OracleKind::Perturbative => {
            let StateSpec::Pps { label } = &config.state else {
                return Err(FidError::Config(format!(
                    "oracle {} needs a pseudo-pure state",
                    kind.name()
                )));
            };
            let label = label.clone();
            if kind == OracleKind::Pps {
                Box::new(move |t| Ok(fid_pps(sys, &label, &config.noise, t)?.mperp))
            } else {
                if label.to_string() != "101" {
                    return Err(FidError::Config(
                        "perturbative oracle is defined for the 101 state".into(),
                    ));
                }
                Box::new(|t| Ok(fid_perturbative(sys, &config.noise, t)?.magnetization.mperp))
            }
        }
        OracleKind::NoiseWhite => Box::new(noise_column(NoiseKind::White)),
        OracleKind::NoiseGaussian => Box::new(noise_column(NoiseKind::Gaussian)),
        OracleKind::NoiseLorentzian => Box::new(noise_column(NoiseKind::Lorentzian)),
    };
    let values = config
        .grid
        .points()
        .into_iter()
        .map(eval)
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleColumn { kind, values })
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text: header, one row per grid point, then `#` metadata lines.
pub fn render_csv(exp: &Experiment) -> Result<String> {
    let trace = &exp.trace;
    trace.check_invariants()?;
    let n = trace.grid.n_points;
    if exp.oracles.iter().any(|o| o.values.len() != n) {
        return Err(FidError::invalid(
            "oracle columns must share the trace grid",
        ));
    }
    let mut out = String::from("t_s,mx,my,mperp");
    for o in &exp.oracles {
        write!(out, ",oracle_{}_mperp", o.kind.name()).unwrap();
    }
    out.push('\n');
    for k in 0..n {
        let mut row = vec![
            fmt_value(trace.grid.point(k)),
            fmt_value(trace.mx[k]),
            fmt_value(trace.my[k]),
            fmt_value(trace.mperp[k]),
        ];
        row.extend(exp.oracles.iter().map(|o| fmt_value(o.values[k])));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    writeln!(out, "# seed={}", trace.seed).unwrap();
    writeln!(out, "# n_realizations={}", trace.n_realizations).unwrap();
    writeln!(out, "# config_hash={}", exp.config_hash).unwrap();
    Ok(out)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| FidError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| FidError::io(path, e))
}

pub fn emit_csv(exp: &Experiment, path: &Path) -> Result<()> {
    write_file(path, &render_csv(exp)?)
}

/// A CSV read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedCsv {
    pub trace: FidTrace,
    pub oracles: Vec<(String, Vec<f64>)>,
    pub config_hash: Option<String>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> FidError {
    FidError::Parse(format!("line {line}: {}", msg.into()))
}

/// Parses the output of [`render_csv`].
pub fn parse_csv(text: &str) -> Result<LoadedCsv> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let names: Vec<&str> = header.split(',').collect();
    if names.len() < 4 || names[..4] != ["t_s", "mx", "my", "mperp"] {
        return Err(parse_err(1, format!("unexpected header {header:?}")));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let (mut seed, mut n_real, mut hash) = (None, None, None);
    for (i, line) in lines {
        let lineno = i + 1;
        if let Some(meta) = line.strip_prefix('#') {
            let (key, value) = meta
                .trim()
                .split_once('=')
                .ok_or_else(|| parse_err(lineno, "malformed metadata"))?;
            match key {
                "seed" => {
                    seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|e| parse_err(lineno, e.to_string()))?,
                    )
                }
                "n_realizations" => {
                    n_real = Some(
                        value
                            .parse::<u64>()
                            .map_err(|e| parse_err(lineno, e.to_string()))?,
                    )
                }
                "config_hash" => hash = Some(value.to_string()),
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, got {}", names.len(), fields.len()),
            ));
        }
        for (col, f) in columns.iter_mut().zip(fields) {
            col.push(
                f.parse()
                    .map_err(|_| parse_err(lineno, format!("invalid number {f:?}")))?,
            );
        }
    }
    let t = &columns[0];
    let n = t.len();
    if n < 2 {
        return Err(FidError::Parse("need at least two data rows".into()));
    }
    let grid = TimeGrid::new(t[n - 1], n)?;
    for (k, tk) in t.iter().enumerate() {
        if (tk - grid.point(k)).abs() > 1e-12 * grid.t_max_s {
            return Err(FidError::Parse(format!(
                "time column is not uniform at row {k}"
            )));
        }
    }
    let trace = FidTrace {
        grid,
        mx: columns[1].clone(),
        my: columns[2].clone(),
        mperp: columns[3].clone(),
        n_realizations: n_real
            .ok_or_else(|| FidError::Parse("missing n_realizations metadata".into()))?,
        seed: seed.ok_or_else(|| FidError::Parse("missing seed metadata".into()))?,
    };
    let oracles = names[4..]
        .iter()
        .zip(columns.drain(4..))
        .map(|(name, col)| (name.to_string(), col))
        .collect();
    Ok(LoadedCsv {
        trace,
        oracles,
        config_hash: hash,
    })
}

pub fn read_csv(path: &Path) -> Result<LoadedCsv> {
    let text = fs::read_to_string(path).map_err(|e| FidError::io(path, e))?;
    parse_csv(&text)
}

/// One row of a residual-ratio sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualRow {
    pub magnification: f64,
    pub numeric: f64,
    /// First-order prediction, when the perturbative result applies.
    pub analytic: Option<f64>,
}

/// Simulated residual ratio `R(m)` of `base` at each magnification against
/// the same run at `m = 0`, with the first-order prediction alongside.
pub fn residual_sweep(
    base: &RunConfig,
    magnifications: &[f64],
    workers: Option<usize>,
) -> Result<Vec<ResidualRow>> {
    let with_m = |m: f64| {
        let mut c = base.clone();
        c.system.magnification = m;
        c.output.oracles = Some(Vec::new());
        c
    };
    let reference = run_experiment(&with_m(0.0), workers)?.trace;
    let perturbative = matches!(&base.state, StateSpec::Pps { label } if label.to_string() == "101")
        && base.system.n_spins == 3
        && base.system.delta_hz[0] == 0.0;
    magnifications
        .iter()
        .map(|&m| {
            let trace = run_experiment(&with_m(m), workers)?.trace;
            let analytic = if perturbative {
                Some(residual_ratio_analytic(
                    &base.system,
                    &base.noise,
                    m,
                    &base.grid,
                )?)
            } else {
                None
            };
            Ok(ResidualRow {
                magnification: m,
                numeric: residual_ratio(&trace, &reference)?,
                analytic,
            })
        })
        .collect()
}

pub fn render_residual_csv(rows: &[ResidualRow], base: &RunConfig) -> Result<String> {
    let mut out = String::from("m,r_numeric,r_analytic\n");
    for r in rows {
        let analytic = r.analytic.map(fmt_value).unwrap_or_default();
        writeln!(
            out,
            "{},{},{}",
            fmt_value(r.magnification),
            fmt_value(r.numeric),
            analytic
        )
        .unwrap();
    }
    writeln!(out, "# seed={}", base.seed()).unwrap();
    writeln!(out, "# n_realizations={}", base.ensemble.n_realizations).unwrap();
    writeln!(out, "# config_hash={}", config_hash(base)?).unwrap();
    Ok(out)
}
