//! Run configuration: a flat-section TOML document, its strict parser, and
//! the built-in figure presets.
//!
//! ```toml
//! [system]
//! n_spins = 3
//! delta_hz = [0.0, -1393.0, 1027.0]
//! j_hz = [-130.0, 69.0, 50.0]      # J12, J13, J23
//! polarization = 1.0
//! magnification = 1.0
//! coupling_form = "ising"          # or "heisenberg"
//!
//! [noise]
//! kind = "lorentzian"              # white | gaussian | lorentzian
//! width_hz = 28.0
//!
//! [state]
//! kind = "pps"                     # thermal | pps
//! label = "101"
//!
//! [grid]
//! t_max_s = 0.024
//! n_points = 481
//!
//! [ensemble]
//! n_realizations = 100000
//! seed = 1
//! ```
//!
//! Optional sections: `[pulse]` (default: `pi/2` about `y` on the last spin),
//! `[observable]` (default: `mode = "total"`) and `[output]`.

use std::fmt;
use std::path::PathBuf;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::engine::{ObservableSpec, TimeGrid};
use crate::error::{FidError, Result};
use crate::hamiltonians::{CouplingForm, SpinSystemSpec};
use crate::noise::{NoiseKind, NoiseModel};
use crate::state_prep::{BasisLabel, PulseSpec};

const DEFAULT_SEED: u64 = 1;
const DEFAULT_REALIZATIONS: u64 = 100_000;

/// Initial state before the pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSpec {
    Thermal,
    Pps { label: BasisLabel },
}

/// An ensemble seed. TOML integers are signed, so seeds above `i64::MAX` are
/// written as decimal strings; both forms are accepted on input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct SeedVisitor;

        impl Visitor<'_> for SeedVisitor {
            type Value = Seed;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an unsigned 64-bit integer or its decimal string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Seed, E> {
                u64::try_from(v)
                    .map(Seed)
                    .map_err(|_| E::custom(format!("seed must be non-negative, got {v}")))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Seed, E> {
                Ok(Seed(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Seed, E> {
                v.trim()
                    .parse()
                    .map(Seed)
                    .map_err(|_| E::custom(format!("invalid seed {v:?}")))
            }
        }

        d.deserialize_any(SeedVisitor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_realizations: u64,
    pub seed: Seed,
}

/// Closed-form columns that can accompany a simulated trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Single,
    Thermal,
    Pps,
    Perturbative,
    NoiseWhite,
    NoiseGaussian,
    NoiseLorentzian,
}

impl OracleKind {
    pub fn name(&self) -> &'static str {
        match self {
            OracleKind::Single => "single",
            OracleKind::Thermal => "thermal",
            OracleKind::Pps => "pps",
            OracleKind::Perturbative => "perturbative",
            OracleKind::NoiseWhite => "noise_white",
            OracleKind::NoiseGaussian => "noise_gaussian",
            OracleKind::NoiseLorentzian => "noise_lorentzian",
        }
    }

    pub fn noise(kind: NoiseKind) -> Self {
        match kind {
            NoiseKind::White => OracleKind::NoiseWhite,
            NoiseKind::Gaussian => OracleKind::NoiseGaussian,
            NoiseKind::Lorentzian => OracleKind::NoiseLorentzian,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Oracle columns to emit; `None` picks those matching the state and
    /// Hamiltonian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracles: Option<Vec<OracleKind>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SpinSystemSpec,
    pub noise: NoiseModel,
    pub state: StateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseSpec>,
    pub grid: TimeGrid,
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub observable: ObservableSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

const REQUIRED: [(&str, &str); 5] = [
    ("system", "n_spins, delta_hz, j_hz"),
    ("noise", "kind, width_hz"),
    ("state", "kind"),
    ("grid", "t_max_s, n_points"),
    ("ensemble", "n_realizations, seed"),
];

impl RunConfig {
    /// The explicit pulse, or `pi/2` about `y` on the last spin.
    pub fn effective_pulse(&self) -> PulseSpec {
        self.pulse
            .unwrap_or_else(|| PulseSpec::y90(self.system.n_spins.saturating_sub(1)))
    }

    pub fn seed(&self) -> u64 {
        self.ensemble.seed.0
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.noise.validate()?;
        self.grid.validate()?;
        self.observable.validate(self.system.n_spins)?;
        self.effective_pulse().validate(self.system.n_spins)?;
        if self.noise.angular_units != self.system.angular_units {
            return Err(FidError::Config(
                "noise and system must use the same frequency units".into(),
            ));
        }
        if self.ensemble.n_realizations == 0 {
            return Err(FidError::Config("n_realizations must be at least 1".into()));
        }
        let p = self.system.polarization;
        match &self.state {
            StateSpec::Thermal if p.abs() > 1.0 => Err(FidError::Config(format!(
                "thermal polarization must satisfy |p| <= 1, got {p}"
            ))),
            StateSpec::Pps { .. } if !(p > 0.0 && p <= 1.0) => Err(FidError::Config(format!(
                "pseudo-pure polarization must lie in (0, 1], got {p}"
            ))),
            StateSpec::Pps { label } if label.len() != self.system.n_spins => {
                Err(FidError::Config(format!(
                    "state label {label} has {} bits, expected n_spins = {}",
                    label.len(),
                    self.system.n_spins
                )))
            }
            _ => Ok(()),
        }
    }

    /// Oracle columns to emit for this run.
    pub fn oracles(&self) -> Vec<OracleKind> {
        if let Some(list) = &self.output.oracles {
            return list.clone();
        }
        let sys = &self.system;
        match (&self.state, sys.coupling_form) {
            (StateSpec::Thermal, _) if sys.n_spins == 1 => vec![OracleKind::Single],
            (StateSpec::Thermal, CouplingForm::Ising) => vec![OracleKind::Thermal],
            (StateSpec::Pps { .. }, CouplingForm::Ising) => vec![OracleKind::Pps],
            (StateSpec::Pps { label }, CouplingForm::Heisenberg)
                if sys.n_spins == 3 && sys.delta_hz[0] == 0.0 && label.to_string() == "101" =>
            {
                vec![OracleKind::Perturbative, OracleKind::Pps]
            }
            _ => Vec::new(),
        }
    }

    /// Keeps the noise unit flag in step with the system's.
    fn sync_units(&mut self) {
        self.noise.angular_units = self.system.angular_units;
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| FidError::Parse(e.to_string()))?;
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|(section, _)| !table.contains_key(*section))
        .map(|(section, keys)| format!("[{section}] ({keys})"))
        .collect();
    if !missing.is_empty() {
        return Err(FidError::Config(format!(
            "missing required sections: {}",
            missing.join(", ")
        )));
    }
    let mut config: RunConfig = toml::from_str(text).map_err(|e| FidError::Parse(e.to_string()))?;
    config.sync_units();
    config.validate()?;
    Ok(config)
}

/// Canonical TOML form; `parse_config(&serialize(c)?)` reproduces `c`.
pub fn serialize(config: &RunConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| FidError::Config(format!("cannot serialize config: {e}")))
}

/// First 16 hex digits of the SHA-256 of the canonical form.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    let digest = Sha256::digest(serialize(config)?.as_bytes());
    Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
}

/// One simulation of a preset and the file stem its CSV is written under.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedRun {
    pub stem: String,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PresetPlan {
    Runs(Vec<NamedRun>),
    /// Residual ratio of the base run against its `m = 0` reference, for
    /// each magnification.
    Residual {
        base: Box<RunConfig>,
        magnifications: Vec<f64>,
    },
}

impl PresetPlan {
    /// Every configuration the plan will run, for overrides and checks.
    pub fn configs_mut(&mut self) -> Vec<&mut RunConfig> {
        match self {
            PresetPlan::Runs(runs) => runs.iter_mut().map(|r| &mut r.config).collect(),
            PresetPlan::Residual { base, .. } => vec![base.as_mut()],
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        for c in self.configs_mut() {
            c.ensemble.seed = Seed(seed);
        }
    }

    pub fn set_realizations(&mut self, n: u64) {
        for c in self.configs_mut() {
            c.ensemble.n_realizations = n;
        }
    }
}

pub const PRESETS: [&str; 8] = [
    "fig1",
    "fig2-thermal",
    "fig2-thermal-x10",
    "fig2-pps",
    "fig2-pps-x10",
    "fig3",
    "fig4a",
    "fig4b",
];

fn base_config(system: SpinSystemSpec, state: StateSpec) -> RunConfig {
    RunConfig {
        system,
        noise: NoiseModel::lorentzian(28.0),
        state,
        pulse: None,
        grid: TimeGrid::default(),
        ensemble: EnsembleSpec {
            n_realizations: DEFAULT_REALIZATIONS,
            seed: Seed(DEFAULT_SEED),
        },
        observable: ObservableSpec::Total,
        output: OutputSpec::default(),
    }
}

fn thermal(m: f64) -> RunConfig {
    base_config(
        SpinSystemSpec::c2f3i().with_magnification(m),
        StateSpec::Thermal,
    )
}

fn pps(m: f64, form: CouplingForm) -> RunConfig {
    base_config(
        SpinSystemSpec::c2f3i()
            .with_polarization(1.0)
            .with_magnification(m)
            .with_coupling_form(form),
        StateSpec::Pps {
            label: "101".parse().expect("static label"),
        },
    )
}

fn single(stem: &str, config: RunConfig) -> PresetPlan {
    PresetPlan::Runs(vec![named(stem, config)])
}

fn named(stem: &str, mut config: RunConfig) -> NamedRun {
    config.output.path = Some(PathBuf::from(format!("{stem}.csv")));
    NamedRun {
        stem: stem.to_string(),
        config,
    }
}

/// Built-in experiment for a figure.
pub fn preset(name: &str) -> Result<PresetPlan> {
    let plan = match name {
        "fig1" => {
            let mut c = base_config(SpinSystemSpec::single_spin(), StateSpec::Thermal);
            let mut oracles: Vec<OracleKind> =
                NoiseKind::ALL.into_iter().map(OracleKind::noise).collect();
            oracles.push(OracleKind::Single);
            c.output.oracles = Some(oracles);
            single("fig1", c)
        }
        "fig2-thermal" => single(name, thermal(1.0)),
        "fig2-thermal-x10" => single(name, thermal(10.0)),
        "fig2-pps" => single(name, pps(1.0, CouplingForm::Ising)),
        "fig2-pps-x10" => single(name, pps(10.0, CouplingForm::Ising)),
        "fig3" => PresetPlan::Runs(vec![
            named("fig3-thermal", thermal(1.0)),
            named("fig3-pps", pps(1.0, CouplingForm::Ising)),
        ]),
        "fig4a" => PresetPlan::Runs(
            [("fig4a-m1", 1.0), ("fig4a-m2.5", 2.5), ("fig4a-m5", 5.0)]
                .into_iter()
                .map(|(stem, m)| named(stem, pps(m, CouplingForm::Heisenberg)))
                .collect(),
        ),
        "fig4b" => {
            let mut base = pps(1.0, CouplingForm::Heisenberg);
            base.output.path = Some(PathBuf::from("fig4b.csv"));
            PresetPlan::Residual {
                base: Box::new(base),
                magnifications: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            }
        }
        other => {
            return Err(FidError::Config(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PPS_DOC: &str = r#"
[system]
n_spins = 3
delta_hz = [0.0, -1393.0, 1027.0]
j_hz = [-130.0, 69.0, 50.0]
polarization = 1.0

[noise]
kind = "lorentzian"
width_hz = 28.0

[state]
kind = "pps"
label = "101"

[grid]
t_max_s = 0.024
n_points = 481

[ensemble]
n_realizations = 1000
seed = 7
"#;

    #[test]
    fn parses_minimal_document() {
        let c = parse_config(PPS_DOC).unwrap();
        assert_eq!(c.system, SpinSystemSpec::c2f3i().with_polarization(1.0));
        assert_eq!(c.seed(), 7);
        assert_eq!(c.effective_pulse(), PulseSpec::y90(2));
        assert_eq!(c.observable, ObservableSpec::Total);
        assert_eq!(c.oracles(), vec![OracleKind::Pps]);
    }

    #[test]
    fn empty_document_lists_every_section() {
        let err = parse_config("").unwrap_err().to_string();
        for (section, keys) in REQUIRED {
            assert!(err.contains(&format!("[{section}]")), "{err}");
            assert!(err.contains(keys), "{err}");
        }
    }

    #[test]
    fn negative_magnification_rejected() {
        let doc = PPS_DOC.replace(
            "polarization = 1.0",
            "polarization = 1.0\nmagnification = -1.0",
        );
        assert!(matches!(parse_config(&doc), Err(FidError::Config(_))));
    }

    #[test]
    fn unknown_key_rejected() {
        let doc = PPS_DOC.replace("width_hz = 28.0", "width_hz = 28.0\ncolour = 3");
        let err = parse_config(&doc).unwrap_err();
        assert!(matches!(err, FidError::Parse(_)));
        assert!(err.to_string().contains("colour"));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_config("[system\nn_spins = 3")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn pps_needs_positive_polarization() {
        let doc = PPS_DOC.replace("polarization = 1.0", "polarization = -1.0");
        assert!(parse_config(&doc).is_err());
    }

    #[test]
    fn hamiltonian_alias_accepted() {
        let doc = PPS_DOC.replace(
            "polarization = 1.0",
            "polarization = 1.0\ncoupling_form = \"effective\"",
        );
        assert_eq!(
            parse_config(&doc).unwrap().system.coupling_form,
            CouplingForm::Ising
        );
    }

    #[test]
    fn large_seed_round_trips_as_string() {
        let mut c = parse_config(PPS_DOC).unwrap();
        c.ensemble.seed = Seed(u64::MAX);
        let text = serialize(&c).unwrap();
        assert!(text.contains("\"18446744073709551615\""), "{text}");
        assert_eq!(parse_config(&text).unwrap(), c);
        assert!(parse_config(&PPS_DOC.replace("seed = 7", "seed = -7")).is_err());
    }

    #[test]
    fn fig2_thermal_preset() {
        let PresetPlan::Runs(runs) = preset("fig2-thermal").unwrap() else {
            panic!("expected runs")
        };
        let c = &runs[0].config;
        assert_eq!(c.system.delta_hz, vec![0.0, -1393.0, 1027.0]);
        assert_eq!(c.system.j_hz, vec![-130.0, 69.0, 50.0]);
        assert_eq!(c.noise, NoiseModel::lorentzian(28.0));
        assert_eq!(c.state, StateSpec::Thermal);
        assert_eq!(c.ensemble.n_realizations, 100_000);
    }

    #[test]
    fn every_preset_round_trips() {
        for name in PRESETS {
            let mut plan = preset(name).unwrap();
            for c in plan.configs_mut() {
                c.validate().unwrap();
                let back = parse_config(&serialize(c).unwrap()).unwrap();
                assert_eq!(&back, c, "{name}");
                assert_eq!(config_hash(&back).unwrap(), config_hash(c).unwrap());
            }
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse_config(PPS_DOC).unwrap();
        let mut b = a.clone();
        b.ensemble.seed = Seed(8);
        assert_eq!(config_hash(&a).unwrap().len(), 16);
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }
}
