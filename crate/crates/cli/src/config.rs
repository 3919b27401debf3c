//! Experiment configuration files: a strict TOML schema with units in the
//! field names. Frequencies given as `*_mhz` are scaled by 2 pi once, here;
//! times given as `*_ns` are converted to seconds.

use std::f64::consts::PI;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use ddlab::{
    BathState, CouplingForm, EnvHamiltonian, ExperimentSpec, GateTiming, PulseTiming,
    QuantumState, Sequence, SpinBathModel, SweepAxis, SweepSpec, TargetGate,
};

pub fn mhz_to_rad_per_s(nu_mhz: f64) -> f64 {
    2.0 * PI * nu_mhz * 1.0e6
}

pub fn ns_to_s(t_ns: f64) -> f64 {
    t_ns * 1.0e-9
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// "sweep" is the only document kind.
    pub kind: String,
    pub model: ModelSection,
    pub target: TargetSection,
    pub drive: DriveSection,
    #[serde(default)]
    pub pulse: Option<PulseSection>,
    pub initial: InitialSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_system_qubits")]
    pub system_qubits: usize,
    #[serde(default = "default_bath_spins")]
    pub bath_spins: usize,
    pub epsilon_mhz: f64,
    /// "heisenberg-dm" (default), "heisenberg", or "dephasing".
    #[serde(default = "default_coupling")]
    pub coupling: String,
    /// "none" (default), "random-field", or "random-transverse-field".
    #[serde(default = "default_environment")]
    pub environment: String,
    #[serde(default)]
    pub environment_seed: u64,
    #[serde(default)]
    pub environment_max_mhz: f64,
    /// "all-zero" (default) or "maximally-mixed".
    #[serde(default = "default_bath_state")]
    pub bath_state: String,
}

fn default_system_qubits() -> usize {
    1
}
fn default_bath_spins() -> usize {
    5
}
fn default_coupling() -> String {
    "heisenberg-dm".to_string()
}
fn default_environment() -> String {
    "none".to_string()
}
fn default_bath_state() -> String {
    "all-zero".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    /// "rotation" or "cross-resonance".
    pub kind: String,
    pub theta_rad: f64,
    #[serde(default)]
    pub phi_rad: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    /// Interval tau; total gate time is 4 tau.
    #[serde(default)]
    pub tau_ns: Option<f64>,
    /// Fixed drive amplitude; tau follows from the area law.
    #[serde(default)]
    pub amplitude_mhz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub width_ns: f64,
    /// Defaults to the pi-rotation strength pi / width.
    #[serde(default)]
    pub rabi_mhz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// One qubit: "plus", "zero", "one". Two qubits: "00", "01", "10", "11".
    pub system: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// "gate-duration-ns", "epsilon-mhz", or "pulse-width-ns".
    pub axis: String,
    pub points: Vec<f64>,
    pub sequences: Vec<String>,
}

pub struct ResolvedSweep {
    pub spec: SweepSpec,
    pub axis_label: String,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let cfg: ConfigFile = toml::from_str(text).context("config schema error")?;
    if cfg.kind != "sweep" {
        bail!("unsupported config kind {:?}; expected \"sweep\"", cfg.kind);
    }
    Ok(cfg)
}

/// Resolve a parsed config into an engine sweep, applying the unit
/// conversions and overriding the environment seed when requested.
pub fn resolve(cfg: &ConfigFile, seed_override: Option<u64>) -> Result<ResolvedSweep> {
    let model = resolve_model(&cfg.model, seed_override)?;
    let target = resolve_target(&cfg.target, model.system_qubits)?;
    let timing = match (cfg.drive.tau_ns, cfg.drive.amplitude_mhz) {
        (Some(tau), None) => GateTiming::Tau(ns_to_s(tau)),
        (None, Some(amp)) => GateTiming::FixedAmplitude(mhz_to_rad_per_s(amp)),
        _ => bail!("drive section needs exactly one of tau_ns or amplitude_mhz"),
    };
    let pulse = match &cfg.pulse {
        None => PulseTiming::Instantaneous,
        Some(p) => {
            if p.width_ns <= 0.0 {
                bail!("pulse width_ns must be positive");
            }
            let width = ns_to_s(p.width_ns);
            let rabi = match p.rabi_mhz {
                Some(nu) => mhz_to_rad_per_s(nu),
                None => PI / width,
            };
            PulseTiming::Square { width, rabi }
        }
    };
    let system_initial = resolve_initial(&cfg.initial.system, model.system_qubits)?;

    let (axis, scale): (SweepAxis, fn(f64) -> f64) = match cfg.sweep.axis.as_str() {
        "gate-duration-ns" => (SweepAxis::GateDuration, ns_to_s),
        "epsilon-mhz" => (SweepAxis::Epsilon, mhz_to_rad_per_s),
        "pulse-width-ns" => (SweepAxis::PulseWidth, ns_to_s),
        other => bail!("unknown sweep axis {other:?}"),
    };
    let points: Vec<f64> = cfg.sweep.points.iter().map(|&p| scale(p)).collect();
    let comparisons: Vec<Sequence> = cfg
        .sweep
        .sequences
        .iter()
        .map(|s| Sequence::parse(s).ok_or_else(|| anyhow!("unknown sequence {s:?}")))
        .collect::<Result<_>>()?;
    if comparisons.is_empty() {
        bail!("sweep needs at least one sequence");
    }

    let base = ExperimentSpec {
        model,
        target,
        sequence: comparisons[0],
        timing,
        pulse,
        system_initial,
    };
    Ok(ResolvedSweep {
        spec: SweepSpec {
            base,
            axis,
            points,
            comparisons,
        },
        axis_label: axis.label().to_string(),
    })
}

fn resolve_model(m: &ModelSection, seed_override: Option<u64>) -> Result<SpinBathModel> {
    if !(m.system_qubits == 1 || m.system_qubits == 2) {
        bail!("system_qubits must be 1 or 2");
    }
    let coupling = match m.coupling.as_str() {
        "heisenberg-dm" => CouplingForm::Isotropic { dm: true },
        "heisenberg" => CouplingForm::Isotropic { dm: false },
        "dephasing" => CouplingForm::Dephasing,
        other => bail!("unknown coupling {other:?}"),
    };
    let seed = seed_override.unwrap_or(m.environment_seed);
    let environment = match m.environment.as_str() {
        "none" => EnvHamiltonian::None,
        "random-field" => EnvHamiltonian::RandomField {
            seed,
            max_strength: mhz_to_rad_per_s(m.environment_max_mhz),
        },
        "random-transverse-field" => EnvHamiltonian::RandomTransverseField {
            seed,
            max_strength: mhz_to_rad_per_s(m.environment_max_mhz),
        },
        other => bail!("unknown environment {other:?}"),
    };
    let bath_state = match m.bath_state.as_str() {
        "all-zero" => BathState::AllZero,
        "maximally-mixed" => BathState::MaximallyMixed,
        other => bail!("unknown bath_state {other:?}"),
    };
    Ok(SpinBathModel {
        system_qubits: m.system_qubits,
        bath_spins: m.bath_spins,
        epsilon: mhz_to_rad_per_s(m.epsilon_mhz),
        coupling,
        environment,
        bath_state,
    })
}

fn resolve_target(t: &TargetSection, system_qubits: usize) -> Result<TargetGate> {
    let target = match t.kind.as_str() {
        "rotation" => TargetGate::Rotation {
            theta: t.theta_rad,
            phi: t.phi_rad,
        },
        "cross-resonance" => TargetGate::CrossResonance { theta: t.theta_rad },
        other => bail!("unknown target kind {other:?}"),
    };
    if target.qubits() != system_qubits {
        bail!(
            "target {:?} drives {} qubit(s) but model.system_qubits = {}",
            t.kind,
            target.qubits(),
            system_qubits
        );
    }
    Ok(target)
}

fn resolve_initial(label: &str, system_qubits: usize) -> Result<QuantumState> {
    let state = match (label, system_qubits) {
        ("plus", 1) => QuantumState::plus(),
        ("zero", 1) => QuantumState::basis(1, 0),
        ("one", 1) => QuantumState::basis(1, 1),
        ("00", 2) => QuantumState::basis(2, 0),
        ("01", 2) => QuantumState::basis(2, 1),
        ("10", 2) => QuantumState::basis(2, 2),
        ("11", 2) => QuantumState::basis(2, 3),
        _ => bail!("initial state {label:?} not valid for {system_qubits} system qubit(s)"),
    };
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "sweep"

[model]
epsilon_mhz = 1.0

[target]
kind = "rotation"
theta_rad = 3.141592653589793
phi_rad = 0.7853981633974483

[drive]
tau_ns = 5.0

[initial]
system = "plus"

[sweep]
axis = "gate-duration-ns"
points = [10.0, 20.0]
sequences = ["none", "pdd"]
"#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = parse_config(MINIMAL).unwrap();
        let resolved = resolve(&cfg, None).unwrap();
        assert_eq!(resolved.spec.points.len(), 2);
        assert!((resolved.spec.points[0] - 1.0e-8).abs() < 1e-20);
        assert!((resolved.spec.base.model.epsilon - 2.0 * PI * 1.0e6).abs() < 1e-6);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("epsilon_mhz = 1.0", "epsilon_mhz = 1.0\nbogus = 3");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn invalid_unit_string_rejected() {
        let text = MINIMAL.replace("epsilon_mhz = 1.0", "epsilon_mhz = \"one\"");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn drive_needs_exactly_one_timing() {
        let cfg = parse_config(&MINIMAL.replace("tau_ns = 5.0", "")).unwrap();
        assert!(resolve(&cfg, None).is_err());
        let cfg =
            parse_config(&MINIMAL.replace("tau_ns = 5.0", "tau_ns = 5.0\namplitude_mhz = 2.0"))
                .unwrap();
        assert!(resolve(&cfg, None).is_err());
    }

    #[test]
    fn unknown_sequence_rejected() {
        let cfg = parse_config(&MINIMAL.replace("\"pdd\"", "\"frobnicate\"")).unwrap();
        assert!(resolve(&cfg, None).is_err());
    }
}
