//! Full experiment assembly and propagation: engineered drive segments plus
//! realized pulse windows with the bath Hamiltonians always on, fidelity
//! against the ideal gate, parameter sweeps, and infidelity scaling fits.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bath::{build_environment, build_interaction, initial_state, SpinBathModel};
use crate::engineer::{engineer, EngineerError, EngineeredPlan, TargetGate};
use crate::operator::{AlgebraError, Operator};
use crate::pauli::{Axis, PauliString};
use crate::schedule::{
    bare_schedule, cdd_schedule, nested_udd_schedule, pdd_schedule, two_qubit_schedule, Schedule,
    ScheduleError, TwoQubitBase,
};
use crate::state::{partial_trace, QuantumState};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Engineer(#[from] EngineerError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("order fit needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("infidelities are at the numerical floor; nothing to fit")]
    FloorReached,
    #[error("sweep points must be non-empty and strictly increasing")]
    BadSweepPoints,
}

/// DD sequence selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sequence {
    None,
    Pdd,
    Cdd { levels: u32 },
    NestedUdd { n: u32 },
    TwoQubit { base: TwoQubitBase, extra_layers: bool },
}

impl Sequence {
    /// System qubits this sequence drives; `None` adapts to the model.
    pub fn system_qubits(&self) -> Option<usize> {
        match self {
            Sequence::None => None,
            Sequence::TwoQubit { .. } => Some(2),
            _ => Some(1),
        }
    }

    pub fn build_schedule(&self, tau: f64, qubits: usize) -> Result<Schedule, ScheduleError> {
        Ok(match *self {
            Sequence::None => bare_schedule(4.0 * tau, qubits),
            Sequence::Pdd => pdd_schedule(tau),
            Sequence::Cdd { levels } => cdd_schedule(tau, levels),
            Sequence::NestedUdd { n } => nested_udd_schedule(tau, n)?,
            Sequence::TwoQubit { base, extra_layers } => {
                two_qubit_schedule(tau, base, extra_layers)?
            }
        })
    }

    pub fn label(&self) -> String {
        match *self {
            Sequence::None => "none".to_string(),
            Sequence::Pdd => "pdd".to_string(),
            Sequence::Cdd { levels } => format!("cdd{levels}"),
            Sequence::NestedUdd { n } => format!("udd{n}"),
            Sequence::TwoQubit { base, extra_layers } => {
                let b = match base {
                    TwoQubitBase::Pdd => "2q-pdd".to_string(),
                    TwoQubitBase::Cdd2 => "2q-cdd2".to_string(),
                    TwoQubitBase::NestedUdd { n } => format!("2q-udd{n}"),
                };
                if extra_layers {
                    format!("{b}+echo")
                } else {
                    b
                }
            }
        }
    }

    pub fn parse(label: &str) -> Option<Sequence> {
        let (body, extra) = match label.strip_suffix("+echo") {
            Some(b) => (b, true),
            None => (label, false),
        };
        let seq = match body {
            "none" => Sequence::None,
            "pdd" => Sequence::Pdd,
            "2q-pdd" => Sequence::TwoQubit {
                base: TwoQubitBase::Pdd,
                extra_layers: extra,
            },
            "2q-cdd2" => Sequence::TwoQubit {
                base: TwoQubitBase::Cdd2,
                extra_layers: extra,
            },
            _ => {
                if let Some(l) = body.strip_prefix("cdd") {
                    let levels: u32 = l.parse().ok()?;
                    if levels < 1 {
                        return None;
                    }
                    Sequence::Cdd { levels }
                } else if let Some(n) = body.strip_prefix("udd") {
                    Sequence::NestedUdd { n: n.parse().ok()? }
                } else {
                    let n = body.strip_prefix("2q-udd")?;
                    Sequence::TwoQubit {
                        base: TwoQubitBase::NestedUdd { n: n.parse().ok()? },
                        extra_layers: extra,
                    }
                }
            }
        };
        // "+echo" only decorates the two-qubit sequences.
        if extra && !matches!(seq, Sequence::TwoQubit { .. }) {
            return None;
        }
        Some(seq)
    }
}

/// DD pulse realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseTiming {
    Instantaneous,
    Square { width: f64, rabi: f64 },
}

impl PulseTiming {
    pub fn width(&self) -> f64 {
        match self {
            PulseTiming::Instantaneous => 0.0,
            PulseTiming::Square { width, .. } => *width,
        }
    }
}

/// Gate timing: either the interval tau directly, or a fixed drive amplitude
/// from which the drive-active time (and hence tau) is derived through the
/// area law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateTiming {
    Tau(f64),
    FixedAmplitude(f64),
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub model: SpinBathModel,
    pub target: TargetGate,
    pub sequence: Sequence,
    pub timing: GateTiming,
    pub pulse: PulseTiming,
    pub system_initial: QuantumState,
}

impl ExperimentSpec {
    fn validate(&self) -> Result<(), EngineError> {
        // Dense propagation tops out around ten qubits.
        if self.model.total_qubits() > 10 {
            return Err(EngineError::InvalidSpec(format!(
                "{} total qubits exceed the supported Hilbert space (2^10)",
                self.model.total_qubits()
            )));
        }
        if self.target.qubits() != self.model.system_qubits {
            return Err(EngineError::InvalidSpec(format!(
                "target drives {} qubit(s) but the model has {}",
                self.target.qubits(),
                self.model.system_qubits
            )));
        }
        if let Some(q) = self.sequence.system_qubits() {
            if q != self.model.system_qubits {
                return Err(EngineError::InvalidSpec(format!(
                    "sequence {} drives {} qubit(s) but the model has {}",
                    self.sequence.label(),
                    q,
                    self.model.system_qubits
                )));
            }
        }
        if !self.system_initial.is_pure() {
            return Err(EngineError::InvalidSpec(
                "the system initial state must be pure".to_string(),
            ));
        }
        if self.system_initial.dim() != 1 << self.model.system_qubits {
            return Err(EngineError::InvalidSpec(
                "system initial state dimension does not match the model".to_string(),
            ));
        }
        Ok(())
    }

    /// Resolve tau, deriving it from the area law when the drive amplitude is
    /// fixed: the nominal duration is the required drive-active time plus the
    /// pulse windows carved out of it.
    pub fn resolve_tau(&self) -> Result<f64, EngineError> {
        match self.timing {
            GateTiming::Tau(tau) => {
                if tau <= 0.0 {
                    return Err(EngineError::InvalidSpec("tau must be positive".to_string()));
                }
                Ok(tau)
            }
            GateTiming::FixedAmplitude(amp) => {
                if amp <= 0.0 {
                    return Err(EngineError::InvalidSpec(
                        "drive amplitude must be positive".to_string(),
                    ));
                }
                // Pulse windows are inserted on top of the drive time, so the
                // nominal duration is the drive-active time itself.
                let active = self.target.theta().abs() / (2.0 * amp);
                if active <= 0.0 {
                    return Err(EngineError::InvalidSpec(
                        "fixed-amplitude timing needs a nonzero rotation angle".to_string(),
                    ));
                }
                Ok(active / 4.0)
            }
        }
    }
}

/// One step of the assembled timeline.
#[derive(Debug, Clone)]
pub enum TimelineStep {
    /// Evolve under `hams[ham]` for `dt`.
    Evolve { ham: usize, dt: f64, label: String },
    /// Apply an exact instantaneous unitary.
    Instant { unitary: Operator, label: String },
}

/// Assembled experiment: deduplicated Hamiltonians plus the ordered steps.
#[derive(Debug, Clone)]
pub struct Timeline {
    pub hams: Vec<Operator>,
    pub steps: Vec<TimelineStep>,
    pub plan: EngineeredPlan,
    pub total_duration: f64,
    pub wall_duration: f64,
}

fn intern(hams: &mut Vec<Operator>, op: Operator) -> usize {
    if let Some(i) = hams.iter().position(|h| *h == op) {
        i
    } else {
        hams.push(op);
        hams.len() - 1
    }
}

/// Square-pulse Hamiltonian realizing the Pauli `op` as simultaneous pi
/// rotations: `(rabi/2) * sum_sites sigma_axis`.
fn pulse_hamiltonian(op: &PauliString, rabi: f64) -> Operator {
    let n = op.qubits();
    let mut h = Operator::zeros(1 << n);
    for (site, &axis) in op.axes().iter().enumerate() {
        if axis != Axis::I {
            h = h.add(&PauliString::single(n, site, axis).matrix());
        }
    }
    h.scale(Complex64::new(rabi / 2.0, 0.0))
}

/// Build the full piecewise-constant timeline for an experiment: per-segment
/// engineered drive and realized pulse windows, with the interaction and
/// environment Hamiltonians always on.
pub fn assemble_timeline(spec: &ExperimentSpec) -> Result<Timeline, EngineError> {
    spec.validate()?;
    let tau = spec.resolve_tau()?;
    let qubits = spec.model.system_qubits;
    let schedule = spec.sequence.build_schedule(tau, qubits)?;
    let schedule = match spec.pulse {
        PulseTiming::Instantaneous => schedule,
        PulseTiming::Square { width, rabi } => schedule.realize_pulses(width, rabi)?,
    };
    let plan = engineer(spec.target, &schedule)?;

    let h_env = build_interaction(&spec.model).add(&build_environment(&spec.model));
    let bath_identity = Operator::identity(1 << spec.model.bath_spins);

    let mut hams = Vec::new();
    let mut steps = Vec::new();

    let push_pulse = |ev: &crate::schedule::PulseEvent,
                      hams: &mut Vec<Operator>,
                      steps: &mut Vec<TimelineStep>| {
        let label = format!("pulse {} layer {}", ev.operator.axes_label(), ev.layer);
        match spec.pulse {
            PulseTiming::Instantaneous => {
                let u = ev.operator.matrix().kron(&bath_identity);
                steps.push(TimelineStep::Instant { unitary: u, label });
            }
            PulseTiming::Square { width, rabi } => {
                let h = pulse_hamiltonian(&ev.operator, rabi)
                    .kron(&bath_identity)
                    .add(&h_env);
                let ham = intern(hams, h);
                steps.push(TimelineStep::Evolve {
                    ham,
                    dt: width,
                    label,
                });
            }
        }
    };

    for i in 0..schedule.segments.len() {
        if let Some(ev) = schedule.event_at_segment_start(i) {
            push_pulse(ev, &mut hams, &mut steps);
        }
        let drive = &plan.segments[i];
        let len = drive.len();
        if len > 0.0 {
            let h = drive.hamiltonian().kron(&bath_identity).add(&h_env);
            let ham = intern(&mut hams, h);
            steps.push(TimelineStep::Evolve {
                ham,
                dt: len,
                label: format!(
                    "drive segment {i} frame {} amp {:.6e} phase/sign {:.6}",
                    schedule.segments[i].frame.axes_label(),
                    drive.amplitude(),
                    drive.phase_or_sign()
                ),
            });
        }
    }
    if let Some(ev) = schedule.trailing_event() {
        push_pulse(&ev.clone(), &mut hams, &mut steps);
    }

    let total_duration = schedule.total_duration;
    let wall_duration = schedule.wall_duration();
    Ok(Timeline {
        hams,
        steps,
        plan,
        total_duration,
        wall_duration,
    })
}

/// Compose the timeline into the full system+bath propagator. Each distinct
/// Hamiltonian is eigendecomposed once.
pub fn propagate_timeline(timeline: &Timeline) -> Result<Operator, EngineError> {
    let dim = timeline
        .hams
        .first()
        .map(|h| h.dim())
        .or_else(|| match timeline.steps.first() {
            Some(TimelineStep::Instant { unitary, .. }) => Some(unitary.dim()),
            _ => None,
        })
        .unwrap_or(1);
    let eigs: Vec<_> = timeline
        .hams
        .iter()
        .map(|h| h.eig_hermitian())
        .collect::<Result<_, _>>()?;
    let mut acc = Operator::identity(dim);
    for step in &timeline.steps {
        let u = match step {
            TimelineStep::Evolve { ham, dt, .. } => eigs[*ham].expm(*dt),
            TimelineStep::Instant { unitary, .. } => unitary.clone(),
        };
        acc = u.mul(&acc);
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    /// `<phi| rho |phi>` against the ideal output state.
    pub fidelity: f64,
    /// Reduced system state after tracing out the bath.
    pub reduced_state: QuantumState,
    /// Full system+bath propagator.
    pub full_propagator: Option<Operator>,
    /// Nominal gate time (4 tau).
    pub total_duration: f64,
    /// Wall-clock time including all inserted pulse windows.
    pub wall_duration: f64,
    pub unitarity_defect: f64,
    pub diagnostics: Vec<String>,
}

impl SimulationResult {
    pub fn to_json(&self) -> serde_json::Value {
        let rho = self.reduced_state.to_density();
        let rho_json: Vec<Vec<[f64; 2]>> = (0..rho.nrows())
            .map(|r| (0..rho.ncols()).map(|c| [rho[(r, c)].re, rho[(r, c)].im]).collect())
            .collect();
        serde_json::json!({
            "fidelity": self.fidelity,
            "total_duration_s": self.total_duration,
            "wall_duration_s": self.wall_duration,
            "unitarity_defect": self.unitarity_defect,
            "reduced_density_matrix": rho_json,
            "diagnostics": self.diagnostics,
        })
    }
}

/// Run one experiment end to end.
pub fn run(spec: &ExperimentSpec) -> Result<SimulationResult, EngineError> {
    let timeline = assemble_timeline(spec)?;
    let u = propagate_timeline(&timeline)?;
    let defect = u.unitarity_defect();

    let full_initial = initial_state(&spec.model, &spec.system_initial)?;
    let full_final = full_initial.evolve(&u)?;
    let rho = partial_trace(&full_final, spec.model.system_qubits)?;

    let QuantumState::Pure(psi_sys) = &spec.system_initial else {
        unreachable!("validated pure");
    };
    let phi = spec.target.unitary().matrix() * psi_sys;
    let mut fidelity = rho.overlap_with_pure(&phi);
    if fidelity < 0.0 && fidelity > -1.0e-9 {
        fidelity = 0.0;
    }
    assert!(
        (0.0..=1.0 + 1.0e-9).contains(&fidelity),
        "fidelity {fidelity} out of bounds"
    );

    let mut diagnostics: Vec<String> = timeline
        .steps
        .iter()
        .map(|s| match s {
            TimelineStep::Evolve { dt, label, .. } => format!("{label} for {dt:e}s"),
            TimelineStep::Instant { label, .. } => format!("{label} (instantaneous)"),
        })
        .collect();
    diagnostics.push(format!("unitarity defect {defect:.3e}"));

    Ok(SimulationResult {
        fidelity,
        reduced_state: rho,
        full_propagator: Some(u),
        total_duration: timeline.total_duration,
        wall_duration: timeline.wall_duration,
        unitarity_defect: defect,
        diagnostics,
    })
}

/// Sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Total gate duration 4 tau, seconds.
    GateDuration,
    /// System-environment coupling strength, rad/s.
    Epsilon,
    /// DD pulse width, seconds (the pulse stays a pi rotation).
    PulseWidth,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::GateDuration => "gate_duration_s",
            SweepAxis::Epsilon => "epsilon_rad_s",
            SweepAxis::PulseWidth => "pulse_width_s",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ExperimentSpec,
    pub axis: SweepAxis,
    pub points: Vec<f64>,
    pub comparisons: Vec<Sequence>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub sequence: String,
    pub fidelity: Option<f64>,
    pub wall_duration_s: Option<f64>,
    pub status: String,
}

/// Run every (point, sequence) pair; failures become rows, not aborts.
/// Points are evaluated in parallel but merged in axis order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, EngineError> {
    if spec.points.is_empty() || spec.points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EngineError::BadSweepPoints);
    }
    let jobs: Vec<(f64, Sequence)> = spec
        .points
        .iter()
        .flat_map(|&p| spec.comparisons.iter().map(move |&s| (p, s)))
        .collect();

    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(point, sequence)| {
            let mut exp = spec.base.clone();
            exp.sequence = sequence;
            match spec.axis {
                SweepAxis::GateDuration => exp.timing = GateTiming::Tau(point / 4.0),
                SweepAxis::Epsilon => exp.model.epsilon = point,
                SweepAxis::PulseWidth => {
                    if point < 0.0 {
                        return SweepRow {
                            axis_value: point,
                            sequence: sequence.label(),
                            fidelity: None,
                            wall_duration_s: None,
                            status: "pulse width must be non-negative".to_string(),
                        };
                    }
                    exp.pulse = if point == 0.0 {
                        PulseTiming::Instantaneous
                    } else {
                        PulseTiming::Square {
                            width: point,
                            rabi: PI / point,
                        }
                    }
                }
            }
            match run(&exp) {
                Ok(res) => {
                    // Infidelities below the numerical floor are flagged;
                    // such rows must not enter order fits.
                    let (fidelity, status) = if 1.0 - res.fidelity < 1.0e-12 {
                        (1.0, "floor".to_string())
                    } else {
                        (res.fidelity, "ok".to_string())
                    };
                    SweepRow {
                        axis_value: point,
                        sequence: sequence.label(),
                        fidelity: Some(fidelity),
                        wall_duration_s: Some(res.wall_duration),
                        status,
                    }
                }
                Err(e) => SweepRow {
                    axis_value: point,
                    sequence: sequence.label(),
                    fidelity: None,
                    wall_duration_s: None,
                    status: e.to_string().replace([',', '\n'], ";"),
                },
            }
        })
        .collect();
    Ok(rows)
}

/// Emit the sweep table as CSV, with optional `# key: value` provenance lines.
pub fn write_sweep_csv<W: Write>(
    rows: &[SweepRow],
    provenance: &[(String, String)],
    mut w: W,
) -> std::io::Result<()> {
    for (k, v) in provenance {
        writeln!(w, "# {k}: {v}")?;
    }
    writeln!(w, "axis,sequence,fidelity,wall_duration_s,status")?;
    for r in rows {
        let f = r.fidelity.map(|v| format!("{v:.12e}")).unwrap_or_default();
        let d = r
            .wall_duration_s
            .map(|v| format!("{v:.12e}"))
            .unwrap_or_default();
        writeln!(w, "{:e},{},{},{},{}", r.axis_value, r.sequence, f, d, r.status)?;
    }
    Ok(())
}

/// Least-squares slope of `log(1-F)` against `log(tau)`.
///
/// Callers should already have dropped points at the numerical floor
/// (infidelity below 1e-12 is reported as floor-flagged by sweeps).
pub fn order_fit(points: &[(f64, f64)]) -> Result<f64, EngineError> {
    if points.len() < 4 {
        return Err(EngineError::TooFewPoints(points.len()));
    }
    if points.iter().any(|&(_, infid)| infid <= 1.0e-13) {
        return Err(EngineError::FloorReached);
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(tau, infid)| (tau.ln(), infid.ln()))
        .collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathState, CouplingForm, EnvHamiltonian};
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn quiet_model(system_qubits: usize, bath_spins: usize, epsilon: f64) -> SpinBathModel {
        SpinBathModel {
            system_qubits,
            bath_spins,
            epsilon,
            coupling: CouplingForm::Isotropic { dm: true },
            environment: EnvHamiltonian::None,
            bath_state: BathState::AllZero,
        }
    }

    fn one_qubit_spec(sequence: Sequence, epsilon: f64, tau: f64) -> ExperimentSpec {
        ExperimentSpec {
            model: quiet_model(1, 1, epsilon),
            target: TargetGate::Rotation {
                theta: PI,
                phi: PI / 4.0,
            },
            sequence,
            timing: GateTiming::Tau(tau),
            pulse: PulseTiming::Instantaneous,
            system_initial: QuantumState::plus(),
        }
    }

    #[test]
    fn bare_timeline_is_single_segment() {
        let spec = one_qubit_spec(Sequence::None, 0.0, 1.0e-8);
        let t = assemble_timeline(&spec).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.hams.len(), 1);
    }

    #[test]
    fn pdd_timeline_interleaves_drive_and_pulses() {
        let spec = one_qubit_spec(Sequence::Pdd, 0.0, 1.0e-8);
        let t = assemble_timeline(&spec).unwrap();
        let evolves = t
            .steps
            .iter()
            .filter(|s| matches!(s, TimelineStep::Evolve { .. }))
            .count();
        let instants = t
            .steps
            .iter()
            .filter(|s| matches!(s, TimelineStep::Instant { .. }))
            .count();
        assert_eq!(evolves, 4);
        assert_eq!(instants, 4);
    }

    #[test]
    fn noise_free_runs_hit_the_target() {
        for seq in [
            Sequence::Pdd,
            Sequence::Cdd { levels: 2 },
            Sequence::NestedUdd { n: 2 },
        ] {
            let spec = one_qubit_spec(seq, 0.0, 1.0e-8);
            let res = run(&spec).unwrap();
            assert!(
                (res.fidelity - 1.0).abs() < 1e-9,
                "{}: F = {}",
                seq.label(),
                res.fidelity
            );
            assert!(res.unitarity_defect < 1e-8);
        }

        // The echoed two-qubit nested UDD is the deepest nesting on offer.
        let spec = ExperimentSpec {
            model: quiet_model(2, 1, 0.0),
            target: TargetGate::CrossResonance { theta: -PI / 2.0 },
            sequence: Sequence::TwoQubit {
                base: TwoQubitBase::NestedUdd { n: 2 },
                extra_layers: true,
            },
            timing: GateTiming::Tau(1.0e-8),
            pulse: PulseTiming::Instantaneous,
            system_initial: QuantumState::basis(2, 3),
        };
        let res = run(&spec).unwrap();
        assert!((res.fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_amplitude_resolves_area_law() {
        let j = 2.0 * PI * 5.0e6;
        let spec = ExperimentSpec {
            model: quiet_model(2, 1, 0.0),
            target: TargetGate::CrossResonance { theta: -PI / 2.0 },
            sequence: Sequence::TwoQubit {
                base: TwoQubitBase::Pdd,
                extra_layers: false,
            },
            timing: GateTiming::FixedAmplitude(j),
            pulse: PulseTiming::Square {
                width: 2.5e-9,
                rabi: PI / 2.5e-9,
            },
            system_initial: QuantumState::basis(2, 3),
        };
        let tau = spec.resolve_tau().unwrap();
        // drive time = (pi/4)/J = 25 ns; the 4 pulse windows extend the wall
        // clock to 35 ns.
        assert!((4.0 * tau - 25.0e-9).abs() < 1e-15);

        let timeline = assemble_timeline(&spec).unwrap();
        let amp = timeline.plan.segments[0].amplitude();
        assert!((amp - j).abs() / j < 1e-12);
        assert!((timeline.wall_duration - 35.0e-9).abs() < 1e-15);

        let res = run(&spec).unwrap();
        assert!((res.fidelity - 1.0).abs() < 1e-9);
    }

    /// Taylor-series matrix exponential with scaling and squaring; shares no
    /// code with the eigendecomposition route.
    fn taylor_expm(h: &Operator, t: f64) -> Operator {
        let mut scaled = h.scale(Complex64::new(0.0, -t));
        let mut squarings = 0u32;
        while scaled.max_norm() > 0.25 {
            scaled = scaled.scale(Complex64::new(0.5, 0.0));
            squarings += 1;
        }
        let mut term = Operator::identity(h.dim());
        let mut acc = Operator::identity(h.dim());
        for k in 1..=16 {
            term = term.mul(&scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
            acc = acc.add(&term);
        }
        for _ in 0..squarings {
            acc = acc.mul(&acc);
        }
        acc
    }

    #[test]
    fn run_against_fine_step_oracle_small() {
        let spec = ExperimentSpec {
            model: quiet_model(1, 1, 2.0 * PI * 1.0e6),
            target: TargetGate::Rotation {
                theta: PI,
                phi: PI / 4.0,
            },
            sequence: Sequence::Pdd,
            timing: GateTiming::Tau(2.5e-9),
            pulse: PulseTiming::Instantaneous,
            system_initial: QuantumState::plus(),
        };
        let res = run(&spec).unwrap();

        // Re-propagate the timeline with an independent fine stepper.
        let timeline = assemble_timeline(&spec).unwrap();
        let total: f64 = timeline
            .steps
            .iter()
            .map(|s| match s {
                TimelineStep::Evolve { dt, .. } => *dt,
                _ => 0.0,
            })
            .sum();
        let mut u = Operator::identity(4);
        for step in &timeline.steps {
            match step {
                TimelineStep::Instant { unitary, .. } => u = unitary.mul(&u),
                TimelineStep::Evolve { ham, dt, .. } => {
                    let n = ((dt / total) * 10_000.0).ceil().max(1.0) as usize;
                    let piece = taylor_expm(&timeline.hams[*ham], dt / n as f64);
                    for _ in 0..n {
                        u = piece.mul(&u);
                    }
                }
            }
        }
        let psi0 = initial_state(&spec.model, &spec.system_initial).unwrap();
        let rho = partial_trace(&psi0.evolve(&u).unwrap(), 1).unwrap();
        let QuantumState::Pure(psi_sys) = &spec.system_initial else {
            unreachable!()
        };
        let phi = spec.target.unitary().matrix() * psi_sys;
        let oracle = rho.overlap_with_pure(&phi);
        assert!(
            (res.fidelity - oracle).abs() < 1e-8,
            "{} vs {}",
            res.fidelity,
            oracle
        );
    }

    #[test]
    fn sweep_epsilon_zero_gives_unit_fidelity() {
        let spec = SweepSpec {
            base: one_qubit_spec(Sequence::Pdd, 0.0, 1.0e-8),
            axis: SweepAxis::Epsilon,
            points: vec![0.0],
            comparisons: vec![Sequence::None, Sequence::Pdd, Sequence::Cdd { levels: 2 }],
        };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!((r.fidelity.unwrap() - 1.0).abs() < 1e-9, "{}", r.sequence);
        }
    }

    #[test]
    fn sweep_records_failures_as_rows() {
        let spec = SweepSpec {
            base: one_qubit_spec(Sequence::Pdd, 0.0, 1.0e-9),
            axis: SweepAxis::GateDuration,
            points: vec![4.0e-9, 4.0e-8],
            comparisons: vec![Sequence::Pdd, Sequence::NestedUdd { n: 3 }],
        };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].fidelity.is_some());
        assert!(rows[1].fidelity.is_none());
        assert!(rows[1].status.contains("even"));
        assert_eq!(rows[1].sequence, "udd3");
    }

    #[test]
    fn sweep_rejects_unsorted_points() {
        let spec = SweepSpec {
            base: one_qubit_spec(Sequence::Pdd, 0.0, 1.0e-8),
            axis: SweepAxis::Epsilon,
            points: vec![2.0, 1.0],
            comparisons: vec![Sequence::Pdd],
        };
        assert!(matches!(sweep(&spec), Err(EngineError::BadSweepPoints)));
    }

    #[test]
    fn order_fit_synthetic() {
        let taus: [f64; 5] = [0.0125, 0.025, 0.05, 0.1, 0.2];
        let pts: Vec<(f64, f64)> = taus.iter().map(|&t| (t, 3.0 * t.powi(4))).collect();
        let slope = order_fit(&pts).unwrap();
        assert!((slope - 4.0).abs() < 1e-6);

        // 1% multiplicative noise moves the slope by well under 0.1.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noisy: Vec<(f64, f64)> = taus
            .iter()
            .map(|&t| (t, 3.0 * t.powi(4) * (1.0 + rng.gen_range(-0.01..0.01))))
            .collect();
        let slope = order_fit(&noisy).unwrap();
        assert!((slope - 4.0).abs() < 0.1);

        let flat: Vec<(f64, f64)> = taus.iter().map(|&t| (t, 0.25)).collect();
        assert!(order_fit(&flat).unwrap().abs() < 1e-9);

        assert!(matches!(
            order_fit(&pts[..3]),
            Err(EngineError::TooFewPoints(3))
        ));
        let floored: Vec<(f64, f64)> = taus.iter().map(|&t| (t, 1.0e-15)).collect();
        assert!(matches!(order_fit(&floored), Err(EngineError::FloorReached)));
    }

    #[test]
    fn memory_protection_under_pure_dephasing() {
        // With the drive off the engine is plain memory DD. Under a pure
        // dephasing coupling with nontrivial bath dynamics, raising the
        // nested-UDD order raises the suppression order for |+>. (PDD is not
        // a useful baseline here: its +,-,-,+ dephasing sign pattern is the
        // same function of time as the n=2 outer UDD pattern, so the two
        // evolutions coincide.)
        let model = SpinBathModel {
            coupling: CouplingForm::Dephasing,
            environment: EnvHamiltonian::RandomTransverseField {
                seed: 11,
                max_strength: 2.0 * PI * 1.0e6,
            },
            ..quiet_model(1, 2, 2.0 * PI * 1.0e6)
        };
        let slope_for = |seq: Sequence| {
            let mut pts = Vec::new();
            for k in 0..8 {
                let tau = 4.0e-9 * (10.0f64).powf(k as f64 / 7.0);
                let spec = ExperimentSpec {
                    model: model.clone(),
                    target: TargetGate::Rotation {
                        theta: 0.0,
                        phi: 0.0,
                    },
                    sequence: seq,
                    timing: GateTiming::Tau(tau),
                    pulse: PulseTiming::Instantaneous,
                    system_initial: QuantumState::plus(),
                };
                let res = run(&spec).unwrap();
                let infid = 1.0 - res.fidelity;
                // Keep points clear of both the numerical floor and
                // saturation.
                if infid > 1.0e-12 && infid < 0.3 {
                    pts.push((tau, infid));
                }
            }
            order_fit(&pts).unwrap()
        };
        let udd2 = slope_for(Sequence::NestedUdd { n: 2 });
        let udd4 = slope_for(Sequence::NestedUdd { n: 4 });
        assert!(
            udd4 > udd2 + 1.5,
            "udd4 slope {udd4} should exceed udd2 slope {udd2}"
        );
    }

    #[test]
    fn mixed_bath_equals_average_over_basis_states() {
        // I/2 bath = equal mixture of |0> and |1>: by linearity the mixed-
        // state fidelity is the average of the two pure-bath runs.
        use crate::bath::BathState;
        let base = one_qubit_spec(Sequence::Pdd, 2.0 * PI * 1.0e6, 6.0e-9);

        let with_bath = |bath_state: BathState| {
            let mut spec = base.clone();
            spec.model.bath_state = bath_state;
            run(&spec).unwrap().fidelity
        };
        let f_mixed = with_bath(BathState::MaximallyMixed);
        let f0 = with_bath(BathState::AllZero);
        let f1 = with_bath(BathState::PerSpin(vec![[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]]));
        assert!((f_mixed - 0.5 * (f0 + f1)).abs() < 1e-12);
    }

    #[test]
    fn result_json_bundle() {
        let spec = one_qubit_spec(Sequence::Pdd, 2.0 * PI * 1.0e6, 5.0e-9);
        let res = run(&spec).unwrap();
        let doc = res.to_json();
        assert!(doc["fidelity"].as_f64().unwrap() <= 1.0 + 1e-9);
        assert_eq!(doc["reduced_density_matrix"].as_array().unwrap().len(), 2);
        assert!(doc["diagnostics"].as_array().unwrap().len() >= 8);
        assert!(doc["wall_duration_s"].as_f64().unwrap() >= doc["total_duration_s"].as_f64().unwrap());
    }

    #[test]
    fn sweep_flags_floor_rows() {
        let spec = SweepSpec {
            base: one_qubit_spec(Sequence::Pdd, 0.0, 1.0e-8),
            axis: SweepAxis::Epsilon,
            points: vec![0.0, 2.0 * PI * 1.0e6],
            comparisons: vec![Sequence::Pdd],
        };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows[0].status, "floor");
        assert_eq!(rows[0].fidelity, Some(1.0));
        assert_eq!(rows[1].status, "ok");
    }

    #[test]
    fn sequence_labels_round_trip() {
        let seqs = [
            Sequence::None,
            Sequence::Pdd,
            Sequence::Cdd { levels: 3 },
            Sequence::NestedUdd { n: 4 },
            Sequence::TwoQubit {
                base: TwoQubitBase::Cdd2,
                extra_layers: true,
            },
            Sequence::TwoQubit {
                base: TwoQubitBase::NestedUdd { n: 2 },
                extra_layers: false,
            },
        ];
        for s in seqs {
            assert_eq!(Sequence::parse(&s.label()), Some(s), "{}", s.label());
        }
        assert_eq!(Sequence::parse("pdd+echo"), None);
        assert_eq!(Sequence::parse("frobnicate"), None);
        assert_eq!(Sequence::parse("cdd0"), None);
    }

    #[test]
    fn oversized_bath_rejected() {
        let spec = one_qubit_spec(Sequence::Pdd, 0.0, 1.0e-8);
        let spec = ExperimentSpec {
            model: quiet_model(1, 12, 0.0),
            ..spec
        };
        assert!(matches!(run(&spec), Err(EngineError::InvalidSpec(_))));
    }

    #[test]
    fn negative_pulse_width_points_become_error_rows() {
        let spec = SweepSpec {
            base: one_qubit_spec(Sequence::Pdd, 0.0, 1.0e-8),
            axis: SweepAxis::PulseWidth,
            points: vec![-1.0e-9, 0.0, 1.0e-10],
            comparisons: vec![Sequence::Pdd],
        };
        let rows = sweep(&spec).unwrap();
        assert!(rows[0].fidelity.is_none());
        assert!(rows[1].fidelity.is_some());
        assert!(rows[2].fidelity.is_some());
    }
}
