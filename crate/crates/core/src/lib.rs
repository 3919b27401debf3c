//! Higher-order dynamical-decoupling protection of quantum gates.
//!
//! The crate builds DD pulse schedules (PDD, concatenated DD, nested UDD, and
//! their two-qubit variants), engineers the gate drive per toggling-frame
//! segment so the DD sequence and the gate coexist, simulates the protected
//! evolution of one or two qubits coupled to a small spin bath, and generates
//! and verifies the engineered circuit constructions used for first- and
//! second-order protection of CNOT stacks.
//!
//! Layers, bottom up:
//! - [`pauli`], [`operator`], [`state`]: dense complex-operator algebra.
//! - [`schedule`]: DD sequences as frame segments plus pulse events.
//! - [`mod@engineer`]: per-segment drive parameters with the frame-equality
//!   guarantee.
//! - [`bath`]: the spin-bath environment.
//! - [`engine`]: timeline assembly, propagation, fidelity, sweeps.
//! - [`circuit`], [`qasm`]: discrete engineered circuits, noisy shot
//!   sampling, and OpenQASM export.

pub mod bath;
pub mod circuit;
pub mod engine;
pub mod engineer;
pub mod operator;
pub mod pauli;
pub mod qasm;
pub mod schedule;
pub mod state;

pub use bath::{BathState, CouplingForm, EnvHamiltonian, SpinBathModel};
pub use circuit::{
    build_first_order_circuit, build_second_order_circuit, simulate_noisy, verify_circuit_identity,
    Circuit, CircuitError, Gate, GateKind, GateTag, NoiseModel, NoisyRun,
};
pub use engine::{
    assemble_timeline, order_fit, propagate_timeline, run, sweep, write_sweep_csv, EngineError,
    ExperimentSpec, GateTiming, PulseTiming, Sequence, SimulationResult, SweepAxis, SweepRow,
    SweepSpec, Timeline, TimelineStep,
};
pub use engineer::{
    engineer, phase_for_frame, pulse_rabi_for_width, verify_plan, DriveKind, DriveSegment,
    EngineerError, EngineeredPlan, PlanReport, TargetGate,
};
pub use operator::{propagate, AlgebraError, Operator};
pub use pauli::{Axis, PauliString, Phase};
pub use qasm::{export_circuit, parse_circuit};
pub use schedule::{
    bare_schedule, cdd_schedule, nested_udd_schedule, pdd_schedule, two_qubit_schedule, udd_times,
    FrameSegment, PulseEvent, Schedule, ScheduleError, TwoQubitBase,
};
pub use state::{partial_trace, QuantumState};
