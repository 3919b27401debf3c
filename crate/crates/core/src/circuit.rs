//! Discrete-circuit constructions: engineered gates U1-U4, the first- and
//! second-order DD-protected CNOT stacks, crosstalk CZ insertion, and a
//! Monte-Carlo trajectory simulator with gate-located depolarizing noise and
//! readout flips.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rayon::prelude::*;
use thiserror::Error;

use crate::operator::{CMat, Operator};
use crate::pauli::{Axis, PauliString};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("gates per block must be a positive multiple of 4, got {0}")]
    NotDivisible(usize),
    #[error("gate {0} cannot be exported")]
    UnsupportedGate(String),
    #[error("circuit text is malformed: {0}")]
    Parse(String),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Gate vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Rz(f64),
    Cnot,
    Cz,
    Ecr,
    U1,
    U2,
    U3,
    U4,
    Custom { name: String, matrix: Operator },
}

impl GateKind {
    pub fn qubit_count(&self) -> usize {
        match self {
            GateKind::X | GateKind::Y | GateKind::Z | GateKind::H | GateKind::Rz(_) => 1,
            GateKind::Custom { matrix, .. } => matrix.dim().trailing_zeros() as usize,
            _ => 2,
        }
    }

    pub fn name(&self) -> String {
        match self {
            GateKind::X => "x".into(),
            GateKind::Y => "y".into(),
            GateKind::Z => "z".into(),
            GateKind::H => "h".into(),
            GateKind::Rz(l) => format!("rz({l})"),
            GateKind::Cnot => "cx".into(),
            GateKind::Cz => "cz".into(),
            GateKind::Ecr => "ecr".into(),
            GateKind::U1 => "u1".into(),
            GateKind::U2 => "u2".into(),
            GateKind::U3 => "u3".into(),
            GateKind::U4 => "u4".into(),
            GateKind::Custom { name, .. } => name.clone(),
        }
    }

    /// Matrix on the gate's own qubits; target 0 is the leftmost factor.
    pub fn matrix(&self) -> Operator {
        match self {
            GateKind::X => PauliString::single(1, 0, Axis::X).matrix(),
            GateKind::Y => PauliString::single(1, 0, Axis::Y).matrix(),
            GateKind::Z => PauliString::single(1, 0, Axis::Z).matrix(),
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Operator::from_row_slice(2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
            }
            GateKind::Rz(lambda) => {
                let half = lambda / 2.0;
                Operator::from_row_slice(
                    2,
                    &[
                        Complex64::from_polar(1.0, -half),
                        c(0.0, 0.0),
                        c(0.0, 0.0),
                        Complex64::from_polar(1.0, half),
                    ],
                )
            }
            GateKind::Cnot => cnot(),
            GateKind::Cz => Operator::from_row_slice(
                4,
                &[
                    c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                    c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                    c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
                    c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0),
                ],
            ),
            GateKind::Ecr => ecr(),
            GateKind::U1 => engineered_gate(Axis::I),
            GateKind::U2 => engineered_gate(Axis::X),
            GateKind::U3 => engineered_gate(Axis::Y),
            GateKind::U4 => engineered_gate(Axis::Z),
            GateKind::Custom { matrix, .. } => matrix.clone(),
        }
    }
}

pub fn cnot() -> Operator {
    Operator::from_row_slice(
        4,
        &[
            c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
        ],
    )
}

/// Echoed cross-resonance gate.
pub fn ecr() -> Operator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Operator::from_row_slice(
        4,
        &[
            c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0), c(0.0, s),
            c(s, 0.0), c(0.0, 0.0), c(0.0, -s), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, s), c(0.0, 0.0), c(s, 0.0),
            c(0.0, -s), c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0),
        ],
    )
}

/// `U_{k+1} = (sigma_k (x) sigma_k) CNOT (sigma_k (x) sigma_k)`: the CNOT
/// deformed so that the DD frame sigma_k restores it.
fn engineered_gate(axis: Axis) -> Operator {
    let s = PauliString::from_axes(vec![axis, axis]).matrix();
    s.mul(&cnot()).mul(&s)
}

/// Why a gate is in the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateTag {
    /// Part of the computational payload, with its 1-based block index.
    Block(usize),
    /// DD pulse, with its layer (0 = inner).
    DdPulse(u32),
    /// Deliberate crosstalk CZ.
    Crosstalk,
    Untagged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub tag: GateTag,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, tag: GateTag) -> Gate {
        assert_eq!(kind.qubit_count(), targets.len());
        Gate { kind, targets, tag }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Circuit {
        Circuit {
            qubits,
            gates: Vec::new(),
        }
    }

    fn push(&mut self, kind: GateKind, targets: Vec<usize>, tag: GateTag) {
        for &t in &targets {
            assert!(t < self.qubits, "gate target out of range");
        }
        self.gates.push(Gate::new(kind, targets, tag));
    }

    /// Embed a gate matrix into the full register.
    fn embed(&self, gate: &Gate) -> Operator {
        let dim = 1usize << self.qubits;
        let m = gate.kind.matrix();
        let k = gate.targets.len();
        let dg = 1usize << k;
        let mut out = CMat::zeros(dim, dim);
        // Qubit 0 is the most significant bit of the basis index.
        let bit_of = |index: usize, qubit: usize| (index >> (self.qubits - 1 - qubit)) & 1;
        for col in 0..dim {
            let mut gcol = 0usize;
            for &q in &gate.targets {
                gcol = (gcol << 1) | bit_of(col, q);
            }
            for grow in 0..dg {
                let v = m.matrix()[(grow, gcol)];
                if v == c(0.0, 0.0) {
                    continue;
                }
                let mut row = col;
                for (i, &q) in gate.targets.iter().enumerate() {
                    let b = (grow >> (k - 1 - i)) & 1;
                    let shift = self.qubits - 1 - q;
                    row = (row & !(1 << shift)) | (b << shift);
                }
                out[(row, col)] += v;
            }
        }
        Operator::from_matrix(out)
    }

    /// Noise-free composed unitary of the whole circuit.
    pub fn unitary(&self) -> Operator {
        let dim = 1usize << self.qubits;
        let mut acc = Operator::identity(dim);
        for gate in &self.gates {
            acc = self.embed(gate).mul(&acc);
        }
        acc
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.targets.len() == 2).count()
    }

    /// The bare reference: engineered gates replaced by CNOT, DD pulses
    /// removed, crosstalk CZs kept in place.
    pub fn bare_reference(&self) -> Circuit {
        let mut out = Circuit::new(self.qubits);
        for g in &self.gates {
            match g.tag {
                GateTag::DdPulse(_) => {}
                _ => {
                    let kind = match g.kind {
                        GateKind::U1 | GateKind::U2 | GateKind::U3 | GateKind::U4 => GateKind::Cnot,
                        ref k => k.clone(),
                    };
                    out.push(kind, g.targets.clone(), g.tag);
                }
            }
        }
        out
    }
}

fn engineered_kind_for_frame(frame: Axis) -> GateKind {
    match frame {
        Axis::I => GateKind::U1,
        Axis::X => GateKind::U2,
        Axis::Y => GateKind::U3,
        Axis::Z => GateKind::U4,
    }
}

/// PDD pulse axis applied after the j-th block (or subblock), 1-based:
/// X, Z, X, Z.
fn pdd_pulse_axis(j: usize) -> Axis {
    if j % 2 == 1 {
        Axis::X
    } else {
        Axis::Z
    }
}

/// First-order protected stack: four blocks of `m` two-qubit gates with PDD
/// pulses on both qubits between blocks. Odd `m` engineers each block's
/// leading gate; even `m` needs no engineering.
pub fn build_first_order_circuit(m: usize) -> Circuit {
    assert!(m >= 1);
    let mut circuit = Circuit::new(2);
    let mut frame = PauliString::identity(1);
    for block in 1..=4 {
        for g in 0..m {
            let kind = if m % 2 == 1 && g == 0 {
                engineered_kind_for_frame(frame.axes()[0])
            } else {
                GateKind::Cnot
            };
            circuit.push(kind, vec![0, 1], GateTag::Block(block));
        }
        let axis = pdd_pulse_axis(block);
        let kind = match axis {
            Axis::X => GateKind::X,
            _ => GateKind::Z,
        };
        circuit.push(kind.clone(), vec![0], GateTag::DdPulse(0));
        circuit.push(kind, vec![1], GateTag::DdPulse(0));
        frame = PauliString::single(1, 0, axis).mul(&frame).strip_phase();
    }
    circuit
}

/// Second-order protected stack: four blocks of four subblocks, CDD pulses
/// between subblocks (inner layer) and blocks (outer layer). `m` gates per
/// block, divisible by 4. With `crosstalk`, two surrounding qubits receive a
/// CZ from each data qubit after every four two-qubit gates.
pub fn build_second_order_circuit(m: usize, crosstalk: bool) -> Result<Circuit, CircuitError> {
    if m == 0 || !m.is_multiple_of(4) {
        return Err(CircuitError::NotDivisible(m));
    }
    let per_subblock = m / 4;
    let mut circuit = Circuit::new(if crosstalk { 4 } else { 2 });
    let mut frame = PauliString::identity(1);
    let mut payload_count = 0usize;

    let push_pulse_pair = |circuit: &mut Circuit, frame: &mut PauliString, axis: Axis, layer: u32| {
        let kind = match axis {
            Axis::X => GateKind::X,
            _ => GateKind::Z,
        };
        circuit.push(kind.clone(), vec![0], GateTag::DdPulse(layer));
        circuit.push(kind, vec![1], GateTag::DdPulse(layer));
        *frame = PauliString::single(1, 0, axis).mul(frame).strip_phase();
    };

    for block in 1..=4 {
        for subblock in 1..=4 {
            for g in 0..per_subblock {
                let kind = if per_subblock % 2 == 1 && g == 0 {
                    engineered_kind_for_frame(frame.axes()[0])
                } else {
                    GateKind::Cnot
                };
                circuit.push(kind, vec![0, 1], GateTag::Block(block));
                payload_count += 1;
                if crosstalk && payload_count.is_multiple_of(4) {
                    circuit.push(GateKind::Cz, vec![0, 2], GateTag::Crosstalk);
                    circuit.push(GateKind::Cz, vec![1, 3], GateTag::Crosstalk);
                }
            }
            if subblock < 4 {
                push_pulse_pair(&mut circuit, &mut frame, pdd_pulse_axis(subblock), 0);
            }
        }
        // Inner cycle closes with its trailing Z, then the outer pulse.
        push_pulse_pair(&mut circuit, &mut frame, Axis::Z, 0);
        push_pulse_pair(&mut circuit, &mut frame, pdd_pulse_axis(block), 1);
    }
    Ok(circuit)
}

/// Global-phase-insensitive distance between the circuit and its bare
/// reference stack.
pub fn verify_circuit_identity(circuit: &Circuit) -> f64 {
    circuit
        .unitary()
        .distance_up_to_phase(&circuit.bare_reference().unitary())
}

/// Gate-located depolarizing noise plus readout flips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub two_qubit_depolarizing: f64,
    pub one_qubit_depolarizing: f64,
    pub readout_flip: f64,
    /// Inject crosstalk CZs (themselves noisy two-qubit gates) after every
    /// `cz_every` payload two-qubit gates.
    pub crosstalk_cz_every: Option<usize>,
}

impl NoiseModel {
    /// Documented defaults; the rates are configuration inputs, not
    /// measured device values.
    pub fn documented_default() -> NoiseModel {
        NoiseModel {
            two_qubit_depolarizing: 7.0e-3,
            one_qubit_depolarizing: 3.0e-4,
            readout_flip: 1.0e-2,
            crosstalk_cz_every: None,
        }
    }

    pub fn noiseless() -> NoiseModel {
        NoiseModel {
            two_qubit_depolarizing: 0.0,
            one_qubit_depolarizing: 0.0,
            readout_flip: 0.0,
            crosstalk_cz_every: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoisyRun {
    pub shots: u64,
    /// Outcome counts keyed by bitstring, qubit 0 leftmost.
    pub counts: BTreeMap<String, u64>,
    /// Main-text estimator: success probability of the all-zero data outcome.
    pub fidelity_probability: f64,
    /// Appendix estimator: |<00|psi>| ~ sqrt of the probability form.
    pub fidelity_amplitude: f64,
}

impl NoisyRun {
    pub fn counts_json(&self) -> serde_json::Value {
        serde_json::json!(self.counts)
    }

    /// Standard error of the probability estimator.
    pub fn probability_std_err(&self) -> f64 {
        let p = self.fidelity_probability;
        (p * (1.0 - p) / self.shots as f64).sqrt()
    }

    /// Standard error of the amplitude estimator (delta method).
    pub fn amplitude_std_err(&self) -> f64 {
        let p = self.fidelity_probability.max(1.0 / (4.0 * self.shots as f64));
        self.probability_std_err() / (2.0 * p.sqrt())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-shot seed stream derived from the master seed.
fn shot_seed(master: u64, shot: u64) -> u64 {
    splitmix64(master ^ shot.wrapping_mul(0xA24BAED4963EE407))
}

struct ShotKernel {
    qubits: usize,
    /// (matrix entries row-major, targets, is_payload_two_qubit)
    ops: Vec<(Vec<Complex64>, Vec<usize>, bool)>,
    p1: f64,
    p2: f64,
    readout: f64,
}

impl ShotKernel {
    fn prepare(circuit: &Circuit, noise: &NoiseModel) -> ShotKernel {
        // Crosstalk injection may need two surrounding qubits.
        let qubits = if noise.crosstalk_cz_every.is_some() && circuit.qubits < 4 {
            4
        } else {
            circuit.qubits
        };
        let mut ops = Vec::new();
        let mut payload = 0usize;
        for g in &circuit.gates {
            let m = g.kind.matrix();
            let entries: Vec<Complex64> = {
                let mat = m.matrix();
                (0..mat.nrows())
                    .flat_map(|r| (0..mat.ncols()).map(move |cc| mat[(r, cc)]))
                    .collect()
            };
            let is2 = g.targets.len() == 2;
            ops.push((entries, g.targets.clone(), is2));
            if is2 && g.tag != GateTag::Crosstalk {
                payload += 1;
                if let Some(every) = noise.crosstalk_cz_every {
                    if every > 0 && payload.is_multiple_of(every) {
                        let czm = GateKind::Cz.matrix();
                        let mut entries = Vec::with_capacity(16);
                        for r in 0..4 {
                            for cc in 0..4 {
                                entries.push(czm.matrix()[(r, cc)]);
                            }
                        }
                        ops.push((entries.clone(), vec![0, 2], true));
                        ops.push((entries, vec![1, 3], true));
                    }
                }
            }
        }
        ShotKernel {
            qubits,
            ops,
            p1: noise.one_qubit_depolarizing,
            p2: noise.two_qubit_depolarizing,
            readout: noise.readout_flip,
        }
    }

    fn apply_small(&self, psi: &mut [Complex64], entries: &[Complex64], targets: &[usize]) {
        let n = self.qubits;
        let k = targets.len();
        let dg = 1usize << k;
        let dim = psi.len();
        let shifts: Vec<usize> = targets.iter().map(|&q| n - 1 - q).collect();
        let mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
        let mut scratch = vec![c(0.0, 0.0); dg];
        let mut base = 0usize;
        while base < dim {
            if base & mask == 0 {
                for (g, s) in scratch.iter_mut().enumerate() {
                    let mut idx = base;
                    for (i, &sh) in shifts.iter().enumerate() {
                        if (g >> (k - 1 - i)) & 1 == 1 {
                            idx |= 1 << sh;
                        }
                    }
                    *s = psi[idx];
                }
                for grow in 0..dg {
                    let mut acc = c(0.0, 0.0);
                    for (gcol, s) in scratch.iter().enumerate() {
                        acc += entries[grow * dg + gcol] * s;
                    }
                    let mut idx = base;
                    for (i, &sh) in shifts.iter().enumerate() {
                        if (grow >> (k - 1 - i)) & 1 == 1 {
                            idx |= 1 << sh;
                        }
                    }
                    psi[idx] = acc;
                }
            }
            base += 1;
        }
    }

    fn apply_pauli(&self, psi: &mut [Complex64], qubit: usize, axis: Axis) {
        let sh = self.qubits - 1 - qubit;
        let bit = 1usize << sh;
        match axis {
            Axis::I => {}
            Axis::X => {
                for i in 0..psi.len() {
                    if i & bit == 0 {
                        psi.swap(i, i | bit);
                    }
                }
            }
            Axis::Y => {
                for i in 0..psi.len() {
                    if i & bit == 0 {
                        let a = psi[i];
                        let b = psi[i | bit];
                        psi[i] = c(0.0, -1.0) * b;
                        psi[i | bit] = c(0.0, 1.0) * a;
                    }
                }
            }
            Axis::Z => {
                for i in 0..psi.len() {
                    if i & bit != 0 {
                        psi[i] = -psi[i];
                    }
                }
            }
        }
    }

    fn run_shot(&self, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 1usize << self.qubits;
        let mut psi = vec![c(0.0, 0.0); dim];
        psi[0] = c(1.0, 0.0);

        for (entries, targets, is2) in &self.ops {
            self.apply_small(&mut psi, entries, targets);
            let p = if *is2 { self.p2 } else { self.p1 };
            if p > 0.0 && rng.gen::<f64>() < p {
                // Uniform non-identity Pauli on the gate's targets.
                let options = 4usize.pow(targets.len() as u32);
                let pick = rng.gen_range(1..options);
                for (i, &q) in targets.iter().enumerate() {
                    let a = (pick >> (2 * (targets.len() - 1 - i))) & 3;
                    let axis = [Axis::I, Axis::X, Axis::Y, Axis::Z][a];
                    self.apply_pauli(&mut psi, q, axis);
                }
            }
        }

        // Born-rule sample, then readout flips.
        let r: f64 = rng.gen();
        let mut cum = 0.0;
        let mut outcome = dim - 1;
        for (i, amp) in psi.iter().enumerate() {
            cum += amp.norm_sqr();
            if r < cum {
                outcome = i;
                break;
            }
        }
        if self.readout > 0.0 {
            for q in 0..self.qubits {
                if rng.gen::<f64>() < self.readout {
                    outcome ^= 1 << (self.qubits - 1 - q);
                }
            }
        }
        outcome
    }
}

/// Monte-Carlo trajectory simulation. Deterministic for a fixed master seed
/// regardless of parallelism: every shot draws from its own derived seed.
pub fn simulate_noisy(circuit: &Circuit, noise: &NoiseModel, shots: u64, seed: u64) -> NoisyRun {
    let kernel = ShotKernel::prepare(circuit, noise);
    let dim = 1usize << kernel.qubits;

    let histogram = (0..shots)
        .into_par_iter()
        .fold(
            || vec![0u64; dim],
            |mut acc, shot| {
                let outcome = kernel.run_shot(shot_seed(seed, shot));
                acc[outcome] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; dim],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let mut counts = BTreeMap::new();
    let mut success = 0u64;
    for (i, &n) in histogram.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let bits: String = (0..kernel.qubits)
            .map(|q| {
                if i & (1 << (kernel.qubits - 1 - q)) != 0 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect();
        // Success counts the all-zero outcome on the data qubits.
        let data = bits.len().min(2);
        if bits[..data].chars().all(|b| b == '0') {
            success += n;
        }
        counts.insert(bits, n);
    }
    let p = success as f64 / shots as f64;
    NoisyRun {
        shots,
        counts,
        fidelity_probability: p,
        fidelity_amplitude: p.sqrt(),
    }
}
