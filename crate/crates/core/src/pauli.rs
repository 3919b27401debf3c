//! Pauli strings: n-qubit tensor products of `{I, X, Y, Z}` with a power-of-i
//! prefactor. These are the pulse operators, toggling frames, and coupling
//! terms used everywhere else in the crate.

use std::fmt;

use num_complex::Complex64;

use crate::operator::Operator;

/// Single-site Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    I,
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::I, Axis::X, Axis::Y, Axis::Z];

    /// 2x2 matrix of the axis.
    pub fn entries(self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Axis::I => [[one, z], [z, one]],
            Axis::X => [[z, one], [one, z]],
            Axis::Y => [[z, -i], [i, z]],
            Axis::Z => [[one, z], [z, -one]],
        }
    }

    pub fn label(self) -> char {
        match self {
            Axis::I => 'I',
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }

    pub fn from_label(c: char) -> Option<Axis> {
        match c.to_ascii_uppercase() {
            'I' => Some(Axis::I),
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            _ => None,
        }
    }

    /// Product of two axes as `(i^k, axis)`, e.g. X*Y = i Z gives `(1, Z)`.
    fn mul(a: Axis, b: Axis) -> (u8, Axis) {
        use Axis::*;
        match (a, b) {
            (I, b) => (0, b),
            (a, I) => (0, a),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
        }
    }

    /// Whether conjugation by `frame` flips the sign of `self`.
    fn anticommutes(self, other: Axis) -> bool {
        self != Axis::I && other != Axis::I && self != other
    }
}

/// Prefactor `i^k` with `k` in `0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const PLUS_I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn value(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{s}")
    }
}

/// An n-qubit Pauli operator `i^k * axes[0] (x) axes[1] (x) ...`.
///
/// Factor 0 is the leftmost tensor slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    axes: Vec<Axis>,
    phase: Phase,
}

impl PauliString {
    pub fn identity(qubits: usize) -> PauliString {
        PauliString {
            axes: vec![Axis::I; qubits],
            phase: Phase::ONE,
        }
    }

    pub fn from_axes(axes: Vec<Axis>) -> PauliString {
        PauliString {
            axes,
            phase: Phase::ONE,
        }
    }

    /// `axis` on one site, identity elsewhere.
    pub fn single(qubits: usize, site: usize, axis: Axis) -> PauliString {
        assert!(site < qubits, "site out of range");
        let mut axes = vec![Axis::I; qubits];
        axes[site] = axis;
        PauliString {
            axes,
            phase: Phase::ONE,
        }
    }

    pub fn qubits(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Hermitian iff the prefactor is real.
    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    pub fn is_identity_axes(&self) -> bool {
        self.axes.iter().all(|&a| a == Axis::I)
    }

    /// Same axes with prefactor reset to +1.
    pub fn strip_phase(&self) -> PauliString {
        PauliString {
            axes: self.axes.clone(),
            phase: Phase::ONE,
        }
    }

    /// Product `self * rhs` (self applied after rhs). Panics on length mismatch.
    pub fn mul(&self, rhs: &PauliString) -> PauliString {
        assert_eq!(self.axes.len(), rhs.axes.len(), "qubit count mismatch");
        let mut phase = self.phase.mul(rhs.phase);
        let axes = self
            .axes
            .iter()
            .zip(rhs.axes.iter())
            .map(|(&a, &b)| {
                let (k, c) = Axis::mul(a, b);
                phase = phase.mul(Phase(k));
                c
            })
            .collect();
        PauliString { axes, phase }
    }

    /// Tensor product: `self` on the leading factors, `rhs` appended.
    pub fn tensor(&self, rhs: &PauliString) -> PauliString {
        let mut axes = self.axes.clone();
        axes.extend_from_slice(&rhs.axes);
        PauliString {
            axes,
            phase: self.phase.mul(rhs.phase),
        }
    }

    /// Duplicate every axis onto a second qubit register: X -> XX, Z -> ZZ.
    pub fn broadcast_pair(&self) -> PauliString {
        let mut axes = Vec::with_capacity(2 * self.axes.len());
        for &a in &self.axes {
            axes.push(a);
        }
        for &a in &self.axes {
            axes.push(a);
        }
        PauliString {
            axes,
            phase: self.phase,
        }
    }

    /// Extend with identity factors on `extra` trailing qubits.
    pub fn pad_right(&self, extra: usize) -> PauliString {
        let mut axes = self.axes.clone();
        axes.extend(std::iter::repeat_n(Axis::I, extra));
        PauliString {
            axes,
            phase: self.phase,
        }
    }

    /// Sign of `P target P^dag` for this (phase-stripped) Pauli frame:
    /// +1 if every site commutes, -1 per anticommuting site.
    pub fn conjugation_sign(&self, target: &PauliString) -> f64 {
        assert_eq!(self.axes.len(), target.axes.len(), "qubit count mismatch");
        let flips = self
            .axes
            .iter()
            .zip(target.axes.iter())
            .filter(|(&a, &b)| a.anticommutes(b))
            .count();
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Dense matrix, phase included.
    pub fn matrix(&self) -> Operator {
        let mut op = Operator::scalar(self.phase.value());
        for &a in &self.axes {
            op = op.kron(&Operator::from_rows_2x2(a.entries()));
        }
        op
    }

    /// Axes-only label, e.g. "XZ". Phase is not encoded.
    pub fn axes_label(&self) -> String {
        self.axes.iter().map(|a| a.label()).collect()
    }

    pub fn from_axes_label(s: &str) -> Option<PauliString> {
        let axes: Option<Vec<Axis>> = s.chars().map(Axis::from_label).collect();
        axes.map(PauliString::from_axes)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.phase, self.axes_label())
    }
}
