//! Pure and mixed quantum states over a register of qubits, with the partial
//! trace used to reduce a system+bath state onto the system factors.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::operator::{AlgebraError, CMat, Operator};

pub type CVec = DVector<Complex64>;

/// State of `qubits` qubits; factor 0 is the leftmost tensor slot.
#[derive(Debug, Clone)]
pub enum QuantumState {
    Pure(CVec),
    Density(CMat),
}

impl QuantumState {
    pub fn pure(vec: CVec) -> QuantumState {
        QuantumState::Pure(vec)
    }

    pub fn density(mat: CMat) -> QuantumState {
        assert_eq!(mat.nrows(), mat.ncols());
        QuantumState::Density(mat)
    }

    /// Computational basis state |index> on `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> QuantumState {
        let dim = 1 << qubits;
        assert!(index < dim);
        let mut v = CVec::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        QuantumState::Pure(v)
    }

    /// (|0> + |1>)/sqrt(2) on one qubit.
    pub fn plus() -> QuantumState {
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        QuantumState::Pure(CVec::from_vec(vec![c, c]))
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.len(),
            QuantumState::Density(m) => m.nrows(),
        }
    }

    pub fn qubits(&self) -> usize {
        let dim = self.dim();
        let n = dim.trailing_zeros() as usize;
        assert_eq!(1 << n, dim, "state dimension must be a power of two");
        n
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn norm_defect(&self) -> f64 {
        match self {
            QuantumState::Pure(v) => (v.norm() - 1.0).abs(),
            QuantumState::Density(m) => {
                let tr: Complex64 = m.diagonal().iter().sum();
                (tr - Complex64::new(1.0, 0.0)).norm()
            }
        }
    }

    pub fn to_density(&self) -> CMat {
        match self {
            QuantumState::Pure(v) => v * v.adjoint(),
            QuantumState::Density(m) => m.clone(),
        }
    }

    pub fn tensor(&self, other: &QuantumState) -> QuantumState {
        match (self, other) {
            (QuantumState::Pure(a), QuantumState::Pure(b)) => {
                let mut out = CVec::zeros(a.len() * b.len());
                for (i, &ai) in a.iter().enumerate() {
                    for (j, &bj) in b.iter().enumerate() {
                        out[i * b.len() + j] = ai * bj;
                    }
                }
                QuantumState::Pure(out)
            }
            _ => QuantumState::Density(self.to_density().kronecker(&other.to_density())),
        }
    }

    /// Apply a unitary: psi -> U psi, rho -> U rho U^dag.
    pub fn evolve(&self, u: &Operator) -> Result<QuantumState, AlgebraError> {
        if u.dim() != self.dim() {
            return Err(AlgebraError::DimensionMismatch {
                left: u.dim(),
                right: self.dim(),
            });
        }
        Ok(match self {
            QuantumState::Pure(v) => QuantumState::Pure(u.matrix() * v),
            QuantumState::Density(m) => {
                QuantumState::Density(u.matrix() * m * u.matrix().adjoint())
            }
        })
    }

    /// `<phi| rho |phi>` for a pure reference state of the same dimension.
    pub fn overlap_with_pure(&self, phi: &CVec) -> f64 {
        assert_eq!(phi.len(), self.dim());
        match self {
            QuantumState::Pure(v) => {
                let amp: Complex64 = phi.iter().zip(v.iter()).map(|(p, s)| p.conj() * s).sum();
                amp.norm_sqr()
            }
            QuantumState::Density(m) => {
                let mv = m * phi;
                let val: Complex64 = phi.iter().zip(mv.iter()).map(|(p, s)| p.conj() * s).sum();
                val.re
            }
        }
    }
}

/// Trace out the trailing factors, keeping the first `keep` qubits.
///
/// Returns a density matrix over the kept factors. For a pure input the
/// reduction contracts the vector directly without ever forming the full
/// outer product.
pub fn partial_trace(state: &QuantumState, keep: usize) -> Result<QuantumState, AlgebraError> {
    let qubits = state.qubits();
    if keep > qubits {
        return Err(AlgebraError::BadPartition { keep, qubits });
    }
    let dk = 1usize << keep;
    let db = 1usize << (qubits - keep);
    let mut out = CMat::zeros(dk, dk);
    match state {
        QuantumState::Pure(v) => {
            for i in 0..dk {
                for j in 0..dk {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for b in 0..db {
                        acc += v[i * db + b] * v[j * db + b].conj();
                    }
                    out[(i, j)] = acc;
                }
            }
        }
        QuantumState::Density(m) => {
            for i in 0..dk {
                for j in 0..dk {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for b in 0..db {
                        acc += m[(i * db + b, j * db + b)];
                    }
                    out[(i, j)] = acc;
                }
            }
        }
    }
    Ok(QuantumState::Density(out))
}
