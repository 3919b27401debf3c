//! Dense complex operators on small Hilbert spaces, with the Hermitian matrix
//! exponential and the time-ordered propagator for piecewise-constant
//! Hamiltonians.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type CMat = DMatrix<Complex64>;

const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("operator is not Hermitian (defect {defect:.3e})")]
    NonHermitianInput { defect: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cannot keep {keep} qubits of a {qubits}-qubit state")]
    BadPartition { keep: usize, qubits: usize },
}

/// Square dense operator. Values are immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: CMat,
}

impl Operator {
    pub fn from_matrix(mat: CMat) -> Operator {
        assert_eq!(mat.nrows(), mat.ncols(), "operator must be square");
        Operator { mat }
    }

    /// 1x1 operator holding a scalar; identity element for `kron`.
    pub fn scalar(c: Complex64) -> Operator {
        Operator {
            mat: CMat::from_element(1, 1, c),
        }
    }

    pub fn from_rows_2x2(rows: [[Complex64; 2]; 2]) -> Operator {
        Operator {
            mat: CMat::from_row_slice(2, 2, &[rows[0][0], rows[0][1], rows[1][0], rows[1][1]]),
        }
    }

    /// Row-major construction helper for small fixed matrices.
    pub fn from_row_slice(dim: usize, entries: &[Complex64]) -> Operator {
        assert_eq!(entries.len(), dim * dim);
        Operator {
            mat: CMat::from_row_slice(dim, dim, entries),
        }
    }

    pub fn identity(dim: usize) -> Operator {
        Operator {
            mat: CMat::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Operator {
        Operator {
            mat: CMat::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Operator {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    pub fn mul(&self, other: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &other.mat,
        }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &other.mat,
        }
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        Operator {
            mat: self.mat.map(|e| e * c),
        }
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            mat: self.mat.adjoint(),
        }
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.mat.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diagonal().iter().sum()
    }

    /// `|H - H^dag|_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_norm()
    }

    /// `|U^dag U - I|_max`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint()
            .mul(self)
            .sub(&Operator::identity(self.dim()))
            .max_norm()
    }

    /// `exp(-i self t)` by Hermitian eigendecomposition.
    pub fn expm_hermitian(&self, t: f64) -> Result<Operator, AlgebraError> {
        Ok(self.eig_hermitian()?.expm(t))
    }

    /// Eigendecomposition of a Hermitian operator, reusable across times.
    pub fn eig_hermitian(&self) -> Result<HermitianEig, AlgebraError> {
        let defect = self.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(AlgebraError::NonHermitianInput { defect });
        }
        let eig = self.mat.clone().symmetric_eigen();
        Ok(HermitianEig {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    /// Distance up to a global phase: `min_c |self - c other|_max` with the
    /// phase taken from `c = Tr(other^dag self) / |Tr(other^dag self)|`.
    pub fn distance_up_to_phase(&self, other: &Operator) -> f64 {
        let tr = other.adjoint().mul(self).trace();
        let c = if tr.norm() > 1e-300 {
            tr / tr.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.sub(&other.scale(c)).max_norm()
    }
}

/// Cached eigendecomposition of a Hermitian operator.
pub struct HermitianEig {
    values: Vec<f64>,
    vectors: CMat,
}

impl HermitianEig {
    /// `exp(-i H t) = V exp(-i diag t) V^dag`.
    pub fn expm(&self, t: f64) -> Operator {
        let dim = self.values.len();
        let mut phased = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let f = Complex64::new(0.0, -lambda * t).exp();
            for i in 0..dim {
                phased[(i, j)] *= f;
            }
        }
        Operator {
            mat: phased * self.vectors.adjoint(),
        }
    }
}

/// Time-ordered product `prod_i exp(-i H_i dt_i)` with the earliest segment
/// applied first (rightmost factor).
pub fn propagate(segments: &[(Operator, f64)]) -> Result<Operator, AlgebraError> {
    if segments.is_empty() {
        return Ok(Operator::identity(1));
    }
    let dim = segments[0].0.dim();
    let mut acc = Operator::identity(dim);
    for (h, dt) in segments {
        if h.dim() != dim {
            return Err(AlgebraError::DimensionMismatch {
                left: dim,
                right: h.dim(),
            });
        }
        assert!(*dt >= 0.0, "segment durations must be non-negative");
        acc = h.expm_hermitian(*dt)?.mul(&acc);
    }
    Ok(acc)
}
