//! The environment: a few-spin bath coupled to the system qubits by isotropic
//! Heisenberg exchange plus an antisymmetric Dzyaloshinskii-Moriya term, an
//! optional random-field bath Hamiltonian, and initial bath states.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use crate::operator::{AlgebraError, CMat, Operator};
use crate::pauli::{Axis, PauliString};
use crate::state::QuantumState;

/// System-bath coupling form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingForm {
    /// Heisenberg exchange XX+YY+ZZ, with the Dzyaloshinskii-Moriya term
    /// XY-YX when `dm` is set.
    Isotropic { dm: bool },
    /// Pure dephasing: ZZ only.
    Dephasing,
}

/// Bath self-Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvHamiltonian {
    None,
    /// Random z fields per bath spin, uniform in [-max_strength, max_strength],
    /// drawn deterministically from the seed.
    RandomField { seed: u64, max_strength: f64 },
    /// Random x fields per bath spin. A z-only bath field commutes with a
    /// dephasing coupling; transverse fields give the bath nontrivial
    /// dynamics, which memory-protection studies need.
    RandomTransverseField { seed: u64, max_strength: f64 },
}

/// Initial bath state.
#[derive(Debug, Clone, PartialEq)]
pub enum BathState {
    AllZero,
    /// One normalized single-spin state per bath spin.
    PerSpin(Vec<[Complex64; 2]>),
    MaximallyMixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinBathModel {
    pub system_qubits: usize,
    pub bath_spins: usize,
    /// Common coupling strength, rad/s.
    pub epsilon: f64,
    pub coupling: CouplingForm,
    pub environment: EnvHamiltonian,
    pub bath_state: BathState,
}

impl SpinBathModel {
    /// The documented default bath: five spins, Heisenberg+DM coupling at
    /// 2 pi x 1 MHz, no bath self-Hamiltonian, all bath spins in |0>.
    pub fn default_bath(system_qubits: usize) -> SpinBathModel {
        SpinBathModel {
            system_qubits,
            bath_spins: 5,
            epsilon: 2.0 * std::f64::consts::PI * 1.0e6,
            coupling: CouplingForm::Isotropic { dm: true },
            environment: EnvHamiltonian::None,
            bath_state: BathState::AllZero,
        }
    }

    pub fn total_qubits(&self) -> usize {
        self.system_qubits + self.bath_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    /// System qubit that bath spin `b` couples to; bath spins are split as
    /// evenly as possible, the first qubit taking the larger share.
    pub fn attached_qubit(&self, b: usize) -> usize {
        if self.system_qubits == 1 || b < self.bath_spins.div_ceil(2) {
            0
        } else {
            1
        }
    }
}

fn two_site(model: &SpinBathModel, sys: usize, a: Axis, b: usize, c: Axis) -> Operator {
    let n = model.total_qubits();
    let mut axes = vec![Axis::I; n];
    axes[sys] = a;
    axes[model.system_qubits + b] = c;
    PauliString::from_axes(axes).matrix()
}

/// System-bath interaction Hamiltonian.
pub fn build_interaction(model: &SpinBathModel) -> Operator {
    let mut h = Operator::zeros(model.dim());
    let eps = Complex64::new(model.epsilon, 0.0);
    for b in 0..model.bath_spins {
        let s = model.attached_qubit(b);
        let mut term = match model.coupling {
            CouplingForm::Isotropic { dm } => {
                let mut t = two_site(model, s, Axis::X, b, Axis::X)
                    .add(&two_site(model, s, Axis::Y, b, Axis::Y))
                    .add(&two_site(model, s, Axis::Z, b, Axis::Z));
                if dm {
                    t = t
                        .add(&two_site(model, s, Axis::X, b, Axis::Y))
                        .sub(&two_site(model, s, Axis::Y, b, Axis::X));
                }
                t
            }
            CouplingForm::Dephasing => two_site(model, s, Axis::Z, b, Axis::Z),
        };
        term = term.scale(eps);
        h = h.add(&term);
    }
    h
}

/// Bath self-Hamiltonian; acts as the identity on the system factors.
pub fn build_environment(model: &SpinBathModel) -> Operator {
    let random_fields = |seed: u64, max_strength: f64, axis: Axis| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = Operator::zeros(model.dim());
        for b in 0..model.bath_spins {
            let field = if max_strength > 0.0 {
                rng.gen_range(-max_strength..=max_strength)
            } else {
                0.0
            };
            let p = PauliString::single(model.total_qubits(), model.system_qubits + b, axis);
            h = h.add(&p.matrix().scale(field.into()));
        }
        h
    };
    match model.environment {
        EnvHamiltonian::None => Operator::zeros(model.dim()),
        EnvHamiltonian::RandomField { seed, max_strength } => {
            random_fields(seed, max_strength, Axis::Z)
        }
        EnvHamiltonian::RandomTransverseField { seed, max_strength } => {
            random_fields(seed, max_strength, Axis::X)
        }
    }
}

/// Tensor the system state with the configured bath state.
pub fn initial_state(
    model: &SpinBathModel,
    system: &QuantumState,
) -> Result<QuantumState, AlgebraError> {
    let sys_dim = 1 << model.system_qubits;
    if system.dim() != sys_dim {
        return Err(AlgebraError::DimensionMismatch {
            left: system.dim(),
            right: sys_dim,
        });
    }
    if model.bath_spins == 0 {
        return Ok(system.clone());
    }
    let bath = match &model.bath_state {
        BathState::AllZero => QuantumState::basis(model.bath_spins, 0),
        BathState::PerSpin(spins) => {
            assert_eq!(spins.len(), model.bath_spins, "one state per bath spin");
            let mut state = QuantumState::pure(nalgebra::DVector::from_vec(vec![
                Complex64::new(1.0, 0.0),
            ]));
            for s in spins {
                let v = nalgebra::DVector::from_vec(vec![s[0], s[1]]);
                state = state.tensor(&QuantumState::pure(v));
            }
            state
        }
        BathState::MaximallyMixed => {
            let dim = 1 << model.bath_spins;
            let rho = CMat::identity(dim, dim).map(|e| e / dim as f64);
            QuantumState::density(rho)
        }
    };
    Ok(system.tensor(&bath))
}
