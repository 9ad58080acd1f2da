//! Antisymmetrization of multielectron fields, the desymmetrized material
//! and first-order perturbation theory with sources.

mod perm;
mod perturbation;
mod symmetry;

use thiserror::Error;

use crate::physics::PhysicsError;
use crate::solver::SolveError;
use crate::tensorfield::FieldError;

pub use perm::{MultiElectronGrid, Permutation, SPIN_AXIS_LENGTH};
pub use perturbation::{
    normalize, perturbation_energy, perturbation_solve, FirstOrder, SchrodingerSystem, DENSE_LIMIT, GAP_TOLERANCE,
    NORM_TOLERANCE,
};
pub use symmetry::{
    antisymmetrize_full, electron_vector_layout, lambda_A, lambda_a, pair_count, symmetrized_l, tail_violation,
    SymmetrizedL, MAX_BRUTE_FORCE_ELECTRONS, TAIL_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum FermionError {
    #[error("setup: {0}")]
    Setup(String),
    #[error("layout: {0}")]
    Layout(String),
    #[error("{electrons} electrons exceed the brute-force limit of {max}")]
    TooManyElectrons { electrons: usize, max: usize },
    #[error("input is not antisymmetric in electrons 3..N (relative violation {0:.3e})")]
    TailSymmetry(f64),
    #[error("field is zero and cannot be normalized")]
    ZeroField,
    #[error("wavefunction is not normalized: norm^2 = {0}")]
    Normalization(f64),
    #[error("first-order energy has imaginary part {0:.3e}; V' must be real")]
    ComplexEnergy(f64),
    #[error("E = {energy} is not an eigenvalue (nearest at distance {distance:.3e})")]
    NotEigenvalue { energy: f64, distance: f64 },
    #[error("E = {energy} is degenerate (next level within {gap:.3e})")]
    Degenerate { energy: f64, gap: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
