//! Brute-force ground truth on a truncated few-photon Fock space.
//!
//! The original and transformed Hamiltonians act either as assembled sparse
//! matrices or on the fly (for time-dependent propagation), `T(t)` is applied
//! by a Taylor action of the anti-Hermitian generator, and
//! [`residual::transformed_residual`] measures how far the second-order
//! transformed Hamiltonian is from the exact frame change.

pub mod basis;
pub mod hamiltonian;
pub mod operator;
pub mod propagate;
pub mod residual;
pub mod transform;

pub use basis::{enumerate_basis, enumerate_basis_with_limit, FockBasis, Level};
pub use hamiltonian::{
    build_original_hamiltonian, build_transformed_hamiltonian, FieldTerms, OriginalHamiltonian, StaticTerms,
    TimeDependentOperator, TransformedHamiltonian, Variant,
};
pub use operator::{FockStateVector, SparseOperator};
pub use propagate::{propagate, propagate_observed, PropagateOptions, PropagationReport};
pub use residual::{transformed_residual, transformed_residual_norm, ResidualOptions, ResidualReport};
pub use transform::{apply_t, apply_t_with_report, displacement_matrix};
