//! P1 finite elements: assembly, constraints and linear solvers.

mod assemble;
mod dofmap;
pub mod field;
mod solve;
mod sparse;

pub use assemble::{
    assemble_boundary_mass, assemble_flux_load, assemble_stiffness, assemble_volume_mass, bary_point,
    energy, gauss2, grad_of, mean_tensor, p1_gradients, MIDPOINT_RULE,
};
pub use dofmap::{DofMap, NodeConstraint};
pub use field::{QuadPoint, ScalarField, TensorField};
pub use solve::{solve_pinned_mean_zero, solve_spd, Cholesky, DEFAULT_CG_TOL};
pub use sparse::{dot, norm2, SparseSymMatrix};

use thiserror::Error;

use crate::coeff::CoeffError;
use crate::geometry::BoundaryTag;

#[derive(Debug, Error)]
pub enum FemError {
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error("the constrained space is empty")]
    EmptySpace,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("mesh has no boundary edges tagged {0:?}")]
    NoTaggedEdges(BoundaryTag),
    #[error("inconsistent constraints: {0}")]
    BadConstraint(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}
