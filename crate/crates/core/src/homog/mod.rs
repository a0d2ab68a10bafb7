//! Periodic cell problems and effective coefficients.

mod cell;
mod data;

pub use cell::{
    effective_tensor, effective_tensor_energy, local_steklov_first_negative, nu_squared,
    solve_chi0, solve_corrector, surface_average, tilde_data, TildeData,
};
pub use data::{
    compute_homogenized, detect_case, CorrectorField, CorrectorKind, CriticalData, EffectiveTensor,
    FactorizationData, HomogOptions, HomogenizedData, LocalSteklovData, SignCase, HOMOGDATA_SCHEMA,
};

use thiserror::Error;

use crate::coeff::CoeffError;
use crate::eigen::EigenError;
use crate::fem::FemError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum HomogError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error("the cell has no hole boundary")]
    NoHole,
    #[error("corrector index {0} is not 1 or 2")]
    BadIndex(usize),
    #[error("surface average {m_s:e} exceeds the compatibility tolerance {tol:e}")]
    Incompatible { m_s: f64, tol: f64 },
    #[error("field was computed on a mesh with {found} nodes, expected {expected}")]
    MeshMismatch { expected: usize, found: usize },
    #[error("energy {energy:e} and surface integral {surface:e} of the surface corrector disagree")]
    CrossCheck { energy: f64, surface: f64 },
    #[error("first negative cell eigenfunction changes sign (min/max = {ratio:e}); refine the cell mesh")]
    SignChange { ratio: f64 },
    #[error("weighted surface average {0:e} is not negative")]
    NotNegative(f64),
    #[error("effective tensor is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("invalid homogenized data: {0}")]
    Invalid(String),
}
