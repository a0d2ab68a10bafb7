//! The perforated-domain Steklov problem at a fixed `epsilon`, the limit
//! problems of each sign case, and the two-scale corrector expansions.

mod epsilon;
mod expansion;
mod limit;

pub use epsilon::{solve_epsilon, EpsilonOptions, EpsilonPair, EpsilonSpectrum};
pub use expansion::{build_corrector_expansion, Branch, CorrectorExpansion, ExpansionValues};
pub use limit::{
    limit_mesh, solve_case_limits, solve_limit_negative, solve_limit_pencil, solve_limit_positive, CaseLimits,
    Diagnostic, LimitKind, LimitPair, LimitSpectrum,
};

use thiserror::Error;

use crate::eigen::EigenError;
use crate::fem::FemError;
use crate::geometry::GeometryError;
use crate::homog::{HomogError, SignCase};

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Homog(#[from] HomogError),
    #[error("expected {expected} data, found {found}")]
    CaseMismatch { expected: SignCase, found: SignCase },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("point ({0}, {1}) could not be located")]
    PointLocation(f64, f64),
}
