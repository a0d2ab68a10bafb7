//! Convergence studies: configuration, the cached end-to-end pipeline and
//! its CSV, JSON and SVG reports.

mod config;
mod report;
mod run;

pub use config::{
    CoefficientConfig, DensityConfig, Format, GeometryConfig, OutputConfig, StudyConfig, StudySection, Tolerances,
};
pub use report::{emit_reports, render_csv, render_svg, CorrectorRow, CSV_HEADER, LevelInfo, LimitValue, StudyReport, StudyRow, REPORT_SCHEMA};
pub use run::{run_study, run_study_with, Stage};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::homog::HomogError;
use crate::spectra::SpectraError;

#[derive(Debug, Error)]
pub enum NumericalError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Homog(#[from] HomogError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} failed: {source}")]
    Numerical {
        stage: Stage,
        #[source]
        source: NumericalError,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report error: {0}")]
    Report(String),
}

impl StudyError {
    /// Process exit code: 2 configuration, 3 numerical, 4 input/output.
    pub fn exit_code(&self) -> i32 {
        match self {
            StudyError::Config(_) => 2,
            StudyError::Numerical { .. } => 3,
            StudyError::Io { .. } | StudyError::Report(_) => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        StudyError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
