use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coeff::{eval_periodicity_check, preset_density, preset_tensor, CoefficientTensor, DensityField};
use crate::geometry::{CellGeometry, HoleKind};
use crate::homog::SignCase;

use super::StudyError;

/// Samples per face for periodicity checks of configured expressions.
const PERIODICITY_SAMPLES: usize = 65;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub hole: HoleKind,
    /// Side of a square hole, radius of a disk.
    #[serde(default = "default_size")]
    pub size: f64,
    #[serde(default = "default_center")]
    pub center: [f64; 2],
    #[serde(default = "default_m")]
    pub m: usize,
}

fn default_size() -> f64 {
    0.5
}
fn default_center() -> [f64; 2] {
    [0.5, 0.5]
}
fn default_m() -> usize {
    8
}

impl GeometryConfig {
    pub fn cell(&self) -> CellGeometry {
        CellGeometry {
            hole_kind: self.hole,
            hole_center: self.center,
            hole_size: if self.hole == HoleKind::None { 0.0 } else { self.size },
            m: self.m,
        }
    }
}

/// Either a preset name or the three entries `a11`, `a12`, `a22`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub preset: Option<String>,
    pub a11: Option<String>,
    pub a12: Option<String>,
    pub a22: Option<String>,
}

impl CoefficientConfig {
    pub fn resolve(&self) -> Result<CoefficientTensor, StudyError> {
        let cfg = |e: crate::coeff::CoeffError| StudyError::Config(format!("coefficients: {e}"));
        match (&self.preset, &self.a11, &self.a12, &self.a22) {
            (Some(p), None, None, None) => preset_tensor(p).map_err(cfg),
            (None, None, None, None) => preset_tensor("identity").map_err(cfg),
            (None, Some(a11), a12, Some(a22)) => {
                CoefficientTensor::parse(a11, a12.as_deref().unwrap_or("0"), a22).map_err(cfg)
            }
            _ => Err(StudyError::Config(
                "coefficients: give either preset or a11 and a22 (a12 optional)".into(),
            )),
        }
    }
}

/// Either a preset name (with optional `shift`) or an expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub preset: Option<String>,
    pub shift: Option<f64>,
    pub expr: Option<String>,
}

impl DensityConfig {
    pub fn resolve(&self) -> Result<DensityField, StudyError> {
        let cfg = |e: crate::coeff::CoeffError| StudyError::Config(format!("density: {e}"));
        match (&self.preset, &self.expr) {
            (Some(p), None) => preset_density(p, self.shift).map_err(cfg),
            (None, Some(e)) if self.shift.is_none() => DensityField::parse(e).map_err(cfg),
            _ => Err(StudyError::Config(
                "density: give either preset (with optional shift) or expr".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_m_limit")]
    pub m_limit: usize,
    pub case_override: Option<SignCase>,
    /// Eigensolver seed; derived from the configuration hash when absent.
    pub seed: Option<u64>,
    /// Worker threads for the level sweep; all available cores when absent.
    pub threads: Option<usize>,
}

fn default_levels() -> Vec<usize> {
    vec![2, 4, 8, 16]
}
fn default_k() -> usize {
    3
}
fn default_m_limit() -> usize {
    64
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            k: default_k(),
            m_limit: default_m_limit(),
            case_override: None,
            seed: None,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative zero threshold for the surface average (times the perimeter).
    pub tol_zero: f64,
    pub eig_tol: f64,
    pub cg_tol: f64,
    pub periodic_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_zero: 1e-10,
            eig_tol: 1e-8,
            cg_tol: 1e-12,
            periodic_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format {other:?} (expected csv, json or svg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("study-out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    pub density: DensityConfig,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

/// The parts of the configuration that determine the numbers.
#[derive(Serialize)]
struct HashInput<'a> {
    geometry: &'a GeometryConfig,
    coefficients: &'a CoefficientConfig,
    density: &'a DensityConfig,
    k: usize,
    m_limit: usize,
    case_override: Option<SignCase>,
    seed: Option<u64>,
    tolerances: &'a Tolerances,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self, StudyError> {
        toml::from_str(text).map_err(|e| StudyError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(path).map_err(|e| StudyError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(CellGeometry, CoefficientTensor, DensityField), StudyError> {
        let s = &self.study;
        if s.levels.is_empty() {
            return Err(StudyError::Config("study.levels is empty".into()));
        }
        if s.levels.contains(&0) {
            return Err(StudyError::Config("study.levels must be positive".into()));
        }
        if s.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StudyError::Config("study.levels must be strictly ascending".into()));
        }
        if s.k == 0 {
            return Err(StudyError::Config("study.k must be at least 1".into()));
        }
        if s.m_limit < 2 {
            return Err(StudyError::Config("study.m_limit must be at least 2".into()));
        }
        if s.threads == Some(0) {
            return Err(StudyError::Config("study.threads must be at least 1".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_zero", t.tol_zero),
            ("eig_tol", t.eig_tol),
            ("cg_tol", t.cg_tol),
            ("periodic_tol", t.periodic_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(StudyError::Config(format!("tolerances.{name} must be positive")));
            }
        }
        if self.output.formats.is_empty() {
            return Err(StudyError::Config("output.formats is empty".into()));
        }
        let geometry = self.geometry.cell();
        geometry
            .validate()
            .map_err(|e| StudyError::Config(format!("geometry: {e}")))?;
        if geometry.hole_kind == HoleKind::None {
            return Err(StudyError::Config("geometry: a study needs a hole".into()));
        }
        let a = self.coefficients.resolve()?;
        a.validate(PERIODICITY_SAMPLES, t.periodic_tol)
            .map_err(|e| StudyError::Config(format!("coefficients: {e}")))?;
        let rho = self.density.resolve()?;
        let periodic = eval_periodicity_check(&rho.rho, PERIODICITY_SAMPLES, t.periodic_tol)
            .map_err(|e| StudyError::Config(format!("density: {e}")))?;
        if !periodic {
            return Err(StudyError::Config("density: expression is not Y-periodic".into()));
        }
        Ok((geometry, a, rho))
    }

    /// SHA-256 of the settings that influence the computed numbers, as hex.
    pub fn hash(&self) -> String {
        let input = HashInput {
            geometry: &self.geometry,
            coefficients: &self.coefficients,
            density: &self.density,
            k: self.study.k,
            m_limit: self.study.m_limit,
            case_override: self.study.case_override,
            seed: self.study.seed,
            tolerances: &self.tolerances,
        };
        let bytes = serde_json::to_vec(&input).expect("hash input serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// The configured seed, or the leading eight bytes of the hash.
    pub fn seed(&self) -> u64 {
        self.study.seed.unwrap_or_else(|| {
            u64::from_str_radix(&self.hash()[..16], 16).expect("hash is hexadecimal")
        })
    }
}
