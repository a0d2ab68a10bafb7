use serde::{Deserialize, Serialize};

use crate::coeff::{min_eigenvalue_2x2, CoefficientTensor, DensityField};
use crate::eigen::{EigenError, EigenOptions};
use crate::fem::DEFAULT_CG_TOL;
use crate::geometry::{BoundaryTag, Mesh};

use super::cell::{
    effective_tensor, local_steklov_first_negative, nu_squared, solve_chi0, solve_corrector,
    surface_average, tilde_data,
};
use super::HomogError;

pub const HOMOGDATA_SCHEMA: &str = "homogdata 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectorKind {
    Chi1,
    Chi2,
    Chi0,
}

/// Nodal corrector values on the cell mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorField {
    pub which: CorrectorKind,
    pub values: Vec<f64>,
    /// Volume mean over the cell after recentering.
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTensor {
    pub q11: f64,
    pub q12: f64,
    pub q22: f64,
    /// `|q12 - q21|` before symmetrization.
    pub asymmetry: f64,
}

impl EffectiveTensor {
    pub fn isotropic(c: f64) -> Self {
        Self {
            q11: c,
            q12: 0.0,
            q22: c,
            asymmetry: 0.0,
        }
    }

    pub fn entries(&self) -> [f64; 3] {
        [self.q11, self.q12, self.q22]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue_2x2(self.entries())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            q11: c * self.q11,
            q12: c * self.q12,
            q22: c * self.q22,
            asymmetry: c.abs() * self.asymmetry,
        }
    }

    /// `xi^T q xi`.
    pub fn quadratic_form(&self, xi: [f64; 2]) -> f64 {
        self.q11 * xi[0] * xi[0] + 2.0 * self.q12 * xi[0] * xi[1] + self.q22 * xi[1] * xi[1]
    }
}

/// First negative eigencouple of the periodic cell Steklov problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSteklovData {
    pub lambda1_neg: f64,
    /// Nodal values on the cell mesh, positive, maximum one.
    pub theta1_neg: Vec<f64>,
    pub surface_integral_rho_theta_sq: f64,
    pub residual_norm: f64,
}

/// Sign class of the surface average of the density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignCase {
    #[serde(alias = "pos")]
    Positive,
    #[serde(alias = "neg")]
    Negative,
    #[serde(alias = "crit")]
    Critical,
}

impl SignCase {
    pub fn as_str(self) -> &'static str {
        match self {
            SignCase::Positive => "positive",
            SignCase::Negative => "negative",
            SignCase::Critical => "critical",
        }
    }
}

impl std::str::FromStr for SignCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" | "pos" => Ok(SignCase::Positive),
            "negative" | "neg" => Ok(SignCase::Negative),
            "critical" | "crit" => Ok(SignCase::Critical),
            other => Err(format!("unknown case {other:?} (expected pos, neg or crit)")),
        }
    }
}

impl std::fmt::Display for SignCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `critical` when `|M_S| <= tol_zero_rel * perimeter`, otherwise the sign.
pub fn detect_case(m_s: f64, perimeter: f64, tol_zero_rel: f64) -> SignCase {
    if m_s.abs() <= tol_zero_rel * perimeter {
        SignCase::Critical
    } else if m_s > 0.0 {
        SignCase::Positive
    } else {
        SignCase::Negative
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalData {
    pub chi0: CorrectorField,
    pub nu_sq: f64,
}

/// Data of the degenerating sequence: the cell eigencouple and the
/// effective problem of the weighted coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationData {
    pub local: LocalSteklovData,
    pub q_tilde: EffectiveTensor,
    pub m_s_rho_tilde: f64,
    pub chi_tilde: [CorrectorField; 2],
}

/// Everything the limit problems and corrector expansions need.
///
/// For a negative surface average the case-specific parts describe the
/// reduced density `-rho`, whose average is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedData {
    pub schema: String,
    pub case: SignCase,
    pub m_s_rho: f64,
    pub perimeter: f64,
    pub q: EffectiveTensor,
    pub chi: [CorrectorField; 2],
    pub critical: Option<CriticalData>,
    pub factorization: Option<FactorizationData>,
}

impl HomogenizedData {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("homogenized data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HomogError> {
        let d: Self = serde_json::from_str(text).map_err(|e| HomogError::Invalid(e.to_string()))?;
        if d.schema != HOMOGDATA_SCHEMA {
            return Err(HomogError::Invalid(format!("unsupported schema {:?}", d.schema)));
        }
        Ok(d)
    }

    /// `+1` when the density was used as given, `-1` when it was negated.
    pub fn reduction_sign(&self) -> f64 {
        if self.case == SignCase::Negative {
            -1.0
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogOptions {
    pub cg_tol: f64,
    /// Relative threshold (times the hole perimeter) for a zero surface average.
    pub tol_zero: f64,
    pub eigen: EigenOptions,
    pub case_override: Option<SignCase>,
    /// Compute the data of the degenerating sequence in the positive and
    /// negative cases. It is left out when the density has no negative part.
    pub with_factorization: bool,
}

impl Default for HomogOptions {
    fn default() -> Self {
        Self {
            cg_tol: DEFAULT_CG_TOL * 1e-2,
            tol_zero: 1e-10,
            eigen: EigenOptions::default(),
            case_override: None,
            with_factorization: true,
        }
    }
}

/// Runs every cell computation required by the detected case.
pub fn compute_homogenized(
    mesh: &Mesh,
    a: &CoefficientTensor,
    rho: &DensityField,
    opts: &HomogOptions,
) -> Result<HomogenizedData, HomogError> {
    let m_s = surface_average(mesh, rho)?;
    let perimeter = mesh.tagged_length(BoundaryTag::Hole);
    let detected = detect_case(m_s, perimeter, opts.tol_zero);
    let case = match opts.case_override {
        Some(c) if c != detected => {
            log::warn!("surface average {m_s:e} gives case {detected}; using override {c}");
            c
        }
        _ => detected,
    };
    let chi1 = solve_corrector(mesh, a, 1, opts.cg_tol)?;
    let chi2 = solve_corrector(mesh, a, 2, opts.cg_tol)?;
    let q = effective_tensor(mesh, a, &chi1, &chi2)?;
    if !(q.min_eigenvalue() > 0.0) {
        return Err(HomogError::NotPositiveDefinite(q.min_eigenvalue()));
    }
    let mut data = HomogenizedData {
        schema: HOMOGDATA_SCHEMA.to_string(),
        case,
        m_s_rho: m_s,
        perimeter,
        q,
        chi: [chi1, chi2],
        critical: None,
        factorization: None,
    };
    match case {
        SignCase::Critical => {
            // an override may force this case on a slightly nonzero average
            let tol = opts.tol_zero * perimeter;
            let tol = if opts.case_override == Some(SignCase::Critical) {
                tol.max(m_s.abs())
            } else {
                tol
            };
            let chi0 = solve_chi0(mesh, a, rho, tol, opts.cg_tol)?;
            let nu_sq = nu_squared(mesh, a, rho, &chi0)?;
            data.critical = Some(CriticalData { chi0, nu_sq });
        }
        SignCase::Positive | SignCase::Negative if opts.with_factorization => {
            let working = if case == SignCase::Negative {
                rho.negated()
            } else {
                rho.clone()
            };
            let local = match local_steklov_first_negative(mesh, a, &working, &opts.eigen) {
                Ok(l) => l,
                // a density without negative part has only the positive sequence
                Err(HomogError::Eigen(EigenError::NoNegativeSpectrum)) => return Ok(data),
                Err(e) => return Err(e),
            };
            let t = tilde_data(mesh, a, &working, &local.theta1_neg, opts.cg_tol)?;
            data.factorization = Some(FactorizationData {
                local,
                q_tilde: t.q_tilde,
                m_s_rho_tilde: t.m_s_rho_tilde,
                chi_tilde: t.chi_tilde,
            });
        }
        _ => {}
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_detection() {
        assert_eq!(detect_case(2.0, 2.0, 1e-10), SignCase::Positive);
        assert_eq!(detect_case(-0.3, 2.0, 1e-10), SignCase::Negative);
        assert_eq!(detect_case(3e-13, 2.0, 1e-10), SignCase::Critical);
    }
}
