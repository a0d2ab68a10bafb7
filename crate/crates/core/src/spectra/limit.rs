use serde::{Deserialize, Serialize};

use crate::eigen::{dirichlet_eigs, EigenOptions, EigenPair};
use crate::fem::field::ConstTensor;
use crate::fem::{assemble_stiffness, assemble_volume_mass, DofMap};
use crate::geometry::{build_square_mesh, Mesh};
use crate::homog::{EffectiveTensor, HomogenizedData, SignCase};

use super::SpectraError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitKind {
    Positive,
    Negative,
    Pencil,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitPair {
    pub value: f64,
    /// Nodal values on the limit mesh.
    pub vector: Vec<f64>,
    pub residual_norm: f64,
    /// `int_Omega u^2`.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSpectrum {
    pub kind: LimitKind,
    /// Ascending positive values.
    pub positives: Vec<LimitPair>,
    /// Negative values, descending.
    pub negatives: Vec<LimitPair>,
}

/// Unit square mesh used for every limit problem.
pub fn limit_mesh(m_limit: usize) -> Result<Mesh, SpectraError> {
    Ok(build_square_mesh(m_limit)?)
}

/// Dirichlet eigenpairs of `-div(c q grad u) = kappa u` with `int u^2 = 1`.
fn dirichlet_problem(
    q: &EffectiveTensor,
    c: f64,
    omega: &Mesh,
    k: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>, SpectraError> {
    if !(q.min_eigenvalue() > 0.0) {
        return Err(SpectraError::Invalid(format!(
            "effective tensor is not positive definite (min eigenvalue {:e})",
            q.min_eigenvalue()
        )));
    }
    let dofs = DofMap::dirichlet(omega)?;
    let stiff = dofs.reduce(&assemble_stiffness(omega, &ConstTensor(q.scaled(c).entries()))?)?;
    let mass = dofs.reduce(&assemble_volume_mass(omega)?)?;
    let mut pairs = dirichlet_eigs(&stiff, &mass, k, opts)?;
    for p in &mut pairs {
        p.vector = dofs.expand(&p.vector)?;
    }
    Ok(pairs)
}

fn to_limit(p: &EigenPair, value: f64, mass: f64) -> LimitPair {
    let s = mass.sqrt();
    LimitPair {
        value,
        vector: p.vector.iter().map(|x| x * s).collect(),
        residual_norm: p.residual_norm,
        mass,
    }
}

/// `-div(q / M grad u) = lambda u` with `int u^2 = 1 / M`.
pub fn solve_limit_positive(
    q: &EffectiveTensor,
    m_s_rho: f64,
    omega: &Mesh,
    k: usize,
    opts: &EigenOptions,
) -> Result<LimitSpectrum, SpectraError> {
    if !(m_s_rho > 0.0) {
        return Err(SpectraError::Invalid(format!("surface average {m_s_rho:e} is not positive")));
    }
    let pairs = dirichlet_problem(q, 1.0 / m_s_rho, omega, k, opts)?;
    Ok(LimitSpectrum {
        kind: LimitKind::Positive,
        positives: pairs.iter().map(|p| to_limit(p, p.eigenvalue, 1.0 / m_s_rho)).collect(),
        negatives: Vec::new(),
    })
}

/// `-div(q / M grad v) = xi v` with `M < 0`, so `0 > xi_1 > xi_2 >= ...`,
/// and `int v^2 = -1 / M`.
pub fn solve_limit_negative(
    q_tilde: &EffectiveTensor,
    m_s_rho_tilde: f64,
    omega: &Mesh,
    k: usize,
    opts: &EigenOptions,
) -> Result<LimitSpectrum, SpectraError> {
    if !(m_s_rho_tilde < 0.0) {
        return Err(SpectraError::Invalid(format!(
            "weighted surface average {m_s_rho_tilde:e} is not negative"
        )));
    }
    let pairs = dirichlet_problem(q_tilde, -1.0 / m_s_rho_tilde, omega, k, opts)?;
    Ok(LimitSpectrum {
        kind: LimitKind::Negative,
        positives: Vec::new(),
        negatives: pairs
            .iter()
            .map(|p| to_limit(p, -p.eigenvalue, -1.0 / m_s_rho_tilde))
            .collect(),
    })
}

/// Quadratic pencil `-div(q grad u) = lambda^2 nu^2 u`: `lambda = +-sqrt(kappa / nu^2)`
/// with a shared eigenfunction, `int u^2 = 1 / (2 |lambda| nu^2)`.
pub fn solve_limit_pencil(
    q: &EffectiveTensor,
    nu_sq: f64,
    omega: &Mesh,
    k: usize,
    opts: &EigenOptions,
) -> Result<LimitSpectrum, SpectraError> {
    if !(nu_sq > 0.0) {
        return Err(SpectraError::Invalid(format!("nu^2 = {nu_sq:e} is not positive")));
    }
    let pairs = dirichlet_problem(q, 1.0, omega, k, opts)?;
    let mut positives = Vec::with_capacity(k);
    let mut negatives = Vec::with_capacity(k);
    for p in &pairs {
        let lambda = (p.eigenvalue / nu_sq).sqrt();
        let mass = 1.0 / (2.0 * lambda * nu_sq);
        positives.push(to_limit(p, lambda, mass));
        negatives.push(to_limit(p, -lambda, mass));
    }
    Ok(LimitSpectrum {
        kind: LimitKind::Pencil,
        positives,
        negatives,
    })
}

/// How a raw `epsilon`-eigenvalue is turned into a quantity with a finite limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Diagnostic {
    /// `lambda / epsilon`.
    Scaled,
    /// `(lambda - lambda1 / epsilon) / epsilon`.
    Shifted { lambda1: f64 },
    /// `lambda`.
    Raw,
}

impl Diagnostic {
    pub fn apply(&self, lambda: f64, eps: f64) -> f64 {
        match *self {
            Diagnostic::Scaled => lambda / eps,
            Diagnostic::Shifted { lambda1 } => (lambda - lambda1 / eps) / eps,
            Diagnostic::Raw => lambda,
        }
    }
}

/// Limit values of both ends of the spectrum in the orientation of the
/// original density, with the diagnostic that converges to each.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseLimits {
    pub case: SignCase,
    pub positives: Vec<LimitPair>,
    pub negatives: Vec<LimitPair>,
    pub positive_diagnostic: Diagnostic,
    pub negative_diagnostic: Diagnostic,
}

impl CaseLimits {
    pub fn side(&self, sign: crate::eigen::Sign) -> (&[LimitPair], Diagnostic) {
        match sign {
            crate::eigen::Sign::Positive => (&self.positives, self.positive_diagnostic),
            crate::eigen::Sign::Negative => (&self.negatives, self.negative_diagnostic),
        }
    }
}

fn negate(pairs: Vec<LimitPair>) -> Vec<LimitPair> {
    pairs
        .into_iter()
        .map(|p| LimitPair { value: -p.value, ..p })
        .collect()
}

/// Solves the limit problems of the case recorded in `data`. A negative
/// surface average is handled through the reflected density, whose
/// results are swapped and negated back.
pub fn solve_case_limits(
    data: &HomogenizedData,
    omega: &Mesh,
    k: usize,
    opts: &EigenOptions,
) -> Result<CaseLimits, SpectraError> {
    match data.case {
        SignCase::Critical => {
            let c = data.critical.as_ref().ok_or_else(|| SpectraError::Invalid("missing critical data".into()))?;
            let l = solve_limit_pencil(&data.q, c.nu_sq, omega, k, opts)?;
            Ok(CaseLimits {
                case: data.case,
                positives: l.positives,
                negatives: l.negatives,
                positive_diagnostic: Diagnostic::Raw,
                negative_diagnostic: Diagnostic::Raw,
            })
        }
        SignCase::Positive | SignCase::Negative => {
            let s = data.reduction_sign();
            let main = solve_limit_positive(&data.q, s * data.m_s_rho, omega, k, opts)?.positives;
            // without cell eigenpair data the density has no negative part
            let (shifted, shifted_diag) = match &data.factorization {
                Some(f) => (
                    solve_limit_negative(&f.q_tilde, f.m_s_rho_tilde, omega, k, opts)?.negatives,
                    Diagnostic::Shifted {
                        lambda1: s * f.local.lambda1_neg,
                    },
                ),
                None => (Vec::new(), Diagnostic::Raw),
            };
            if s > 0.0 {
                Ok(CaseLimits {
                    case: data.case,
                    positives: main,
                    negatives: shifted,
                    positive_diagnostic: Diagnostic::Scaled,
                    negative_diagnostic: shifted_diag,
                })
            } else {
                Ok(CaseLimits {
                    case: data.case,
                    positives: negate(shifted),
                    negatives: negate(main),
                    positive_diagnostic: shifted_diag,
                    negative_diagnostic: Diagnostic::Scaled,
                })
            }
        }
    }
}
