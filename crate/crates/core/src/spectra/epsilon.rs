use crate::coeff::{CoefficientTensor, DensityField};
use crate::eigen::{steklov_side, EigenError, EigenOptions, EigenPair, Sign};
use crate::fem::field::Periodized;
use crate::fem::{assemble_boundary_mass, assemble_stiffness, dot, DofMap, SparseSymMatrix};
use crate::geometry::{build_perforated_domain_mesh, BoundaryTag, CellGeometry, EpsilonLevel, Mesh, DEFAULT_MAX_DOFS};
use crate::homog::SignCase;

use super::SpectraError;

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonOptions {
    pub k: usize,
    pub eigen: EigenOptions,
    /// Accept a density without negative part and return no negatives.
    pub sanity: bool,
    pub max_dofs: usize,
}

impl Default for EpsilonOptions {
    fn default() -> Self {
        Self {
            k: 3,
            eigen: EigenOptions::default(),
            sanity: false,
            max_dofs: DEFAULT_MAX_DOFS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonPair {
    pub eigenvalue: f64,
    /// Nodal values on the perforated mesh, zero on the outer boundary.
    pub vector: Vec<f64>,
    pub residual_norm: f64,
    /// Deviation of the case normalization from `+1` or `-1`.
    pub normalization_residual: f64,
}

#[derive(Debug, Clone)]
pub struct EpsilonSpectrum {
    pub level: EpsilonLevel,
    pub case: SignCase,
    pub mesh: Mesh,
    pub positives: Vec<EpsilonPair>,
    pub negatives: Vec<EpsilonPair>,
    /// Set in sanity mode when the density has no negative part.
    pub no_negative_spectrum: bool,
    /// Largest `|c u_k^T B u_l|`, `k != l`, within each sign.
    pub orthogonality_defect: f64,
}

impl EpsilonSpectrum {
    pub fn epsilon(&self) -> f64 {
        self.level.epsilon()
    }

    pub fn side(&self, sign: Sign) -> &[EpsilonPair] {
        match sign {
            Sign::Positive => &self.positives,
            Sign::Negative => &self.negatives,
        }
    }
}

/// Factor `c` of the normalization `c int rho u^2 = +-1`: `epsilon`, or one
/// in the critical case.
fn normalization_factor(case: SignCase, eps: f64) -> f64 {
    if case == SignCase::Critical {
        1.0
    } else {
        eps
    }
}

fn finish_side(
    pairs: Vec<EigenPair>,
    dofs: &DofMap,
    b: &SparseSymMatrix,
    c: f64,
    sign: Sign,
) -> Result<(Vec<EpsilonPair>, f64), SpectraError> {
    let scale = 1.0 / c.sqrt();
    let mut out: Vec<EpsilonPair> = Vec::with_capacity(pairs.len());
    let mut bv = Vec::with_capacity(pairs.len());
    for p in pairs {
        let v: Vec<f64> = p.vector.iter().map(|x| x * scale).collect();
        let w = b.matvec(&v);
        let norm = c * dot(&v, &w);
        bv.push(w);
        out.push(EpsilonPair {
            eigenvalue: p.eigenvalue,
            vector: dofs.expand(&v)?,
            residual_norm: p.residual_norm,
            normalization_residual: (norm - sign.factor()).abs(),
        });
    }
    let mut defect = 0.0f64;
    for i in 0..out.len() {
        for j in 0..i {
            let vi = dofs.reduce_vector(&out[i].vector)?;
            defect = defect.max((c * dot(&vi, &bv[j])).abs());
        }
    }
    Ok((out, defect))
}

/// Assembles the problem on the perforated square at `level` with the
/// coefficients evaluated at `x / epsilon mod 1`, and solves both ends of
/// the spectrum.
pub fn solve_epsilon(
    geometry: &CellGeometry,
    level: EpsilonLevel,
    a: &CoefficientTensor,
    rho: &DensityField,
    case: SignCase,
    opts: &EpsilonOptions,
) -> Result<EpsilonSpectrum, SpectraError> {
    let mesh = build_perforated_domain_mesh(geometry, level, opts.max_dofs)?;
    let n = level.n;
    let dofs = DofMap::dirichlet(&mesh)?;
    let stiff = dofs.reduce(&assemble_stiffness(&mesh, &Periodized { inner: a, n })?)?;
    let bmat = dofs.reduce(&assemble_boundary_mass(&mesh, &Periodized { inner: rho, n }, BoundaryTag::Hole)?)?;
    let c = normalization_factor(case, level.epsilon());

    let pos = steklov_side(&stiff, &bmat, opts.k, Sign::Positive, &opts.eigen)?;
    let (positives, d1) = finish_side(pos, &dofs, &bmat, c, Sign::Positive)?;
    let (negatives, d2, none) = match steklov_side(&stiff, &bmat, opts.k, Sign::Negative, &opts.eigen) {
        Ok(neg) => {
            let (v, d) = finish_side(neg, &dofs, &bmat, c, Sign::Negative)?;
            (v, d, false)
        }
        Err(EigenError::NoNegativeSpectrum) if opts.sanity => (Vec::new(), 0.0, true),
        Err(e) => return Err(e.into()),
    };
    Ok(EpsilonSpectrum {
        level,
        case,
        mesh,
        positives,
        negatives,
        no_negative_spectrum: none,
        orthogonality_defect: d1.max(d2),
    })
}
