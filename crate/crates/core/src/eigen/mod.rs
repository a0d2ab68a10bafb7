//! Generalized symmetric eigensolvers for the Steklov pencil `A u = lambda B u`
//! (`B` indefinite with a large kernel) and the Dirichlet pencil `K u = kappa M u`.

mod inertia;
mod lanczos;

pub use inertia::inertia;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::{dot, norm2, Cholesky, FemError, SparseSymMatrix};
use lanczos::{lanczos, rng_from_seed, Outcome, Problem, Ritz, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        })
    }
}

#[derive(Debug, Error)]
pub enum EigenError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("cannot compute {k} eigenpairs of a pencil of dimension {dim}")]
    InvalidCount { k: usize, dim: usize },
    #[error("pencil dimensions differ ({a} vs {b})")]
    DimensionMismatch { a: usize, b: usize },
    #[error("only {available} eigenvalues of sign {sign} exist, {requested} requested")]
    FewerThanK {
        sign: Sign,
        requested: usize,
        available: usize,
    },
    #[error("no negative spectrum: the density is nonnegative on the boundary")]
    NoNegativeSpectrum,
    #[error("no admissible shift found: the stiffness pencil is not definite")]
    NoShift,
    #[error("eigensolver did not converge: {converged} of {requested} pairs (worst residual {residual:e})")]
    NonConvergence {
        converged: usize,
        requested: usize,
        residual: f64,
    },
}

/// Normalization applied to an eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `v^T B v = +1`.
    BPlus,
    /// `v^T B v = -1`.
    BMinus,
    /// `v^T M v = 1`.
    M,
    /// Rescaled by the caller.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub vector: Vec<f64>,
    /// `||A v - lambda B v|| / ||A v||`.
    pub residual_norm: f64,
    pub normalization: Normalization,
}

impl EigenPair {
    /// Multiplies the vector by `c` and marks the normalization as custom.
    pub fn rescaled(mut self, c: f64) -> Self {
        self.vector.iter_mut().for_each(|v| *v *= c);
        self.normalization = Normalization::Custom;
        self
    }
}

/// `positives` ascending from the smallest positive eigenvalue, `negatives`
/// descending from the negative eigenvalue closest to zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumSlice {
    pub positives: Vec<EigenPair>,
    pub negatives: Vec<EigenPair>,
}

impl SpectrumSlice {
    pub fn side(&self, sign: Sign) -> &[EigenPair] {
        match sign {
            Sign::Positive => &self.positives,
            Sign::Negative => &self.negatives,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    pub seed: u64,
    /// Acceptance threshold on the relative residual of every returned pair.
    pub residual_tol: f64,
    /// Convergence threshold used inside the iteration.
    pub ritz_tol: f64,
    /// Eigenvalues with `|lambda|` at or below this are treated as kernel modes.
    pub zero_tol: f64,
    /// Krylov basis limit per pass; `None` means `max(10 k + 40, 120)`.
    pub max_basis: Option<usize>,
    pub max_passes: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            seed: 0x5eed_1e55,
            residual_tol: 1e-8,
            ritz_tol: 1e-11,
            zero_tol: 1e-8,
            max_basis: None,
            max_passes: 5,
        }
    }
}

fn shifted(a: &SparseSymMatrix, b: &SparseSymMatrix, sigma: f64) -> Result<SparseSymMatrix, FemError> {
    if sigma == 0.0 {
        Ok(a.clone())
    } else {
        a.add_scaled(-sigma, b)
    }
}

/// True when the constant vector lies in the kernel of `a`.
fn has_constant_kernel(a: &SparseSymMatrix) -> bool {
    let r = a.row_sums();
    norm2(&r) <= 1e-11 * a.norm1() * (a.dim() as f64).sqrt()
}

/// First eigenvector component of significant size is made positive.
pub fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// The `k` smallest positive eigenvalues of `A v = lambda B v`, ascending,
/// with `v^T B v = 1`. `A` must be positive definite, or positive
/// semidefinite with the constants as its only kernel.
pub fn smallest_positive(
    a: &SparseSymMatrix,
    b: &SparseSymMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>, EigenError> {
    let n = a.dim();
    if b.dim() != n {
        return Err(EigenError::DimensionMismatch { a: n, b: b.dim() });
    }
    if k == 0 || k > n {
        return Err(EigenError::InvalidCount { k, dim: n });
    }
    let (npos, _) = inertia(b, 1e-12);
    let singular = has_constant_kernel(a);
    if npos < k {
        return Err(EigenError::FewerThanK {
            sign: Sign::Positive,
            requested: k,
            available: npos,
        });
    }

    let (mut sigma, mut chol) = if singular {
        base_shift(a, b)?
    } else {
        (0.0, Cholesky::factor(a)?)
    };
    let want = k;
    let mut max_basis = opts.max_basis.unwrap_or((10 * k + 40).max(120));
    let mut rng = rng_from_seed(opts.seed);
    let mut start = vec![1.0; n];
    let mut last: Vec<Ritz> = Vec::new();
    for _ in 0..opts.max_passes {
        let problem = Problem { a, b, chol: &chol, sigma };
        let settings = Settings {
            want,
            max_basis,
            tol: opts.ritz_tol,
            zero_tol: opts.zero_tol,
        };
        match lanczos(&problem, &settings, start.clone(), &mut rng) {
            Outcome::Converged(rr) => return finish(a, b, rr, opts),
            Outcome::NotConverged(rr) => {
                log::debug!(
                    "shift {sigma:e}: {} Ritz pairs, residuals {:?}",
                    rr.len(),
                    rr.iter().map(|r| r.residual).collect::<Vec<_>>()
                );
                if let Some(first) = rr.first() {
                    if let Some((s, c)) = refine_shift(a, b, sigma, first.lambda)? {
                        sigma = s;
                        chol = c;
                    } else {
                        max_basis *= 2;
                    }
                    start = vec![0.0; n];
                    for r in &rr {
                        let s = 1.0 / norm2(&r.vector).max(f64::MIN_POSITIVE);
                        for (x, v) in start.iter_mut().zip(&r.vector) {
                            *x += s * v;
                        }
                    }
                } else {
                    max_basis *= 2;
                }
                last = rr;
            }
        }
    }
    Err(EigenError::NonConvergence {
        converged: last.iter().filter(|r| r.residual <= opts.ritz_tol).count(),
        requested: k,
        residual: last.iter().map(|r| r.residual).fold(0.0, f64::max),
    })
}

/// Moves the shift most of the way from `sigma` towards the estimate
/// `lambda_hat` of the smallest eigenvalue above it, backing off while the
/// shifted matrix is not positive definite.
fn refine_shift(
    a: &SparseSymMatrix,
    b: &SparseSymMatrix,
    sigma: f64,
    lambda_hat: f64,
) -> Result<Option<(f64, Cholesky)>, EigenError> {
    let mut frac = 0.9;
    for _ in 0..6 {
        let cand = sigma + frac * (lambda_hat - sigma);
        if let Ok(c) = Cholesky::factor(&shifted(a, b, cand)?) {
            return Ok(Some((cand, c)));
        }
        frac *= 0.5;
    }
    Ok(None)
}

/// Shift for a stiffness with constant kernel: `A - sigma B` must be
/// positive definite, which holds for small `|sigma|` of the sign of the
/// B-norm of the constants.
fn base_shift(a: &SparseSymMatrix, b: &SparseSymMatrix) -> Result<(f64, Cholesky), EigenError> {
    let ones = vec![1.0; a.dim()];
    let c = dot(&ones, &b.matvec(&ones));
    if c == 0.0 {
        return Err(EigenError::NoShift);
    }
    let scale = a.norm1() / b.norm1().max(f64::MIN_POSITIVE);
    let mut tau = 1e-2 * scale;
    for _ in 0..10 {
        let sigma = -tau * c.signum();
        if let Ok(ch) = Cholesky::factor(&shifted(a, b, sigma)?) {
            return Ok((sigma, ch));
        }
        tau *= 0.1;
    }
    Err(EigenError::NoShift)
}

fn finish(
    a: &SparseSymMatrix,
    b: &SparseSymMatrix,
    rr: Vec<Ritz>,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>, EigenError> {
    let mut out = Vec::with_capacity(rr.len());
    for r in rr {
        let mut v = r.vector;
        let s = dot(&v, &b.matvec(&v));
        if !(s > 0.0) {
            return Err(EigenError::NonConvergence {
                converged: out.len(),
                requested: out.len() + 1,
                residual: r.residual,
            });
        }
        let inv = 1.0 / s.sqrt();
        v.iter_mut().for_each(|x| *x *= inv);
        fix_sign(&mut v);
        let problem_residual = {
            let av = a.matvec(&v);
            let bv = b.matvec(&v);
            let res: Vec<f64> = av.iter().zip(&bv).map(|(x, y)| x - r.lambda * y).collect();
            norm2(&res) / norm2(&av)
        };
        if !(problem_residual <= opts.residual_tol) {
            return Err(EigenError::NonConvergence {
                converged: out.len(),
                requested: out.len() + 1,
                residual: problem_residual,
            });
        }
        out.push(EigenPair {
            eigenvalue: r.lambda,
            vector: v,
            residual_norm: problem_residual,
            normalization: Normalization::BPlus,
        });
    }
    Ok(out)
}

/// Positive and negative ends of the Steklov pencil `A v = lambda B v`.
pub fn steklov_eigs(
    a: &SparseSymMatrix,
    b: &SparseSymMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectrumSlice, EigenError> {
    let positives = steklov_side(a, b, k, Sign::Positive, opts)?;
    let negatives = steklov_side(a, b, k, Sign::Negative, opts)?;
    Ok(SpectrumSlice { positives, negatives })
}

/// One end of the Steklov pencil. The negative end is computed as the
/// positive end of `(A, -B)`.
pub fn steklov_side(
    a: &SparseSymMatrix,
    b: &SparseSymMatrix,
    k: usize,
    sign: Sign,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>, EigenError> {
    match sign {
        Sign::Positive => smallest_positive(a, b, k, opts),
        Sign::Negative => {
            let nb = b.scaled(-1.0);
            let (_, nneg) = inertia(b, 1e-12);
            if nneg == 0 {
                return Err(EigenError::NoNegativeSpectrum);
            }
            let pairs = smallest_positive(a, &nb, k, opts).map_err(|e| match e {
                EigenError::FewerThanK {
                    requested, available, ..
                } => EigenError::FewerThanK {
                    sign: Sign::Negative,
                    requested,
                    available,
                },
                other => other,
            })?;
            Ok(pairs
                .into_iter()
                .map(|p| EigenPair {
                    eigenvalue: -p.eigenvalue,
                    normalization: Normalization::BMinus,
                    ..p
                })
                .collect())
        }
    }
}

/// The `k` smallest eigenvalues of `K u = kappa M u` with both matrices
/// positive definite, ascending, with `u^T M u = 1`.
pub fn dirichlet_eigs(
    k_mat: &SparseSymMatrix,
    m_mat: &SparseSymMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>, EigenError> {
    Ok(smallest_positive(k_mat, m_mat, k, opts)?
        .into_iter()
        .map(|p| EigenPair {
            normalization: Normalization::M,
            ..p
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pencil() {
        let a = SparseSymMatrix::identity(3).unwrap();
        let b = SparseSymMatrix::from_diagonal(&[2.0, -1.0, 0.0]).unwrap();
        let s = steklov_eigs(&a, &b, 1, &EigenOptions::default()).unwrap();
        assert!((s.positives[0].eigenvalue - 0.5).abs() < 1e-14);
        assert!((s.negatives[0].eigenvalue + 1.0).abs() < 1e-14);
        assert_eq!(s.positives.len(), 1);
        assert!(matches!(
            steklov_eigs(&a, &b, 2, &EigenOptions::default()),
            Err(EigenError::FewerThanK { .. })
        ));
    }

    #[test]
    fn dirichlet_diagonal() {
        let k = SparseSymMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let m = SparseSymMatrix::identity(3).unwrap();
        let e = dirichlet_eigs(&k, &m, 2, &EigenOptions::default()).unwrap();
        assert!((e[0].eigenvalue - 1.0).abs() < 1e-14);
        assert!((e[1].eigenvalue - 2.0).abs() < 1e-14);
        assert!(dirichlet_eigs(&k, &m, 4, &EigenOptions::default()).is_err());
    }

    #[test]
    fn nonnegative_density_has_no_negative_side() {
        let a = SparseSymMatrix::identity(3).unwrap();
        let b = SparseSymMatrix::from_diagonal(&[2.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            steklov_side(&a, &b, 1, Sign::Negative, &EigenOptions::default()),
            Err(EigenError::NoNegativeSpectrum)
        ));
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.0, -1e-20, -2.0, 1.0];
        fix_sign(&mut v);
        assert_eq!(v[2], 2.0);
    }
}
