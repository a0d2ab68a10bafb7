use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::Llt;
use faer::{Conj, Mat, Side};

use super::sparse::{dot, norm2};
use super::{FemError, SparseSymMatrix};

pub const DEFAULT_CG_TOL: f64 = 1e-10;

/// Jacobi-preconditioned conjugate gradients. Stops when
/// `||b - A x|| <= tol ||b||`; fails after `20 * dim` iterations.
pub fn solve_spd(a: &SparseSymMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>, FemError> {
    let n = a.dim();
    if b.len() != n {
        return Err(FemError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n;
    for _ in 0..max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(FemError::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::NonConvergence {
        iterations: max_iter,
        residual: norm2(&r) / bnorm,
    })
}

/// Solves a singular system whose kernel is the constants: the right side
/// is projected onto zero sum, unknown `pin` is fixed to zero, and the
/// solution is shifted so that its `weights`-weighted mean vanishes.
pub fn solve_pinned_mean_zero(
    a: &SparseSymMatrix,
    b: &[f64],
    pin: usize,
    weights: &[f64],
    tol: f64,
) -> Result<Vec<f64>, FemError> {
    let n = a.dim();
    if b.len() != n || weights.len() != n || pin >= n {
        return Err(FemError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let shift = b.iter().sum::<f64>() / n as f64;
    let skip = |i: usize| if i > pin { i - 1 } else { i };
    let trip: Vec<_> = a
        .upper_entries()
        .filter(|&(i, j, _)| i != pin && j != pin)
        .map(|(i, j, v)| (skip(i), skip(j), v))
        .collect();
    let reduced = SparseSymMatrix::from_triplets(n - 1, &trip)?;
    let rhs: Vec<f64> = (0..n).filter(|&i| i != pin).map(|i| b[i] - shift).collect();
    let y = solve_spd(&reduced, &rhs, tol)?;
    let mut u = Vec::with_capacity(n);
    u.extend_from_slice(&y[..pin]);
    u.push(0.0);
    u.extend_from_slice(&y[pin..]);
    let mean = dot(&u, weights) / weights.iter().sum::<f64>();
    u.iter_mut().for_each(|v| *v -= mean);
    Ok(u)
}

/// Sparse Cholesky factorization `A = L L^T`.
pub struct Cholesky {
    llt: Llt<usize, f64>,
    dim: usize,
}

impl std::fmt::Debug for Cholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cholesky").field("dim", &self.dim).finish()
    }
}

impl Cholesky {
    /// Fails with [`FemError::NotPositiveDefinite`] when a pivot is not positive.
    pub fn factor(a: &SparseSymMatrix) -> Result<Self, FemError> {
        static SEQUENTIAL: std::sync::Once = std::sync::Once::new();
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let llt = a
            .to_faer_upper()
            .sp_cholesky(Side::Upper)
            .map_err(|_| FemError::NotPositiveDefinite)?;
        Ok(Self { llt, dim: a.dim() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim, "rhs dimension");
        let mut m = Mat::<f64>::from_fn(self.dim, 1, |i, _| b[i]);
        self.llt.solve_in_place_with_conj(Conj::No, m.as_mut());
        (0..self.dim).map(|i| m[(i, 0)]).collect()
    }
}
