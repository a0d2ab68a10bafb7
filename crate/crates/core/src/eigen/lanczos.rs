//! Shift-invert Lanczos for `A v = lambda B v` with `A - sigma B` positive
//! definite.
//!
//! The operator `T = (A - sigma B)^{-1} B` is self-adjoint in the inner
//! product of `C = A - sigma B`. Its eigenvalues `nu = 1 / (lambda - sigma)`
//! order the eigenvalues above the shift from the smallest one down, and the
//! kernel of `B` maps to `nu = 0`. The basis is kept fully C-orthonormal and
//! the projected matrix `Q^T B Q` is diagonalized densely. When the wanted
//! Ritz pairs have converged the basis is extended from a fresh random start
//! vector; the result is accepted once that extension changes nothing, which
//! recovers partners of degenerate eigenvalues that a single Krylov sequence
//! cannot see.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fem::{dot, norm2, Cholesky, SparseSymMatrix};

#[derive(Debug, Clone)]
pub(crate) struct Ritz {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

pub(crate) enum Outcome {
    Converged(Vec<Ritz>),
    NotConverged(Vec<Ritz>),
}

pub(crate) struct Problem<'a> {
    pub a: &'a SparseSymMatrix,
    pub b: &'a SparseSymMatrix,
    pub chol: &'a Cholesky,
    pub sigma: f64,
}

pub(crate) struct Settings {
    pub want: usize,
    pub max_basis: usize,
    pub tol: f64,
    pub zero_tol: f64,
}

impl Problem<'_> {
    fn apply_c(&self, x: &[f64]) -> Vec<f64> {
        let mut ax = self.a.matvec(x);
        if self.sigma != 0.0 {
            let bx = self.b.matvec(x);
            for (u, v) in ax.iter_mut().zip(bx) {
                *u -= self.sigma * v;
            }
        }
        ax
    }

    pub fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        let av = self.a.matvec(v);
        let bv = self.b.matvec(v);
        let r: Vec<f64> = av.iter().zip(&bv).map(|(x, y)| x - lambda * y).collect();
        let den = norm2(&av);
        if den == 0.0 {
            f64::INFINITY
        } else {
            norm2(&r) / den
        }
    }
}

pub(crate) fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct Basis {
    q: Vec<Vec<f64>>,
    cq: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

impl Basis {
    fn len(&self) -> usize {
        self.q.len()
    }

    /// Top Ritz pairs above the shift, smallest `lambda` first.
    fn ritz(&self, p: &Problem<'_>, s: &Settings) -> Vec<Ritz> {
        let m = self.len();
        let hm = DMatrix::from_fn(m, m, |i, j| if i <= j { self.h[j][i] } else { self.h[i][j] });
        let eig = SymmetricEigen::new(hm);
        let mut order: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let n = p.a.dim();
        let mut out = Vec::with_capacity(s.want);
        for i in order {
            let lambda = p.sigma + 1.0 / eig.eigenvalues[i];
            if lambda.abs() <= s.zero_tol {
                continue;
            }
            let mut v = vec![0.0; n];
            for (c, qc) in self.q.iter().enumerate() {
                let y = eig.eigenvectors[(c, i)];
                for (vi, qi) in v.iter_mut().zip(qc) {
                    *vi += y * qi;
                }
            }
            let residual = p.residual(lambda, &v);
            out.push(Ritz {
                lambda,
                vector: v,
                residual,
            });
            if out.len() == s.want {
                break;
            }
        }
        out
    }
}

fn same_values(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-10 * x.abs().max(y.abs()))
}

pub(crate) fn lanczos(p: &Problem<'_>, s: &Settings, start: Vec<f64>, rng: &mut ChaCha8Rng) -> Outcome {
    let n = p.a.dim();
    let m_max = s.max_basis.min(n);
    let confirm_len = (2 * s.want).max(20);
    let mut basis = Basis {
        q: Vec::new(),
        cq: Vec::new(),
        h: Vec::new(),
    };
    let mut next = start;
    let mut confirm: Option<(Vec<f64>, usize)> = None;
    let mut since_check = 0usize;
    let mut fresh_starts = 0usize;
    let mut last = Vec::new();
    loop {
        let before = dot(&next, &p.apply_c(&next)).max(0.0).sqrt();
        let mut w = next;
        for _ in 0..2 {
            for (qi, cqi) in basis.q.iter().zip(&basis.cq) {
                let c = dot(cqi, &w);
                for (wj, qj) in w.iter_mut().zip(qi) {
                    *wj -= c * qj;
                }
            }
        }
        let cw = p.apply_c(&w);
        let nrm = dot(&w, &cw).max(0.0).sqrt();
        let exhausted = !(nrm > 1e-10 * before) || !nrm.is_finite();
        if exhausted {
            // invariant subspace: judge the current basis, then continue from a new direction
            if basis.len() >= s.want {
                let rr = basis.ritz(p, s);
                let ok = rr.len() == s.want && rr.iter().all(|r| r.residual <= s.tol);
                if basis.len() >= m_max || fresh_starts >= 8 {
                    return if ok { Outcome::Converged(rr) } else { Outcome::NotConverged(rr) };
                }
                if ok {
                    let vals: Vec<f64> = rr.iter().map(|r| r.lambda).collect();
                    match &confirm {
                        Some((prev, since)) if *since >= confirm_len && same_values(prev, &vals) => {
                            return Outcome::Converged(rr);
                        }
                        Some((prev, _)) if same_values(prev, &vals) => {}
                        _ => confirm = Some((vals, 0)),
                    }
                }
                last = rr;
            } else if basis.len() >= m_max || fresh_starts >= 8 {
                return Outcome::NotConverged(last);
            }
            fresh_starts += 1;
            next = random_vector(n, rng);
            continue;
        }
        let q: Vec<f64> = w.iter().map(|x| x / nrm).collect();
        let cq: Vec<f64> = cw.iter().map(|x| x / nrm).collect();
        let bq = p.b.matvec(&q);
        let col: Vec<f64> = basis
            .q
            .iter()
            .map(|qi| dot(qi, &bq))
            .chain(std::iter::once(dot(&q, &bq)))
            .collect();
        basis.h.push(col);
        basis.q.push(q);
        basis.cq.push(cq);
        next = p.chol.solve(&bq);
        since_check += 1;
        if let Some((_, since)) = confirm.as_mut() {
            *since += 1;
        }

        let full = basis.len() >= m_max;
        let check_every = (basis.len() / 10).max(5);
        if basis.len() < s.want || (since_check < check_every && !full) {
            continue;
        }
        since_check = 0;
        let rr = basis.ritz(p, s);
        let ok = rr.len() == s.want && rr.iter().all(|r| r.residual <= s.tol);
        if ok {
            let vals: Vec<f64> = rr.iter().map(|r| r.lambda).collect();
            match &confirm {
                None => {
                    confirm = Some((vals, 0));
                    next = random_vector(n, rng);
                }
                Some((prev, since)) if same_values(prev, &vals) => {
                    if *since >= confirm_len {
                        return Outcome::Converged(rr);
                    }
                }
                Some(_) => {
                    confirm = Some((vals, 0));
                    next = random_vector(n, rng);
                }
            }
        }
        if full {
            return if ok { Outcome::Converged(rr) } else { Outcome::NotConverged(rr) };
        }
        last = rr;
    }
}
