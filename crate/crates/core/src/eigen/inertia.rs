use nalgebra::{DMatrix, SymmetricEigen};

use crate::fem::{Cholesky, SparseSymMatrix};

/// Blocks larger than this are first tested for definiteness by sparse
/// Cholesky before falling back to a dense eigendecomposition.
const DENSE_LIMIT: usize = 64;

/// Sign of a large block when it is definite.
fn definite_block(b: &SparseSymMatrix, members: &[usize], local: &[usize]) -> Option<i8> {
    let triplets: Vec<(usize, usize, f64)> = b
        .upper_entries()
        .filter(|&(i, _, _)| local[i] != usize::MAX)
        .map(|(i, j, v)| (local[i], local[j], v))
        .collect();
    let block = SparseSymMatrix::from_triplets(members.len(), &triplets).ok()?;
    if Cholesky::factor(&block).is_ok() {
        return Some(1);
    }
    if Cholesky::factor(&block.scaled(-1.0)).is_ok() {
        return Some(-1);
    }
    None
}

/// Numbers of positive and negative eigenvalues of a symmetric matrix whose
/// nonzero pattern splits into connected blocks.
///
/// Eigenvalues below `rel_tol * max|eig|` in magnitude count as zero. Large
/// definite blocks are counted without computing their eigenvalues.
pub fn inertia(b: &SparseSymMatrix, rel_tol: f64) -> (usize, usize) {
    let n = b.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut active = vec![false; n];
    for (i, j, v) in b.upper_entries() {
        if v != 0.0 {
            active[i] = true;
            active[j] = true;
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        if active[i] {
            let r = find(&mut parent, i);
            blocks.entry(r).or_default().push(i);
        }
    }
    let mut eigs = Vec::new();
    let (mut definite_pos, mut definite_neg) = (0, 0);
    let mut local = vec![usize::MAX; n];
    for members in blocks.values() {
        let m = members.len();
        if m > DENSE_LIMIT {
            for (k, &i) in members.iter().enumerate() {
                local[i] = k;
            }
            let sign = definite_block(b, members, &local);
            for &i in members {
                local[i] = usize::MAX;
            }
            match sign {
                Some(1) => {
                    definite_pos += m;
                    continue;
                }
                Some(_) => {
                    definite_neg += m;
                    continue;
                }
                None => {}
            }
        }
        let dense = DMatrix::from_fn(m, m, |r, c| b.get(members[r], members[c]));
        eigs.extend(SymmetricEigen::new(dense).eigenvalues.iter().copied());
    }
    let scale = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = rel_tol * scale;
    let pos = eigs.iter().filter(|&&v| v > cut).count();
    let neg = eigs.iter().filter(|&&v| v < -cut).count();
    (pos + definite_pos, neg + definite_neg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_counts() {
        let b = SparseSymMatrix::from_diagonal(&[2.0, -1.0, 0.0]).unwrap();
        assert_eq!(inertia(&b, 1e-12), (1, 1));
    }

    #[test]
    fn large_definite_blocks() {
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let b = SparseSymMatrix::from_triplets(n, &t).unwrap();
        assert_eq!(inertia(&b, 1e-12), (n, 0));
        assert_eq!(inertia(&b.scaled(-1.0), 1e-12), (0, n));
        // indefinite: falls back to the dense path
        let shifted = b.add_scaled(-2.0, &SparseSymMatrix::identity(n).unwrap()).unwrap();
        assert_eq!(inertia(&shifted, 1e-12), (n / 2, n / 2));
    }

    #[test]
    fn coupled_block() {
        let b = SparseSymMatrix::from_triplets(3, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(inertia(&b, 1e-12), (1, 1));
    }
}
