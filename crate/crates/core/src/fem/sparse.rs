use faer::sparse::{SparseColMat, Triplet};

use super::FemError;

/// Symmetric sparse matrix stored as its upper triangle in compressed rows.
/// Column indices within a row are strictly increasing; duplicates from
/// assembly are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds the matrix from `(i, j, v)` triplets; entries below the diagonal
    /// are mirrored into the upper triangle.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, FemError> {
        if dim == 0 {
            return Err(FemError::EmptySpace);
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(FemError::DimensionMismatch {
                    expected: dim,
                    found: i.max(j) + 1,
                });
            }
            if !v.is_finite() {
                return Err(FemError::NonFinite);
            }
            entries.push((i.min(j), i.max(j), v));
        }
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *vals.last_mut().expect("previous entry") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn identity(dim: usize) -> Result<Self, FemError> {
        let t: Vec<_> = (0..dim).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(dim, &t)
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self, FemError> {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), &t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries `(i, j, v)` with `i <= j`, in canonical order.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p], self.vals[p]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(p) => self.vals[self.row_ptr[i] + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim, "matvec dimension");
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (j, v) = (self.cols[p], self.vals[p]);
                acc += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
            y[i] += acc;
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    /// Sum of all entries of the full symmetric matrix.
    pub fn total_sum(&self) -> f64 {
        self.upper_entries()
            .map(|(i, j, v)| if i == j { v } else { 2.0 * v })
            .sum()
    }

    /// Row sums of the full symmetric matrix.
    pub fn row_sums(&self) -> Vec<f64> {
        self.matvec(&vec![1.0; self.dim])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            vals: self.vals.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Result<Self, FemError> {
        if other.dim != self.dim {
            return Err(FemError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let t: Vec<_> = self
            .upper_entries()
            .chain(other.upper_entries().map(|(i, j, v)| (i, j, c * v)))
            .collect();
        Self::from_triplets(self.dim, &t)
    }

    /// Largest absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0f64; self.dim];
        for (i, j, v) in self.upper_entries() {
            col[j] += v.abs();
            if i != j {
                col[i] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.upper_entries() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Upper triangle as a faer column-major sparse matrix.
    pub(crate) fn to_faer_upper(&self) -> SparseColMat<usize, f64> {
        let t: Vec<_> = self
            .upper_entries()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.dim, self.dim, &t)
            .expect("canonical entries are valid triplets")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_sum_and_lower_mirrors() {
        let m = SparseSymMatrix::from_triplets(3, &[(0, 1, 1.0), (1, 0, 2.0), (2, 2, 5.0), (0, 0, 1.0)])
            .unwrap();
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![4.0, 3.0, 5.0]);
        assert_eq!(m.total_sum(), 12.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SparseSymMatrix::from_triplets(0, &[]).is_err());
        assert!(SparseSymMatrix::from_triplets(2, &[(2, 0, 1.0)]).is_err());
        assert!(SparseSymMatrix::from_triplets(2, &[(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn norm_and_dense() {
        let m = SparseSymMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0)]).unwrap();
        assert_eq!(m.norm1(), 3.0);
        let d = m.to_dense();
        assert_eq!(d[(1, 0)], -1.0);
        let s = m.add_scaled(2.0, &SparseSymMatrix::identity(2).unwrap()).unwrap();
        assert_eq!(s.diagonal(), vec![4.0, 4.0]);
    }
}
