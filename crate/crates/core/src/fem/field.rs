//! Coefficient sources evaluated at quadrature points.
//!
//! A quadrature point carries its physical position and the P1 interpolation
//! data of the element it lies in, so that fields known only at mesh nodes
//! can be combined with closed-form coefficients.

use crate::coeff::{CoefficientTensor, DensityField};

use super::FemError;

/// Physical position plus the element nodes and their barycentric weights.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint<'a> {
    pub x: [f64; 2],
    pub nodes: &'a [usize],
    pub weights: &'a [f64],
}

impl QuadPoint<'_> {
    /// P1 interpolation of the nodal vector `values`.
    pub fn interpolate(&self, values: &[f64]) -> f64 {
        self.nodes.iter().zip(self.weights).map(|(&n, &w)| w * values[n]).sum()
    }
}

/// Symmetric tensor field returning `[a11, a12, a22]`.
pub trait TensorField: Sync {
    fn at(&self, q: &QuadPoint<'_>) -> Result<[f64; 3], FemError>;
}

pub trait ScalarField: Sync {
    fn at(&self, q: &QuadPoint<'_>) -> Result<f64, FemError>;
}

impl TensorField for CoefficientTensor {
    fn at(&self, q: &QuadPoint<'_>) -> Result<[f64; 3], FemError> {
        Ok(self.eval(q.x)?)
    }
}

impl ScalarField for DensityField {
    fn at(&self, q: &QuadPoint<'_>) -> Result<f64, FemError> {
        Ok(self.eval(q.x)?)
    }
}

/// Constant symmetric tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstTensor(pub [f64; 3]);

impl TensorField for ConstTensor {
    fn at(&self, _: &QuadPoint<'_>) -> Result<[f64; 3], FemError> {
        Ok(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstScalar(pub f64);

impl ScalarField for ConstScalar {
    fn at(&self, _: &QuadPoint<'_>) -> Result<f64, FemError> {
        Ok(self.0)
    }
}

/// Evaluates the inner field at `y = n x mod 1`, wrapping into `[0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct Periodized<'a, F: ?Sized> {
    pub inner: &'a F,
    pub n: usize,
}

fn wrap(x: [f64; 2], n: usize) -> [f64; 2] {
    let nf = n as f64;
    let w = |t: f64| {
        let s = nf * t;
        s - s.floor()
    };
    [w(x[0]), w(x[1])]
}

impl<F: TensorField + ?Sized> TensorField for Periodized<'_, F> {
    fn at(&self, q: &QuadPoint<'_>) -> Result<[f64; 3], FemError> {
        self.inner.at(&QuadPoint {
            x: wrap(q.x, self.n),
            ..*q
        })
    }
}

impl<F: ScalarField + ?Sized> ScalarField for Periodized<'_, F> {
    fn at(&self, q: &QuadPoint<'_>) -> Result<f64, FemError> {
        self.inner.at(&QuadPoint {
            x: wrap(q.x, self.n),
            ..*q
        })
    }
}

/// Inner field multiplied by the square of a P1 nodal field `w`.
#[derive(Debug, Clone, Copy)]
pub struct NodalSquareWeighted<'a, F: ?Sized> {
    pub inner: &'a F,
    pub w: &'a [f64],
}

impl<F: TensorField + ?Sized> TensorField for NodalSquareWeighted<'_, F> {
    fn at(&self, q: &QuadPoint<'_>) -> Result<[f64; 3], FemError> {
        let s = q.interpolate(self.w).powi(2);
        let a = self.inner.at(q)?;
        Ok([s * a[0], s * a[1], s * a[2]])
    }
}

impl<F: ScalarField + ?Sized> ScalarField for NodalSquareWeighted<'_, F> {
    fn at(&self, q: &QuadPoint<'_>) -> Result<f64, FemError> {
        Ok(q.interpolate(self.w).powi(2) * self.inner.at(q)?)
    }
}

/// Tensor field multiplied by a constant.
#[derive(Debug, Clone, Copy)]
pub struct ScaledTensor<'a, F: ?Sized> {
    pub inner: &'a F,
    pub c: f64,
}

impl<F: TensorField + ?Sized> TensorField for ScaledTensor<'_, F> {
    fn at(&self, q: &QuadPoint<'_>) -> Result<[f64; 3], FemError> {
        let a = self.inner.at(q)?;
        Ok([self.c * a[0], self.c * a[1], self.c * a[2]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodized_wraps_half_open() {
        let rho = DensityField::parse("y1 + 10*y2").unwrap();
        let p = Periodized { inner: &rho, n: 4 };
        let q = QuadPoint {
            x: [0.3, 0.55],
            nodes: &[],
            weights: &[],
        };
        let v = p.at(&q).unwrap();
        assert!((v - (0.2 + 10.0 * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn nodal_weight_interpolates() {
        let w = [1.0, 3.0];
        let f = NodalSquareWeighted {
            inner: &ConstScalar(2.0),
            w: &w,
        };
        let q = QuadPoint {
            x: [0.0, 0.0],
            nodes: &[0, 1],
            weights: &[0.5, 0.5],
        };
        assert_eq!(f.at(&q).unwrap(), 8.0);
    }
}
