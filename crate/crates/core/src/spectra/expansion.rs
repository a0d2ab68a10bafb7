use crate::fem::{grad_of, p1_gradients};
use crate::geometry::{Mesh, PointLocator};
use crate::homog::{HomogenizedData, SignCase};

use super::{LimitPair, SpectraError};

/// Which two-scale ansatz to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    /// `u0 - eps sum_j d_j u0 chi^j`.
    Plain,
    /// `u0 + eps (lambda0 u0 chi^0 - sum_j d_j u0 chi^j)`.
    Critical { lambda0: f64 },
    /// `theta (v0 - eps sum_j d_j v0 chi~^j)`.
    Factorized,
}

impl Branch {
    /// The ansatz of one end of the spectrum for the case in `data`.
    pub fn for_side(data: &HomogenizedData, sign: crate::eigen::Sign, lambda0: f64) -> Self {
        use crate::eigen::Sign;
        match (data.case, sign) {
            (SignCase::Critical, _) => Branch::Critical { lambda0 },
            (SignCase::Positive, Sign::Positive) | (SignCase::Negative, Sign::Negative) => Branch::Plain,
            _ => Branch::Factorized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionValues {
    pub leading: f64,
    pub corrected: f64,
}

/// Evaluator of `x -> u0(x) + eps u1(x, x / eps)`.
#[derive(Debug, Clone)]
pub struct CorrectorExpansion {
    eps: f64,
    branch: Branch,
    omega: PointLocator,
    u0: Vec<f64>,
    grad: [Vec<f64>; 2],
    cell: PointLocator,
    chi: [Vec<f64>; 2],
    chi0: Option<Vec<f64>>,
    theta: Option<Vec<f64>>,
}

/// Area-weighted nodal average of the piecewise constant gradient.
fn recovered_gradient(mesh: &Mesh, u: &[f64]) -> [Vec<f64>; 2] {
    let n = mesh.node_count();
    let mut g = [vec![0.0; n], vec![0.0; n]];
    let mut w = vec![0.0; n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (dg, area) = p1_gradients(mesh, t);
        let d = grad_of(&dg, tri, u);
        for &v in tri {
            g[0][v] += area * d[0];
            g[1][v] += area * d[1];
            w[v] += area;
        }
    }
    for v in 0..n {
        g[0][v] /= w[v];
        g[1][v] /= w[v];
    }
    g
}

pub fn build_corrector_expansion(
    limit: &LimitPair,
    omega: &Mesh,
    data: &HomogenizedData,
    cell: &Mesh,
    branch: Branch,
    eps: f64,
) -> Result<CorrectorExpansion, SpectraError> {
    if limit.vector.len() != omega.node_count() {
        return Err(SpectraError::Invalid("limit vector does not match the limit mesh".into()));
    }
    if data.chi[0].values.len() != cell.node_count() {
        return Err(SpectraError::Invalid("correctors do not match the cell mesh".into()));
    }
    let (chi, chi0, theta) = match branch {
        Branch::Plain => ([data.chi[0].values.clone(), data.chi[1].values.clone()], None, None),
        Branch::Critical { .. } => {
            let c = data
                .critical
                .as_ref()
                .ok_or_else(|| SpectraError::Invalid("missing critical data".into()))?;
            (
                [data.chi[0].values.clone(), data.chi[1].values.clone()],
                Some(c.chi0.values.clone()),
                None,
            )
        }
        Branch::Factorized => {
            let f = data
                .factorization
                .as_ref()
                .ok_or_else(|| SpectraError::Invalid("missing cell eigenpair data".into()))?;
            (
                [f.chi_tilde[0].values.clone(), f.chi_tilde[1].values.clone()],
                None,
                Some(f.local.theta1_neg.clone()),
            )
        }
    };
    Ok(CorrectorExpansion {
        eps,
        branch,
        omega: PointLocator::new(omega),
        u0: limit.vector.clone(),
        grad: recovered_gradient(omega, &limit.vector),
        cell: PointLocator::new(cell),
        chi,
        chi0,
        theta,
    })
}

impl CorrectorExpansion {
    pub fn eval(&self, x: [f64; 2]) -> Result<ExpansionValues, SpectraError> {
        let miss = || SpectraError::PointLocation(x[0], x[1]);
        let u0 = self.omega.interpolate(&self.u0, x).ok_or_else(miss)?;
        let d = [
            self.omega.interpolate(&self.grad[0], x).ok_or_else(miss)?,
            self.omega.interpolate(&self.grad[1], x).ok_or_else(miss)?,
        ];
        let wrap = |t: f64| {
            let s = t / self.eps;
            s - s.floor()
        };
        let y = [wrap(x[0]), wrap(x[1])];
        let ymiss = || SpectraError::PointLocation(y[0], y[1]);
        let (tri, l) = self.cell.locate(y).ok_or_else(ymiss)?;
        let nodes = self.cell.triangle(tri);
        let at = |f: &[f64]| l[0] * f[nodes[0]] + l[1] * f[nodes[1]] + l[2] * f[nodes[2]];
        let mut u1 = -(d[0] * at(&self.chi[0]) + d[1] * at(&self.chi[1]));
        if let (Branch::Critical { lambda0 }, Some(chi0)) = (self.branch, &self.chi0) {
            u1 += lambda0 * u0 * at(chi0);
        }
        let weight = self.theta.as_ref().map_or(1.0, |t| at(t));
        Ok(ExpansionValues {
            leading: weight * u0,
            corrected: weight * (u0 + self.eps * u1),
        })
    }

    /// Values at every node of `mesh`.
    pub fn eval_nodes(&self, mesh: &Mesh) -> Result<(Vec<f64>, Vec<f64>), SpectraError> {
        let mut lead = Vec::with_capacity(mesh.node_count());
        let mut corr = Vec::with_capacity(mesh.node_count());
        for &p in &mesh.nodes {
            let v = self.eval(p)?;
            lead.push(v.leading);
            corr.push(v.corrected);
        }
        Ok((lead, corr))
    }
}
