use crate::eigen::{steklov_side, EigenOptions, Sign};
use crate::fem::field::NodalSquareWeighted;
use crate::fem::{
    assemble_boundary_mass, assemble_flux_load, assemble_stiffness, assemble_volume_mass, dot, energy,
    gauss2, grad_of, mean_tensor, p1_gradients, solve_pinned_mean_zero, DofMap, QuadPoint, ScalarField,
    TensorField,
};
use crate::geometry::{BoundaryTag, Mesh};

use super::data::{CorrectorField, CorrectorKind, EffectiveTensor, LocalSteklovData};
use super::HomogError;

/// `M_S(rho) = int_S rho ds` by two-point Gauss quadrature on the HOLE edges.
pub fn surface_average<F: ScalarField + ?Sized>(mesh: &Mesh, rho: &F) -> Result<f64, HomogError> {
    let mut total = 0.0;
    let mut any = false;
    for e in mesh.edges_with_tag(BoundaryTag::Hole) {
        any = true;
        let (p, q) = (mesh.nodes[e.a], mesh.nodes[e.b]);
        let len = mesh.edge_length(e);
        for t in gauss2() {
            let w = [1.0 - t, t];
            let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            let r = rho.at(&QuadPoint {
                x,
                nodes: &[e.a, e.b],
                weights: &w,
            })?;
            total += 0.5 * len * r;
        }
    }
    if !any {
        return Err(HomogError::NoHole);
    }
    Ok(total)
}

/// Solves the periodic, mean-zero problem `a(u, v) = <load, v>` on the cell.
fn solve_periodic<F: TensorField + ?Sized>(
    mesh: &Mesh,
    a: &F,
    load: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, f64), HomogError> {
    let dofs = DofMap::periodic(mesh, true)?;
    let k = dofs.reduce(&assemble_stiffness(mesh, a)?)?;
    let b = dofs.reduce_vector(load)?;
    let mass = assemble_volume_mass(mesh)?;
    let lumped = mass.row_sums();
    let w = dofs.reduce_vector(&lumped)?;
    let u = solve_pinned_mean_zero(&k, &b, 0, &w, tol)?;
    let nodal = dofs.expand(&u)?;
    let mean = dot(&lumped, &nodal) / lumped.iter().sum::<f64>();
    Ok((nodal, mean))
}

/// Cell corrector `chi^j`, `j` in {1, 2}: periodic, mean zero, with
/// `a(chi^j, v) = sum_k int a_kj d_k v`.
pub fn solve_corrector<F: TensorField + ?Sized>(
    mesh: &Mesh,
    a: &F,
    j: usize,
    tol: f64,
) -> Result<CorrectorField, HomogError> {
    let which = match j {
        1 => CorrectorKind::Chi1,
        2 => CorrectorKind::Chi2,
        other => return Err(HomogError::BadIndex(other)),
    };
    let load = assemble_flux_load(mesh, a, j - 1)?;
    let (values, mean) = solve_periodic(mesh, a, &load, tol)?;
    Ok(CorrectorField { which, values, mean })
}

fn check_len(mesh: &Mesh, f: &CorrectorField) -> Result<(), HomogError> {
    if f.values.len() != mesh.node_count() {
        return Err(HomogError::MeshMismatch {
            expected: mesh.node_count(),
            found: f.values.len(),
        });
    }
    Ok(())
}

/// `q_ij = int a_ij - sum_l int a_il d_l chi^j`.
pub fn effective_tensor<F: TensorField + ?Sized>(
    mesh: &Mesh,
    a: &F,
    chi1: &CorrectorField,
    chi2: &CorrectorField,
) -> Result<EffectiveTensor, HomogError> {
    check_len(mesh, chi1)?;
    check_len(mesh, chi2)?;
    let mut q = [[0.0; 2]; 2];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        let ab = mean_tensor(mesh, t, a)?;
        let full = [[ab[0], ab[1]], [ab[1], ab[2]]];
        for (j, chi) in [chi1, chi2].into_iter().enumerate() {
            let d = grad_of(&g, tri, &chi.values);
            for i in 0..2 {
                q[i][j] += area * (full[i][j] - (full[i][0] * d[0] + full[i][1] * d[1]));
            }
        }
    }
    Ok(EffectiveTensor {
        q11: q[0][0],
        q12: 0.5 * (q[0][1] + q[1][0]),
        q22: q[1][1],
        asymmetry: (q[0][1] - q[1][0]).abs(),
    })
}

/// Energy form `q_ij = int a (e_i - grad chi^i) . (e_j - grad chi^j)`.
pub fn effective_tensor_energy<F: TensorField + ?Sized>(
    mesh: &Mesh,
    a: &F,
    chi1: &CorrectorField,
    chi2: &CorrectorField,
) -> Result<EffectiveTensor, HomogError> {
    check_len(mesh, chi1)?;
    check_len(mesh, chi2)?;
    let mut q = [[0.0; 2]; 2];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        let ab = mean_tensor(mesh, t, a)?;
        let mut w = [[0.0; 2]; 2];
        for (j, chi) in [chi1, chi2].into_iter().enumerate() {
            let d = grad_of(&g, tri, &chi.values);
            w[j] = [if j == 0 { 1.0 } else { 0.0 } - d[0], if j == 1 { 1.0 } else { 0.0 } - d[1]];
        }
        for i in 0..2 {
            for j in 0..2 {
                let aw = [ab[0] * w[j][0] + ab[1] * w[j][1], ab[1] * w[j][0] + ab[2] * w[j][1]];
                q[i][j] += area * (aw[0] * w[i][0] + aw[1] * w[i][1]);
            }
        }
    }
    Ok(EffectiveTensor {
        q11: q[0][0],
        q12: 0.5 * (q[0][1] + q[1][0]),
        q22: q[1][1],
        asymmetry: (q[0][1] - q[1][0]).abs(),
    })
}

/// Surface corrector `chi^0`: periodic, mean zero, `a(chi^0, v) = int_S rho v`.
/// Requires `|M_S(rho)| <= tol_zero`.
pub fn solve_chi0<F: TensorField + ?Sized, R: ScalarField + ?Sized>(
    mesh: &Mesh,
    a: &F,
    rho: &R,
    tol_zero: f64,
    tol: f64,
) -> Result<CorrectorField, HomogError> {
    let m_s = surface_average(mesh, rho)?;
    if m_s.abs() > tol_zero {
        return Err(HomogError::Incompatible { m_s, tol: tol_zero });
    }
    let b = assemble_boundary_mass(mesh, rho, BoundaryTag::Hole)?;
    let load = b.row_sums();
    let (values, mean) = solve_periodic(mesh, a, &load, tol)?;
    Ok(CorrectorField {
        which: CorrectorKind::Chi0,
        values,
        mean,
    })
}

/// `nu^2 = a(chi^0, chi^0)`, cross-checked against `int_S rho chi^0`.
pub fn nu_squared<F: TensorField + ?Sized, R: ScalarField + ?Sized>(
    mesh: &Mesh,
    a: &F,
    rho: &R,
    chi0: &CorrectorField,
) -> Result<f64, HomogError> {
    check_len(mesh, chi0)?;
    let e = energy(mesh, a, &chi0.values, &chi0.values)?;
    let b = assemble_boundary_mass(mesh, rho, BoundaryTag::Hole)?;
    let s = dot(&b.row_sums(), &chi0.values);
    if (e - s).abs() > 1e-8 * e.abs().max(s.abs()).max(f64::MIN_POSITIVE) && (e - s).abs() > 1e-14 {
        return Err(HomogError::CrossCheck { energy: e, surface: s });
    }
    Ok(e)
}

/// Negative eigenvalue closest to zero of the periodic cell Steklov problem
/// and its eigenfunction, made positive and scaled to maximum one.
pub fn local_steklov_first_negative<F: TensorField + ?Sized, R: ScalarField + ?Sized>(
    mesh: &Mesh,
    a: &F,
    rho: &R,
    opts: &EigenOptions,
) -> Result<LocalSteklovData, HomogError> {
    let dofs = DofMap::periodic(mesh, false)?;
    let k = dofs.reduce(&assemble_stiffness(mesh, a)?)?;
    let bfull = assemble_boundary_mass(mesh, rho, BoundaryTag::Hole)?;
    let b = dofs.reduce(&bfull)?;
    let pair = steklov_side(&k, &b, 1, Sign::Negative, opts)?
        .into_iter()
        .next()
        .expect("one pair requested");
    let mut theta = dofs.expand(&pair.vector)?;
    if theta.iter().sum::<f64>() < 0.0 {
        theta.iter_mut().for_each(|v| *v = -*v);
    }
    let max = theta.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let min = theta.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if !(min > 0.0) {
        return Err(HomogError::SignChange { ratio: min / max });
    }
    theta.iter_mut().for_each(|v| *v /= max);
    let integral = bfull.bilinear(&theta, &theta);
    if !(integral < 0.0) {
        return Err(HomogError::NotNegative(integral));
    }
    Ok(LocalSteklovData {
        lambda1_neg: pair.eigenvalue,
        theta1_neg: theta,
        surface_integral_rho_theta_sq: integral,
        residual_norm: pair.residual_norm,
    })
}

/// Correctors and effective data of the weighted problem with `theta^2 a`
/// and `theta^2 rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeData {
    pub q_tilde: super::EffectiveTensor,
    pub m_s_rho_tilde: f64,
    pub chi_tilde: [CorrectorField; 2],
}

pub fn tilde_data<F: TensorField + ?Sized, R: ScalarField + ?Sized>(
    mesh: &Mesh,
    a: &F,
    rho: &R,
    theta: &[f64],
    tol: f64,
) -> Result<TildeData, HomogError> {
    if theta.len() != mesh.node_count() {
        return Err(HomogError::MeshMismatch {
            expected: mesh.node_count(),
            found: theta.len(),
        });
    }
    let at = NodalSquareWeighted { inner: a, w: theta };
    let rt = NodalSquareWeighted { inner: rho, w: theta };
    let c1 = solve_corrector(mesh, &at, 1, tol)?;
    let c2 = solve_corrector(mesh, &at, 2, tol)?;
    let q_tilde = effective_tensor(mesh, &at, &c1, &c2)?;
    let m_s_rho_tilde = surface_average(mesh, &rt)?;
    if !(m_s_rho_tilde < 0.0) {
        return Err(HomogError::NotNegative(m_s_rho_tilde));
    }
    Ok(TildeData {
        q_tilde,
        m_s_rho_tilde,
        chi_tilde: [c1, c2],
    })
}
