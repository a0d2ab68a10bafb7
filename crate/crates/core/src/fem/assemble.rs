use crate::geometry::{BoundaryTag, Mesh};

use super::field::{QuadPoint, ScalarField, TensorField};
use super::{FemError, SparseSymMatrix};

/// Gradients of the three P1 basis functions of triangle `t`, and its area.
pub fn p1_gradients(mesh: &Mesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let [p0, p1, p2] = mesh.triangle_points(t);
    let area = 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
    let inv = 1.0 / (2.0 * area);
    let g = [
        [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
        [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
        [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
    ];
    (g, area)
}

/// Edge-midpoint rule: barycentric points and equal weights `1/3`.
pub const MIDPOINT_RULE: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

pub fn bary_point(pts: &[[f64; 2]; 3], l: &[f64; 3]) -> [f64; 2] {
    [
        l[0] * pts[0][0] + l[1] * pts[1][0] + l[2] * pts[2][0],
        l[0] * pts[0][1] + l[1] * pts[1][1] + l[2] * pts[2][1],
    ]
}

/// Area-weighted average of the tensor over the midpoint rule of triangle `t`.
pub fn mean_tensor<F: TensorField + ?Sized>(mesh: &Mesh, t: usize, a: &F) -> Result<[f64; 3], FemError> {
    let pts = mesh.triangle_points(t);
    let nodes = mesh.triangles[t];
    let mut acc = [0.0; 3];
    for l in &MIDPOINT_RULE {
        let v = a.at(&QuadPoint {
            x: bary_point(&pts, l),
            nodes: &nodes,
            weights: l,
        })?;
        for k in 0..3 {
            acc[k] += v[k] / 3.0;
        }
    }
    Ok(acc)
}

fn apply(a: [f64; 3], g: [f64; 2]) -> [f64; 2] {
    [a[0] * g[0] + a[1] * g[1], a[1] * g[0] + a[2] * g[1]]
}

/// Stiffness matrix `K_ij = sum_K int_K a grad(phi_j) . grad(phi_i)`.
///
/// With P1 gradients constant per triangle, the midpoint rule amounts to
/// integrating the triangle-averaged tensor.
pub fn assemble_stiffness<F: TensorField + ?Sized>(mesh: &Mesh, a: &F) -> Result<SparseSymMatrix, FemError> {
    let mut trip = Vec::with_capacity(6 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        let abar = mean_tensor(mesh, t, a)?;
        for i in 0..3 {
            for j in i..3 {
                let v = area * dot2(apply(abar, g[j]), g[i]);
                trip.push((tri[i], tri[j], v));
            }
        }
    }
    SparseSymMatrix::from_triplets(mesh.node_count(), &trip)
}

/// Two-point Gauss abscissae on `[0, 1]`.
pub fn gauss2() -> [f64; 2] {
    let d = 0.5 / 3f64.sqrt();
    [0.5 - d, 0.5 + d]
}

/// Boundary mass `B_ij = int_{edges with tag} rho phi_j phi_i ds`.
pub fn assemble_boundary_mass<F: ScalarField + ?Sized>(
    mesh: &Mesh,
    rho: &F,
    tag: BoundaryTag,
) -> Result<SparseSymMatrix, FemError> {
    let mut trip = Vec::new();
    for e in mesh.edges_with_tag(tag) {
        let (p, q) = (mesh.nodes[e.a], mesh.nodes[e.b]);
        let len = mesh.edge_length(e);
        let nodes = [e.a, e.b];
        let mut local = [0.0; 3];
        for t in gauss2() {
            let w = [1.0 - t, t];
            let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            let r = rho.at(&QuadPoint {
                x,
                nodes: &nodes,
                weights: &w,
            })?;
            let s = 0.5 * len * r;
            local[0] += s * w[0] * w[0];
            local[1] += s * w[0] * w[1];
            local[2] += s * w[1] * w[1];
        }
        trip.push((e.a, e.a, local[0]));
        trip.push((e.a, e.b, local[1]));
        trip.push((e.b, e.b, local[2]));
    }
    if trip.is_empty() {
        return Err(FemError::NoTaggedEdges(tag));
    }
    SparseSymMatrix::from_triplets(mesh.node_count(), &trip)
}

/// Consistent P1 mass matrix.
pub fn assemble_volume_mass(mesh: &Mesh) -> Result<SparseSymMatrix, FemError> {
    let mut trip = Vec::with_capacity(6 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.triangle_area(t);
        for i in 0..3 {
            for j in i..3 {
                let v = if i == j { a / 6.0 } else { a / 12.0 };
                trip.push((tri[i], tri[j], v));
            }
        }
    }
    SparseSymMatrix::from_triplets(mesh.node_count(), &trip)
}

/// Load vector `b_i = int a e_j . grad(phi_i)`, i.e. `sum_k int a_kj d_k phi_i`.
pub fn assemble_flux_load<F: TensorField + ?Sized>(mesh: &Mesh, a: &F, j: usize) -> Result<Vec<f64>, FemError> {
    let mut b = vec![0.0; mesh.node_count()];
    let e = if j == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        let ae = apply(mean_tensor(mesh, t, a)?, e);
        for i in 0..3 {
            b[tri[i]] += area * dot2(ae, g[i]);
        }
    }
    Ok(b)
}

/// `int a grad(u) . grad(v)` for nodal fields `u`, `v`.
pub fn energy<F: TensorField + ?Sized>(mesh: &Mesh, a: &F, u: &[f64], v: &[f64]) -> Result<f64, FemError> {
    let mut s = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        let gu = grad_of(&g, tri, u);
        let gv = grad_of(&g, tri, v);
        s += area * dot2(apply(mean_tensor(mesh, t, a)?, gu), gv);
    }
    Ok(s)
}

/// Gradient of a P1 field on one triangle.
pub fn grad_of(g: &[[f64; 2]; 3], tri: &[usize; 3], u: &[f64]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for k in 0..3 {
        out[0] += u[tri[k]] * g[k][0];
        out[1] += u[tri[k]] * g[k][1];
    }
    out
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{preset_tensor, CoefficientTensor, DensityField, Expr};
    use crate::fem::field::{ConstScalar, ConstTensor};
    use crate::geometry::{build_cell_mesh, BoundaryEdge, CellGeometry};

    fn reference_triangle() -> Mesh {
        Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![BoundaryEdge {
                a: 0,
                b: 1,
                tag: BoundaryTag::Hole,
            }],
            periodic_pairs: vec![],
        }
    }

    #[test]
    fn reference_element_stiffness() {
        let k = assemble_stiffness(&reference_triangle(), &ConstTensor([1.0, 0.0, 1.0])).unwrap();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reference_edge_and_volume_mass() {
        let mut mesh = reference_triangle();
        mesh.nodes[1] = [2.5, 0.0];
        let b = assemble_boundary_mass(&mesh, &ConstScalar(1.0), BoundaryTag::Hole).unwrap();
        assert!((b.get(0, 0) - 2.5 / 3.0).abs() < 1e-15);
        assert!((b.get(0, 1) - 2.5 / 6.0).abs() < 1e-15);
        assert_eq!(b.get(2, 2), 0.0);
        let m = assemble_volume_mass(&mesh).unwrap();
        let a = mesh.triangle_area(0);
        assert!((m.get(0, 0) - a / 6.0).abs() < 1e-15);
        assert!((m.get(1, 2) - a / 12.0).abs() < 1e-15);
        assert!(matches!(
            assemble_boundary_mass(&mesh, &ConstScalar(1.0), BoundaryTag::Dirichlet),
            Err(FemError::NoTaggedEdges(_))
        ));
    }

    #[test]
    fn stiffness_is_linear_in_coefficient() {
        let mesh = build_cell_mesh(&CellGeometry::square(0.5, 8)).unwrap();
        let a = preset_tensor("smooth-checker").unwrap();
        let k1 = assemble_stiffness(&mesh, &a).unwrap();
        let k3 = assemble_stiffness(&mesh, &a.scaled(3.0)).unwrap();
        for ((i, j, v), (_, _, w)) in k1.upper_entries().zip(k3.upper_entries()) {
            assert!((w - 3.0 * v).abs() <= 1e-15 * w.abs().max(1.0), "({i},{j})");
        }
    }

    #[test]
    fn stiffness_row_sums_vanish() {
        let mesh = build_cell_mesh(&CellGeometry::disk(0.25, 16)).unwrap();
        let k = assemble_stiffness(&mesh, &preset_tensor("smooth-checker").unwrap()).unwrap();
        assert!(k.row_sums().iter().all(|s| s.abs() <= 1e-10));
    }

    /// Seven-point (degree 5) rule on the reference triangle.
    fn seven_point_stiffness(mesh: &Mesh, a: &CoefficientTensor) -> SparseSymMatrix {
        let (a1, b1) = (0.059_715_871_789_770, 0.470_142_064_105_115);
        let (a2, b2) = (0.797_426_985_353_087, 0.101_286_507_323_456);
        let (w0, w1, w2) = (0.225, 0.132_394_152_788_506, 0.125_939_180_544_827);
        let mut rule = vec![([1.0 / 3.0; 3], w0)];
        for (a, b, w) in [(a1, b1, w1), (a2, b2, w2)] {
            rule.push(([a, b, b], w));
            rule.push(([b, a, b], w));
            rule.push(([b, b, a], w));
        }
        let mut trip = Vec::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let (g, area) = p1_gradients(mesh, t);
            let pts = mesh.triangle_points(t);
            let mut abar = [0.0; 3];
            for (l, w) in &rule {
                let v = a.eval(bary_point(&pts, l)).unwrap();
                for k in 0..3 {
                    abar[k] += w * v[k];
                }
            }
            for i in 0..3 {
                for j in i..3 {
                    trip.push((tri[i], tri[j], area * dot2(apply(abar, g[j]), g[i])));
                }
            }
        }
        SparseSymMatrix::from_triplets(mesh.node_count(), &trip).unwrap()
    }

    #[test]
    fn midpoint_rule_matches_high_order_oracle() {
        let mesh = build_cell_mesh(&CellGeometry::square(0.5, 8)).unwrap();
        let a = preset_tensor("smooth-checker").unwrap();
        let k = assemble_stiffness(&mesh, &a).unwrap();
        let oracle = seven_point_stiffness(&mesh, &a);
        for (i, j, v) in oracle.upper_entries() {
            assert!((k.get(i, j) - v).abs() <= 1e-3, "({i},{j}): {} vs {v}", k.get(i, j));
        }
    }

    #[test]
    fn boundary_mass_totals() {
        let mesh = build_cell_mesh(&CellGeometry::square(0.5, 8)).unwrap();
        let odd = DensityField::parse("sin(2*pi*y1)").unwrap();
        let b = assemble_boundary_mass(&mesh, &odd, BoundaryTag::Hole).unwrap();
        assert!(b.total_sum().abs() <= 1e-12);
        let one = DensityField::new(Expr::Num(1.0));
        let b = assemble_boundary_mass(&mesh, &one, BoundaryTag::Hole).unwrap();
        assert!((b.total_sum() - 2.0).abs() <= 1e-12);

        let g = CellGeometry::disk(0.25, 16);
        let mesh = build_cell_mesh(&g).unwrap();
        let b = assemble_boundary_mass(&mesh, &one, BoundaryTag::Hole).unwrap();
        // chord sum of the realized boundary polygon
        let c = g.hole_center;
        let mut ang: Vec<f64> = mesh
            .tagged_nodes(BoundaryTag::Hole)
            .iter()
            .map(|&v| (mesh.nodes[v][1] - c[1]).atan2(mesh.nodes[v][0] - c[0]))
            .collect();
        ang.sort_by(f64::total_cmp);
        let n = ang.len();
        let chords: f64 = (0..n)
            .map(|i| {
                let d = if i + 1 < n { ang[i + 1] - ang[i] } else { ang[0] + std::f64::consts::TAU - ang[i] };
                2.0 * 0.25 * (0.5 * d).sin()
            })
            .sum();
        assert!((b.total_sum() - chords).abs() <= 1e-12);
    }

    #[test]
    fn full_square_mass_total() {
        let mesh = build_cell_mesh(&CellGeometry::no_hole(4)).unwrap();
        let m = assemble_volume_mass(&mesh).unwrap();
        assert!((m.total_sum() - 1.0).abs() <= 1e-14);
    }
}
