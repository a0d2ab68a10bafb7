//! Manufactured solution `u = sin(pi x) sin(pi y)` of `-div grad u = 2 pi^2 u`
//! on the unit square: the P1 error in L2 must decay at second order.

use std::f64::consts::PI;

use steklov_core::fem::field::ConstTensor;
use steklov_core::fem::{assemble_stiffness, assemble_volume_mass, solve_spd, DofMap};
use steklov_core::geometry::build_square_mesh;

fn l2_error(m: usize) -> f64 {
    let mesh = build_square_mesh(m).unwrap();
    let exact: Vec<f64> = mesh.nodes.iter().map(|p| (PI * p[0]).sin() * (PI * p[1]).sin()).collect();
    let f: Vec<f64> = exact.iter().map(|u| 2.0 * PI * PI * u).collect();
    let dofs = DofMap::dirichlet(&mesh).unwrap();
    let mass = assemble_volume_mass(&mesh).unwrap();
    let k = dofs.reduce(&assemble_stiffness(&mesh, &ConstTensor([1.0, 0.0, 1.0])).unwrap()).unwrap();
    let b = dofs.reduce_vector(&mass.matvec(&f)).unwrap();
    let u = dofs.expand(&solve_spd(&k, &b, 1e-13).unwrap()).unwrap();
    let e: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
    mass.bilinear(&e, &e).sqrt()
}

#[test]
fn second_order_in_l2() {
    let errors: Vec<f64> = [8, 16, 32, 64].iter().map(|&m| l2_error(m)).collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "observed order {order} from {errors:?}");
    }
}
