//! Shared fixtures for the benchmarks.

use steklov_core::coeff::{preset_density, preset_tensor, CoefficientTensor, DensityField};
use steklov_core::geometry::CellGeometry;

/// Identity conductivity, centered square hole of side 0.5 and the
/// density `0.5 + sin(2 pi y1)`.
pub fn positive_fixture(m: usize) -> (CellGeometry, CoefficientTensor, DensityField) {
    (
        CellGeometry::square(0.5, m),
        preset_tensor("identity").expect("preset exists"),
        preset_density("rho-shifted", Some(0.5)).expect("preset exists"),
    )
}
