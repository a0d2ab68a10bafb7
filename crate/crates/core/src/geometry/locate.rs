use super::Mesh;

/// Bucketed triangle lookup for point evaluation of P1 fields.
#[derive(Debug, Clone)]
pub struct PointLocator {
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
    tris: Vec<[[f64; 2]; 3]>,
    connectivity: Vec<[usize; 3]>,
}

/// Barycentric coordinates tolerance for points on triangle edges.
const INSIDE_TOL: f64 = 1e-9;

fn barycentric(t: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = *t;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &mesh.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let side = ((mesh.triangles.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut loc = PointLocator {
            origin: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); side * side],
            tris: Vec::with_capacity(mesh.triangles.len()),
            connectivity: mesh.triangles.clone(),
        };
        for t in 0..mesh.triangles.len() {
            let pts = mesh.triangle_points(t);
            let mut blo = [usize::MAX; 2];
            let mut bhi = [0usize; 2];
            for p in &pts {
                let b = loc.bucket_of(*p);
                for d in 0..2 {
                    blo[d] = blo[d].min(b[d]);
                    bhi[d] = bhi[d].max(b[d]);
                }
            }
            for j in blo[1]..=bhi[1] {
                for i in blo[0]..=bhi[0] {
                    loc.buckets[j * side + i].push(t);
                }
            }
            loc.tris.push(pts);
        }
        loc
    }

    fn bucket_of(&self, p: [f64; 2]) -> [usize; 2] {
        let mut b = [0; 2];
        for d in 0..2 {
            let f = ((p[d] - self.origin[d]) / self.cell[d]).floor();
            b[d] = (f.max(0.0) as usize).min(self.dims[d] - 1);
        }
        b
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    /// Points within a small tolerance outside a boundary edge are accepted.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let [i, j] = self.bucket_of(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.dims[0] + i] {
            let l = barycentric(&self.tris[t], p);
            let worst = l[0].min(l[1]).min(l[2]);
            if worst >= 0.0 {
                return Some((t, l));
            }
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((t, l, worst));
            }
        }
        best.filter(|b| b.2 >= -INSIDE_TOL).map(|(t, l, _)| (t, l))
    }

    /// Node indices of triangle `t`.
    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.connectivity[t]
    }

    /// P1 interpolation of nodal `values` at `p`.
    pub fn interpolate(&self, values: &[f64], p: [f64; 2]) -> Option<f64> {
        let (t, l) = self.locate(p)?;
        let tri = self.connectivity[t];
        Some(l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cell_mesh, CellGeometry};

    #[test]
    fn linear_fields_are_reproduced() {
        let mesh = build_cell_mesh(&CellGeometry::disk(0.25, 16)).unwrap();
        let loc = PointLocator::new(&mesh);
        let f: Vec<f64> = mesh.nodes.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 1.0).collect();
        for &p in &[[0.1, 0.1], [0.9, 0.5], [0.0, 0.0], [1.0, 1.0], [0.5, 0.05]] {
            let v = loc.interpolate(&f, p).unwrap();
            assert!((v - (2.0 * p[0] - 3.0 * p[1] + 1.0)).abs() < 1e-12);
        }
        assert!(loc.locate([0.5, 0.5]).is_none());
        for (i, p) in mesh.nodes.iter().enumerate() {
            assert!((loc.interpolate(&f, *p).unwrap() - f[i]).abs() < 1e-12);
        }
    }
}
