use std::collections::HashMap;

use super::{
    signed_area, BoundaryEdge, BoundaryTag, CellGeometry, EpsilonLevel, GeometryError, HoleKind,
    Mesh,
};

/// Default node budget for perforated-domain meshes.
pub const DEFAULT_MAX_DOFS: usize = 200_000;

/// Structured triangulation of `[0,1]^2` at resolution `m` with the cells in
/// `removed` taken out. Diagonals alternate with the parity of `i + j`, which
/// makes the pattern invariant under the reflections `x -> 1-x`, `y -> 1-y`
/// and the transpose for even `m`.
struct GridBuilder {
    m: usize,
    removed: Vec<bool>,
}

/// Nodes, triangles, and the node index of each grid point.
type GridParts = (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<Option<usize>>);

impl GridBuilder {
    fn is_removed(&self, i: usize, j: usize) -> bool {
        self.removed[j * self.m + i]
    }

    fn build(&self) -> GridParts {
        let m = self.m;
        let np = m + 1;
        let mut touched_kept = vec![false; np * np];
        for j in 0..m {
            for i in 0..m {
                if !self.is_removed(i, j) {
                    for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        touched_kept[(j + dj) * np + i + di] = true;
                    }
                }
            }
        }
        let mut index = vec![None; np * np];
        let mut nodes = Vec::new();
        for j in 0..np {
            for i in 0..np {
                let g = j * np + i;
                if touched_kept[g] {
                    index[g] = Some(nodes.len());
                    nodes.push([i as f64 / m as f64, j as f64 / m as f64]);
                }
            }
        }
        let id = |i: usize, j: usize| index[j * np + i].expect("kept cell corner");
        let mut tris = Vec::with_capacity(2 * m * m);
        for j in 0..m {
            for i in 0..m {
                if self.is_removed(i, j) {
                    continue;
                }
                let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if (i + j) % 2 == 0 {
                    tris.push([p00, p10, p11]);
                    tris.push([p00, p11, p01]);
                } else {
                    tris.push([p00, p10, p01]);
                    tris.push([p10, p11, p01]);
                }
            }
        }
        (nodes, tris, index)
    }
}

/// Boundary edges of a triangulation (edges used by exactly one triangle),
/// in order of first appearance and oriented as in their triangle.
fn boundary_edges_of(tris: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut count: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let entry = count.entry(key).or_insert_with(|| {
                order.push((a, b));
                (0, order.len() - 1)
            });
            entry.0 += 1;
        }
    }
    order
        .into_iter()
        .filter(|&(a, b)| count[&(a.min(b), a.max(b))].0 == 1)
        .collect()
}

fn face_tag(p: [f64; 2], q: [f64; 2]) -> Option<BoundaryTag> {
    if p[0] == 0.0 && q[0] == 0.0 {
        Some(BoundaryTag::FaceLeft)
    } else if p[0] == 1.0 && q[0] == 1.0 {
        Some(BoundaryTag::FaceRight)
    } else if p[1] == 0.0 && q[1] == 0.0 {
        Some(BoundaryTag::FaceBottom)
    } else if p[1] == 1.0 && q[1] == 1.0 {
        Some(BoundaryTag::FaceTop)
    } else {
        None
    }
}

fn check_areas(nodes: &[[f64; 2]], tris: &[[usize; 3]], m: usize) -> Result<(), GeometryError> {
    for (t, tri) in tris.iter().enumerate() {
        let a = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        if !(a > 1e-14 / (m * m) as f64) {
            return Err(GeometryError::TooCoarse {
                m,
                reason: format!("triangle {t} degenerates (area {a:e})"),
            });
        }
    }
    Ok(())
}

/// Index of the face point `s` (counter-clockwise from the origin, `4m` in
/// total) on the boundary of the unit square.
fn face_point(s: usize, m: usize) -> [f64; 2] {
    let h = 1.0 / m as f64;
    let (side, i) = (s / m, (s % m) as f64);
    match side {
        0 => [i * h, 0.0],
        1 => [1.0, i * h],
        2 => [1.0 - i * h, 1.0],
        _ => [0.0, 1.0 - i * h],
    }
}

/// Annular cell mesh for a disk hole: rays from the hole centre through the
/// `4m` face grid points are split into `layers` equal segments between the
/// circle and the face. Diagonals alternate with `s + k`, so the mesh keeps
/// the symmetries of the square when the hole is centred.
fn build_disk_cell(g: &CellGeometry) -> Result<Mesh, GeometryError> {
    let m = g.m;
    let [cx, cy] = g.hole_center;
    let r = g.hole_size;
    let ns = 4 * m;
    let reach = (0..ns)
        .map(|s| {
            let q = face_point(s, m);
            (q[0] - cx).hypot(q[1] - cy)
        })
        .fold(f64::INFINITY, f64::min);
    let layers = (((reach - r) * m as f64).ceil() as usize).max(2);
    let id = |s: usize, k: usize| k * ns + s % ns;
    let mut nodes = Vec::with_capacity(ns * (layers + 1));
    for k in 0..=layers {
        let t = k as f64 / layers as f64;
        for s in 0..ns {
            let q = face_point(s, m);
            let (dx, dy) = (q[0] - cx, q[1] - cy);
            let d = dx.hypot(dy);
            let c = [cx + r * dx / d, cy + r * dy / d];
            nodes.push(if k == layers {
                q
            } else {
                [c[0] + t * (q[0] - c[0]), c[1] + t * (q[1] - c[1])]
            });
        }
    }
    let mut tris = Vec::with_capacity(2 * ns * layers);
    for k in 0..layers {
        for s in 0..ns {
            let (a, b, c, d) = (id(s, k), id(s + 1, k), id(s + 1, k + 1), id(s, k + 1));
            // s runs counter-clockwise and k outward, so (a, b, c) is clockwise
            if (s + k) % 2 == 0 {
                tris.push([a, c, b]);
                tris.push([a, d, c]);
            } else {
                tris.push([a, d, b]);
                tris.push([b, d, c]);
            }
        }
    }
    check_areas(&nodes, &tris, m)?;
    let boundary_edges = boundary_edges_of(&tris)
        .into_iter()
        .map(|(a, b)| BoundaryEdge {
            a,
            b,
            tag: face_tag(nodes[a], nodes[b]).unwrap_or(BoundaryTag::Hole),
        })
        .collect();
    let outer = |s: usize| id(s, layers);
    let mut periodic_pairs = Vec::with_capacity(2 * m + 1);
    // right face (s = m + j) onto left face (s = 4m - j), corners included
    for j in 0..=m {
        let left = if j == 0 { outer(0) } else { outer(4 * m - j) };
        periodic_pairs.push((outer(m + j), left));
    }
    // top face (s = 3m - i) onto bottom face (s = i), for x < 1
    for i in 0..m {
        periodic_pairs.push((outer(3 * m - i), outer(i)));
    }
    finish_cell(
        Mesh {
            nodes,
            triangles: tris,
            boundary_edges,
            periodic_pairs,
        },
        g,
    )
}

/// Builds the reference-cell mesh of `Y* = Y \ T`.
pub fn build_cell_mesh(g: &CellGeometry) -> Result<Mesh, GeometryError> {
    g.validate()?;
    let m = g.m;
    let mut removed = vec![false; m * m];
    match g.hole_kind {
        HoleKind::None => {}
        HoleKind::Square => {
            let [x0, y0, x1, y1] = g.hole_bbox();
            let (i0, i1) = ((x0 * m as f64).round() as usize, (x1 * m as f64).round() as usize);
            let (j0, j1) = ((y0 * m as f64).round() as usize, (y1 * m as f64).round() as usize);
            for j in j0..j1 {
                for i in i0..i1 {
                    removed[j * m + i] = true;
                }
            }
        }
        HoleKind::Disk => return build_disk_cell(g),
    }
    if g.hole_kind != HoleKind::None && !removed.iter().any(|&r| r) {
        return Err(GeometryError::TooCoarse {
            m,
            reason: "no grid cell lies inside the hole".into(),
        });
    }
    let grid = GridBuilder { m, removed };
    let (nodes, tris, index) = grid.build();

    check_areas(&nodes, &tris, m)?;

    let boundary_edges = boundary_edges_of(&tris)
        .into_iter()
        .map(|(a, b)| BoundaryEdge {
            a,
            b,
            tag: face_tag(nodes[a], nodes[b]).unwrap_or(BoundaryTag::Hole),
        })
        .collect();

    let np = m + 1;
    let id = |i: usize, j: usize| index[j * np + i].expect("face node");
    let mut periodic_pairs = Vec::with_capacity(2 * np);
    for j in 0..np {
        periodic_pairs.push((id(m, j), id(0, j)));
    }
    for i in 0..m {
        periodic_pairs.push((id(i, m), id(i, 0)));
    }

    let mesh = Mesh {
        nodes,
        triangles: tris,
        boundary_edges,
        periodic_pairs,
    };
    finish_cell(mesh, g)
}

fn finish_cell(mesh: Mesh, g: &CellGeometry) -> Result<Mesh, GeometryError> {
    let m = g.m;
    let loops = mesh.hole_loops().map_err(|e| GeometryError::TooCoarse {
        m,
        reason: e.to_string(),
    })?;
    let expected = usize::from(g.hole_kind != HoleKind::None);
    if loops.len() != expected {
        return Err(GeometryError::TooCoarse {
            m,
            reason: format!("hole boundary splits into {} loops", loops.len()),
        });
    }
    Ok(mesh)
}

/// Tiles the cell mesh `n x n` times over the unit square, scaled by `1/n`.
pub fn build_perforated_domain_mesh(
    g: &CellGeometry,
    level: EpsilonLevel,
    max_dofs: usize,
) -> Result<Mesh, GeometryError> {
    if g.hole_kind == HoleKind::None {
        return Err(GeometryError::NoHole);
    }
    let cell = build_cell_mesh(g)?;
    let n = level.n;
    let estimate = n * n * cell.nodes.len();
    if estimate > max_dofs {
        return Err(GeometryError::DofBudget {
            estimate,
            budget: max_dofs,
        });
    }
    Ok(tile(&cell, n))
}

fn tile(cell: &Mesh, n: usize) -> Mesh {
    let nf = n as f64;
    let key = |p: [f64; 2]| ((p[0] * 1e12).round() as i64, (p[1] * 1e12).round() as i64);
    let mut lookup: HashMap<(i64, i64), usize> = HashMap::with_capacity(n * n * cell.nodes.len());
    let mut nodes = Vec::with_capacity(n * n * cell.nodes.len());
    let mut tris = Vec::with_capacity(n * n * cell.triangles.len());
    let mut local = vec![0usize; cell.nodes.len()];
    for tj in 0..n {
        for ti in 0..n {
            for (k, p) in cell.nodes.iter().enumerate() {
                let q = [(ti as f64 + p[0]) / nf, (tj as f64 + p[1]) / nf];
                local[k] = *lookup.entry(key(q)).or_insert_with(|| {
                    nodes.push(q);
                    nodes.len() - 1
                });
            }
            tris.extend(cell.triangles.iter().map(|t| [local[t[0]], local[t[1]], local[t[2]]]));
        }
    }
    let boundary_edges = boundary_edges_of(&tris)
        .into_iter()
        .map(|(a, b)| BoundaryEdge {
            a,
            b,
            tag: if face_tag(nodes[a], nodes[b]).is_some() {
                BoundaryTag::Dirichlet
            } else {
                BoundaryTag::Hole
            },
        })
        .collect();
    Mesh {
        nodes,
        triangles: tris,
        boundary_edges,
        periodic_pairs: Vec::new(),
    }
}

/// Unperforated unit square at resolution `m` with Dirichlet boundary (the
/// domain of the limit problems).
pub fn build_square_mesh(m: usize) -> Result<Mesh, GeometryError> {
    let cell = build_cell_mesh(&CellGeometry::no_hole(m))?;
    let mut mesh = tile(&cell, 1);
    mesh.periodic_pairs.clear();
    Ok(mesh)
}

/// Polar-structured mesh of the disk of the given radius: a centre node plus
/// `rings` concentric rings, ring `i` holding `6 i` equally spaced nodes.
/// The whole boundary is tagged HOLE.
pub fn build_disk_mesh(radius: f64, rings: usize) -> Result<Mesh, GeometryError> {
    if rings < 1 || !(radius > 0.0) {
        return Err(GeometryError::InvalidGeometry(format!(
            "disk mesh needs rings >= 1 and radius > 0 (got {rings}, {radius})"
        )));
    }
    let mut nodes = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for i in 1..=rings {
        ring_start.push(nodes.len());
        let count = 6 * i;
        let r = radius * i as f64 / rings as f64;
        for j in 0..count {
            let th = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            nodes.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut tris = Vec::new();
    for i in 1..=rings {
        let n1 = 6 * i;
        let outer = |b: usize| ring_start[i] + b % n1;
        if i == 1 {
            for b in 0..n1 {
                tris.push([0, outer(b), outer(b + 1)]);
            }
            continue;
        }
        let n0 = 6 * (i - 1);
        let inner = |a: usize| ring_start[i - 1] + a % n0;
        let (mut a, mut b) = (0usize, 0usize);
        while a < n0 || b < n1 {
            // advance whichever ring has the smaller next angle
            let advance_outer = a == n0 || (b < n1 && (b + 1) * n0 <= (a + 1) * n1);
            if advance_outer {
                tris.push([inner(a), outer(b), outer(b + 1)]);
                b += 1;
            } else {
                tris.push([inner(a), outer(b), inner(a + 1)]);
                a += 1;
            }
        }
    }
    for t in tris.iter_mut() {
        if signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
    }
    let boundary_edges = boundary_edges_of(&tris)
        .into_iter()
        .map(|(a, b)| BoundaryEdge {
            a,
            b,
            tag: BoundaryTag::Hole,
        })
        .collect();
    let mesh = Mesh {
        nodes,
        triangles: tris,
        boundary_edges,
        periodic_pairs: Vec::new(),
    };
    mesh.validate()?;
    Ok(mesh)
}
