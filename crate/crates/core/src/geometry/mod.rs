//! Structured P1 triangulations of the perforated cell and of the perforated
//! unit square, with tagged boundaries and periodic node pairing.

mod build;
mod io;
mod locate;

pub use build::{
    build_cell_mesh, build_disk_mesh, build_perforated_domain_mesh, build_square_mesh,
    DEFAULT_MAX_DOFS,
};
pub use io::{mesh_from_str, mesh_read, mesh_to_string, mesh_write};
pub use locate::PointLocator;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid cell geometry: {0}")]
    InvalidGeometry(String),
    #[error("hole margin {margin} is smaller than one grid step 1/{m}")]
    HoleTooLarge { margin: f64, m: usize },
    #[error("resolution m = {m} cannot resolve the hole: {reason}")]
    TooCoarse { m: usize, reason: String },
    #[error("a perforated domain needs a hole; hole_kind = none is only valid for cell problems")]
    NoHole,
    #[error("epsilon level n = {0} must be at least 1")]
    BadLevel(usize),
    #[error("mesh with ~{estimate} nodes exceeds the budget of {budget}")]
    DofBudget { estimate: usize, budget: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("mesh file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoleKind {
    None,
    Square,
    Disk,
}

/// Reference cell `Y = (0,1)^2` with a single hole `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    pub hole_kind: HoleKind,
    #[serde(default = "default_center")]
    pub hole_center: [f64; 2],
    /// Side length for square holes, radius for disks.
    #[serde(default)]
    pub hole_size: f64,
    /// Grid subdivisions per unit length.
    pub m: usize,
}

fn default_center() -> [f64; 2] {
    [0.5, 0.5]
}

impl CellGeometry {
    pub fn square(side: f64, m: usize) -> Self {
        Self {
            hole_kind: HoleKind::Square,
            hole_center: [0.5, 0.5],
            hole_size: side,
            m,
        }
    }

    pub fn disk(radius: f64, m: usize) -> Self {
        Self {
            hole_kind: HoleKind::Disk,
            hole_center: [0.5, 0.5],
            hole_size: radius,
            m,
        }
    }

    pub fn no_hole(m: usize) -> Self {
        Self {
            hole_kind: HoleKind::None,
            hole_center: [0.5, 0.5],
            hole_size: 0.0,
            m,
        }
    }

    /// Same hole at a different resolution.
    pub fn with_resolution(&self, m: usize) -> Self {
        Self { m, ..self.clone() }
    }

    /// Bounding box `[xmin, ymin, xmax, ymax]` of the hole.
    pub fn hole_bbox(&self) -> [f64; 4] {
        let [cx, cy] = self.hole_center;
        let h = match self.hole_kind {
            HoleKind::None => 0.0,
            HoleKind::Square => 0.5 * self.hole_size,
            HoleKind::Disk => self.hole_size,
        };
        [cx - h, cy - h, cx + h, cy + h]
    }

    /// Exact area of `T`.
    pub fn hole_area(&self) -> f64 {
        match self.hole_kind {
            HoleKind::None => 0.0,
            HoleKind::Square => self.hole_size * self.hole_size,
            HoleKind::Disk => std::f64::consts::PI * self.hole_size * self.hole_size,
        }
    }

    /// Exact perimeter of `S`.
    pub fn hole_perimeter(&self) -> f64 {
        match self.hole_kind {
            HoleKind::None => 0.0,
            HoleKind::Square => 4.0 * self.hole_size,
            HoleKind::Disk => 2.0 * std::f64::consts::PI * self.hole_size,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let m = self.m;
        if m < 2 || !m.is_multiple_of(2) {
            return Err(GeometryError::InvalidGeometry(format!(
                "m = {m} must be an even number >= 2"
            )));
        }
        if self.hole_kind == HoleKind::None {
            return Ok(());
        }
        if m < 8 {
            return Err(GeometryError::TooCoarse {
                m,
                reason: "perforated cells need m >= 8".into(),
            });
        }
        if !(self.hole_size > 0.0) || !self.hole_size.is_finite() {
            return Err(GeometryError::InvalidGeometry(format!(
                "hole size {} must be positive",
                self.hole_size
            )));
        }
        let [x0, y0, x1, y1] = self.hole_bbox();
        let delta = 1.0 / m as f64;
        let margin = x0.min(y0).min(1.0 - x1).min(1.0 - y1);
        if margin < delta - 1e-12 {
            return Err(GeometryError::HoleTooLarge { margin, m });
        }
        if self.hole_kind == HoleKind::Square {
            for v in [x0, y0, x1, y1] {
                let s = v * m as f64;
                if (s - s.round()).abs() > 1e-9 {
                    return Err(GeometryError::InvalidGeometry(format!(
                        "square hole edge {v} is not a multiple of 1/{m}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `epsilon = 1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsilonLevel {
    pub n: usize,
}

impl EpsilonLevel {
    pub fn new(n: usize) -> Result<Self, GeometryError> {
        if n < 1 {
            return Err(GeometryError::BadLevel(n));
        }
        Ok(Self { n })
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum BoundaryTag {
    Hole = 1,
    Dirichlet = 2,
    FaceLeft = 3,
    FaceRight = 4,
    FaceBottom = 5,
    FaceTop = 6,
}

impl BoundaryTag {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => Self::Hole,
            2 => Self::Dirichlet,
            3 => Self::FaceLeft,
            4 => Self::FaceRight,
            5 => Self::FaceBottom,
            6 => Self::FaceTop,
            _ => return None,
        })
    }

    pub fn is_face(self) -> bool {
        matches!(
            self,
            Self::FaceLeft | Self::FaceRight | Self::FaceBottom | Self::FaceTop
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
}

/// P1 triangulation. Triangles are counter-clockwise; boundary edges are
/// oriented with the domain on their left.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// `(slave, master)`; the slave sits at `master + (1,0)` or `master + (0,1)`.
    pub periodic_pairs: Vec<(usize, usize)>,
}

pub fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.triangle_points(t);
        signed_area(p, q, r)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let p = self.nodes[e.a];
        let q = self.nodes[e.b];
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> + '_ {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    pub fn count_tag(&self, tag: BoundaryTag) -> usize {
        self.edges_with_tag(tag).count()
    }

    pub fn tagged_length(&self, tag: BoundaryTag) -> f64 {
        self.edges_with_tag(tag).map(|e| self.edge_length(e)).sum()
    }

    /// Nodes touched by at least one edge with `tag`, ascending.
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut on = vec![false; self.nodes.len()];
        for e in self.edges_with_tag(tag) {
            on[e.a] = true;
            on[e.b] = true;
        }
        (0..self.nodes.len()).filter(|&i| on[i]).collect()
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edge_use_counts().len()
    }

    fn edge_use_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut uses = HashMap::with_capacity(self.triangles.len() * 2);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        uses
    }

    /// `V - E + F` with `F` the triangle count.
    pub fn euler_characteristic(&self) -> i64 {
        self.nodes.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Closed loops formed by the HOLE edges. Errors if the edges do not
    /// decompose into simple cycles.
    pub fn hole_loops(&self) -> Result<Vec<Vec<usize>>, GeometryError> {
        let mut next: HashMap<usize, usize> = HashMap::new();
        for e in self.edges_with_tag(BoundaryTag::Hole) {
            if next.insert(e.a, e.b).is_some() {
                return Err(GeometryError::InvalidMesh(format!(
                    "node {} starts two hole edges",
                    e.a
                )));
            }
        }
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut seen = HashMap::new();
        let mut loops = Vec::new();
        for s in starts {
            if seen.contains_key(&s) {
                continue;
            }
            let mut cycle = vec![s];
            seen.insert(s, ());
            let mut cur = s;
            loop {
                let Some(&nx) = next.get(&cur) else {
                    return Err(GeometryError::InvalidMesh(format!(
                        "hole boundary is open at node {cur}"
                    )));
                };
                if nx == s {
                    break;
                }
                if seen.insert(nx, ()).is_some() {
                    return Err(GeometryError::InvalidMesh(format!(
                        "hole boundary revisits node {nx}"
                    )));
                }
                cycle.push(nx);
                cur = nx;
            }
            loops.push(cycle);
        }
        Ok(loops)
    }

    /// Checks every structural invariant: positive areas, conformity, matching
    /// boundary edges, closed hole loops, exact periodic offsets, no orphans.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.nodes.len();
        if self.nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(GeometryError::InvalidMesh("non-finite node coordinate".into()));
        }
        let mut used = vec![false; n];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(GeometryError::InvalidMesh(format!(
                        "triangle {t} references missing node {v}"
                    )));
                }
                used[v] = true;
            }
            let area = self.triangle_area(t);
            if !(area > 0.0) {
                return Err(GeometryError::InvalidMesh(format!(
                    "triangle {t} has non-positive area {area:e}"
                )));
            }
        }
        if let Some(orphan) = used.iter().position(|u| !u) {
            return Err(GeometryError::InvalidMesh(format!("node {orphan} is not used")));
        }
        let uses = self.edge_use_counts();
        if let Some((e, c)) = uses.iter().find(|(_, &c)| c > 2) {
            return Err(GeometryError::InvalidMesh(format!(
                "edge {e:?} is shared by {c} triangles"
            )));
        }
        let mut bset: HashMap<(usize, usize), ()> = HashMap::new();
        for e in &self.boundary_edges {
            let key = (e.a.min(e.b), e.a.max(e.b));
            if uses.get(&key) != Some(&1) {
                return Err(GeometryError::InvalidMesh(format!(
                    "boundary edge ({}, {}) is not a boundary of the triangulation",
                    e.a, e.b
                )));
            }
            if bset.insert(key, ()).is_some() {
                return Err(GeometryError::InvalidMesh(format!(
                    "duplicate boundary edge ({}, {})",
                    e.a, e.b
                )));
            }
        }
        let nb = uses.values().filter(|&&c| c == 1).count();
        if nb != self.boundary_edges.len() {
            return Err(GeometryError::InvalidMesh(format!(
                "{nb} boundary edges in the triangulation but {} tagged",
                self.boundary_edges.len()
            )));
        }
        self.hole_loops()?;
        for &(s, m) in &self.periodic_pairs {
            if s >= n || m >= n || s == m {
                return Err(GeometryError::InvalidMesh(format!(
                    "invalid periodic pair ({s}, {m})"
                )));
            }
            let d = [
                self.nodes[s][0] - self.nodes[m][0],
                self.nodes[s][1] - self.nodes[m][1],
            ];
            let ok = ((d[0] - 1.0).abs() <= 1e-12 && d[1].abs() <= 1e-12)
                || (d[0].abs() <= 1e-12 && (d[1] - 1.0).abs() <= 1e-12);
            if !ok {
                return Err(GeometryError::InvalidMesh(format!(
                    "periodic pair ({s}, {m}) is offset by ({}, {})",
                    d[0], d[1]
                )));
            }
        }
        Ok(())
    }

    /// Index of the node at `p` (within `tol`), by linear scan.
    pub fn find_node(&self, p: [f64; 2], tol: f64) -> Option<usize> {
        self.nodes
            .iter()
            .position(|q| (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol)
    }

    /// Map from node index to the index of its mirror image under `x -> 1 - x`
    /// (`axis = 0`) or `y -> 1 - y` (`axis = 1`), when the mesh has that symmetry.
    pub fn mirror_map(&self, axis: usize) -> Option<Vec<usize>> {
        let key = |p: [f64; 2]| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        let index: HashMap<(i64, i64), usize> =
            self.nodes.iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
        self.nodes
            .iter()
            .map(|&p| {
                let mut q = p;
                q[axis] = 1.0 - q[axis];
                index.get(&key(q)).copied()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_codes_round_trip() {
        for code in 1..=6u8 {
            assert_eq!(BoundaryTag::from_code(code).unwrap().code(), code);
        }
        assert!(BoundaryTag::from_code(0).is_none());
    }

    #[test]
    fn geometry_validation() {
        assert!(CellGeometry::square(0.5, 8).validate().is_ok());
        assert!(matches!(
            CellGeometry::disk(0.45, 8).validate(),
            Err(GeometryError::HoleTooLarge { .. })
        ));
        assert!(CellGeometry::square(0.3, 8).validate().is_err());
        assert!(CellGeometry::square(0.5, 7).validate().is_err());
        assert!(CellGeometry::no_hole(4).validate().is_ok());
        assert!(EpsilonLevel::new(0).is_err());
        assert_eq!(EpsilonLevel::new(4).unwrap().epsilon(), 0.25);
    }
}
