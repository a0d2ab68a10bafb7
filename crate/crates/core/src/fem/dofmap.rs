use crate::geometry::{BoundaryTag, Mesh};

use super::{FemError, SparseSymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeConstraint {
    Free,
    /// Homogeneous Dirichlet value.
    Dirichlet,
    /// Value copied from a free master node.
    Slave(usize),
}

/// Map between mesh nodes and the reduced unknowns of a constrained space.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    constraints: Vec<NodeConstraint>,
    reduced: Vec<Option<usize>>,
    free_nodes: Vec<usize>,
    mean_zero: bool,
}

impl DofMap {
    fn from_constraints(constraints: Vec<NodeConstraint>, mean_zero: bool) -> Result<Self, FemError> {
        let mut free_nodes = Vec::new();
        let mut reduced = vec![None; constraints.len()];
        for (i, c) in constraints.iter().enumerate() {
            if *c == NodeConstraint::Free {
                reduced[i] = Some(free_nodes.len());
                free_nodes.push(i);
            }
        }
        for (i, c) in constraints.iter().enumerate() {
            if let NodeConstraint::Slave(m) = *c {
                if constraints[m] != NodeConstraint::Free {
                    return Err(FemError::BadConstraint(format!(
                        "slave {i} points at constrained node {m}"
                    )));
                }
                reduced[i] = reduced[m];
            }
        }
        if free_nodes.is_empty() {
            return Err(FemError::EmptySpace);
        }
        Ok(Self {
            constraints,
            reduced,
            free_nodes,
            mean_zero,
        })
    }

    /// No constraints.
    pub fn unconstrained(n_nodes: usize) -> Result<Self, FemError> {
        Self::from_constraints(vec![NodeConstraint::Free; n_nodes], false)
    }

    /// Nodes on edges tagged DIRICHLET are fixed to zero.
    pub fn dirichlet(mesh: &Mesh) -> Result<Self, FemError> {
        let mut c = vec![NodeConstraint::Free; mesh.node_count()];
        for v in mesh.tagged_nodes(BoundaryTag::Dirichlet) {
            c[v] = NodeConstraint::Dirichlet;
        }
        Self::from_constraints(c, false)
    }

    /// Periodic identification from the mesh pairs. Chains such as corner
    /// nodes are resolved to their root master.
    pub fn periodic(mesh: &Mesh, mean_zero: bool) -> Result<Self, FemError> {
        let n = mesh.node_count();
        let mut parent: Vec<Option<usize>> = vec![None; n];
        for &(s, m) in &mesh.periodic_pairs {
            if parent[s].is_some_and(|p| p != m) {
                return Err(FemError::BadConstraint(format!("node {s} has two masters")));
            }
            parent[s] = Some(m);
        }
        let mut c = vec![NodeConstraint::Free; n];
        for i in 0..n {
            let mut root = i;
            let mut steps = 0;
            while let Some(p) = parent[root] {
                root = p;
                steps += 1;
                if steps > n {
                    return Err(FemError::BadConstraint("periodic pairing has a cycle".into()));
                }
            }
            if root != i {
                c[i] = NodeConstraint::Slave(root);
            }
        }
        Self::from_constraints(c, mean_zero)
    }

    pub fn node_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn dim(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn constraint(&self, node: usize) -> NodeConstraint {
        self.constraints[node]
    }

    /// Reduced index of `node`, `None` for Dirichlet nodes.
    pub fn reduced_index(&self, node: usize) -> Option<usize> {
        self.reduced[node]
    }

    /// Mesh node carrying reduced unknown `r`.
    pub fn free_node(&self, r: usize) -> usize {
        self.free_nodes[r]
    }

    fn check(&self, n: usize) -> Result<(), FemError> {
        if n != self.node_count() {
            return Err(FemError::DimensionMismatch {
                expected: self.node_count(),
                found: n,
            });
        }
        Ok(())
    }

    /// Congruence `P^T A P` with `P` the prolongation from reduced unknowns
    /// to nodal values.
    pub fn reduce(&self, a: &SparseSymMatrix) -> Result<SparseSymMatrix, FemError> {
        self.check(a.dim())?;
        let mut trip = Vec::with_capacity(a.nnz());
        for (i, j, v) in a.upper_entries() {
            let (Some(ri), Some(rj)) = (self.reduced[i], self.reduced[j]) else {
                continue;
            };
            if i != j && ri == rj {
                trip.push((ri, rj, 2.0 * v));
            } else {
                trip.push((ri, rj, v));
            }
        }
        SparseSymMatrix::from_triplets(self.dim(), &trip)
    }

    /// `P^T b`.
    pub fn reduce_vector(&self, b: &[f64]) -> Result<Vec<f64>, FemError> {
        self.check(b.len())?;
        let mut out = vec![0.0; self.dim()];
        for (i, &v) in b.iter().enumerate() {
            if let Some(r) = self.reduced[i] {
                out[r] += v;
            }
        }
        Ok(out)
    }

    /// `P u`: nodal values from reduced unknowns.
    pub fn expand(&self, u: &[f64]) -> Result<Vec<f64>, FemError> {
        if u.len() != self.dim() {
            return Err(FemError::DimensionMismatch {
                expected: self.dim(),
                found: u.len(),
            });
        }
        Ok(self
            .reduced
            .iter()
            .map(|r| r.map_or(0.0, |r| u[r]))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cell_mesh, build_square_mesh, CellGeometry};

    #[test]
    fn unconstrained_is_identity() {
        let a = SparseSymMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]).unwrap();
        let d = DofMap::unconstrained(2).unwrap();
        assert_eq!(d.reduce(&a).unwrap(), a);
    }

    #[test]
    fn all_dirichlet_is_empty() {
        let c = vec![NodeConstraint::Dirichlet; 3];
        assert!(matches!(DofMap::from_constraints(c, false), Err(FemError::EmptySpace)));
    }

    #[test]
    fn periodic_chain_folds_by_hand() {
        // 1D chain 0-1-2 with unit springs, node 2 slaved to node 0:
        // [[1,-1,0],[-1,2,-1],[0,-1,1]] folds to [[2,-2],[-2,2]]
        let a = SparseSymMatrix::from_triplets(
            3,
            &[(0, 0, 1.0), (0, 1, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 2, 1.0)],
        )
        .unwrap();
        let c = vec![NodeConstraint::Free, NodeConstraint::Free, NodeConstraint::Slave(0)];
        let d = DofMap::from_constraints(c, false).unwrap();
        let r = d.reduce(&a).unwrap().to_dense();
        assert_eq!(r, nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]));
        assert_eq!(d.expand(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0, 1.0]);
        assert_eq!(d.reduce_vector(&[1.0, 1.0, 1.0]).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn periodic_cell_corners_collapse() {
        let mesh = build_cell_mesh(&CellGeometry::square(0.5, 8)).unwrap();
        let d = DofMap::periodic(&mesh, true).unwrap();
        assert_eq!(d.dim(), mesh.node_count() - 8 - 9);
        let corners: Vec<_> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
            .iter()
            .map(|&p| d.reduced_index(mesh.find_node(p, 1e-12).unwrap()))
            .collect();
        assert!(corners.iter().all(|c| *c == corners[0]));
        for v in 0..mesh.node_count() {
            if let NodeConstraint::Slave(m) = d.constraint(v) {
                assert_eq!(d.constraint(m), NodeConstraint::Free);
            }
        }
    }

    #[test]
    fn dirichlet_square() {
        let mesh = build_square_mesh(4).unwrap();
        let d = DofMap::dirichlet(&mesh).unwrap();
        assert_eq!(d.dim(), 9);
    }
}
