//! Degree-of-freedom numbering for scalar and 2-vector nodal fields.

use std::collections::BTreeMap;

use crate::mesh::{CellTag, Mesh};

/// Maps mesh nodes to dof indices for a field living on a subset of cells.
///
/// Dofs are numbered node-major (`node·ncomp + comp` over active nodes in
/// increasing node order), so they are dense and unique.
#[derive(Debug, Clone)]
pub struct DofMap {
    ncomp: usize,
    order: usize,
    cells: Vec<usize>,
    node_to_first: Vec<Option<usize>>,
    dof_to_node: Vec<usize>,
    ndofs: usize,
    dirichlet: BTreeMap<usize, f64>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
}

impl DofMap {
    /// Dofs on every cell of the mesh.
    pub fn new(mesh: &Mesh, ncomp: usize) -> Self {
        Self::on_cells(mesh, ncomp, |_| true)
    }

    /// Dofs on the cells whose tag satisfies `keep`.
    pub fn on_cells(mesh: &Mesh, ncomp: usize, keep: impl Fn(CellTag) -> bool) -> Self {
        assert!(ncomp == 1 || ncomp == 2, "field must be scalar or 2-vector");
        let cells: Vec<usize> = (0..mesh.num_cells())
            .filter(|&c| keep(mesh.cell_tag(c)))
            .collect();
        let mut active = vec![false; mesh.num_nodes()];
        for &c in &cells {
            for &n in mesh.cell(c) {
                active[n] = true;
            }
        }
        let mut node_to_first = vec![None; mesh.num_nodes()];
        let mut dof_to_node = Vec::new();
        for (n, _) in active.iter().enumerate().filter(|(_, a)| **a) {
            node_to_first[n] = Some(dof_to_node.len());
            dof_to_node.extend(std::iter::repeat(n).take(ncomp));
        }
        let ndofs = dof_to_node.len();
        let mut map = Self {
            ncomp,
            order: mesh.order(),
            cells,
            node_to_first,
            dof_to_node,
            ndofs,
            dirichlet: BTreeMap::new(),
            free_index: Vec::new(),
            free_dofs: Vec::new(),
        };
        map.renumber_free();
        map
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    /// Active cells in increasing index order.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.node_to_first[node].map(|f| f + comp)
    }

    pub fn node_of(&self, dof: usize) -> usize {
        self.dof_to_node[dof]
    }

    pub fn is_active_node(&self, node: usize) -> bool {
        self.node_to_first[node].is_some()
    }

    /// Local-to-global dof indices of a cell, node-major.
    pub fn cell_dofs(&self, mesh: &Mesh, cell: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(mesh.cell(cell).len() * self.ncomp);
        for &n in mesh.cell(cell) {
            let f = self.node_to_first[n].expect("cell is active");
            out.extend(f..f + self.ncomp);
        }
        out
    }

    /// Prescribes `value` on `dof`.
    pub fn set_dirichlet(&mut self, dof: usize, value: f64) {
        assert!(dof < self.ndofs, "dof {dof} out of range");
        let fresh = self.dirichlet.insert(dof, value).is_none();
        if fresh {
            self.renumber_free();
        }
    }

    /// Prescribes values on many dofs at once.
    pub fn set_dirichlet_many(&mut self, values: impl IntoIterator<Item = (usize, f64)>) {
        for (dof, v) in values {
            assert!(dof < self.ndofs, "dof {dof} out of range");
            self.dirichlet.insert(dof, v);
        }
        self.renumber_free();
    }

    pub fn dirichlet(&self) -> &BTreeMap<usize, f64> {
        &self.dirichlet
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.free_index[dof].is_none()
    }

    /// Index of `dof` in the reduced (free) system.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    /// Full vector with Dirichlet values in place and zeros elsewhere.
    pub fn lift(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.ndofs];
        for (&d, &x) in &self.dirichlet {
            v[d] = x;
        }
        v
    }

    /// Writes the Dirichlet values into `v`.
    pub fn apply_dirichlet(&self, v: &mut [f64]) {
        for (&d, &x) in &self.dirichlet {
            v[d] = x;
        }
    }

    /// Scatters a reduced solution into a full vector.
    pub fn expand(&self, free: &[f64], full: &mut [f64]) {
        for (i, &d) in self.free_dofs.iter().enumerate() {
            full[d] = free[i];
        }
    }

    /// Gathers the free entries of a full vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }

    /// Scalar field as a node-indexed vector of length `num_nodes`
    /// (zero on inactive nodes).
    pub fn to_nodes(&self, field: &[f64], num_nodes: usize) -> Vec<f64> {
        assert_eq!(self.ncomp, 1);
        let mut out = vec![0.0; num_nodes];
        for (d, &v) in field.iter().enumerate() {
            out[self.dof_to_node[d]] = v;
        }
        out
    }

    /// Inverse of [`DofMap::to_nodes`].
    pub fn from_nodes(&self, nodal: &[f64]) -> Vec<f64> {
        assert_eq!(self.ncomp, 1);
        self.dof_to_node.iter().map(|&n| nodal[n]).collect()
    }

    fn renumber_free(&mut self) {
        self.free_index = vec![None; self.ndofs];
        self.free_dofs.clear();
        for d in 0..self.ndofs {
            if !self.dirichlet.contains_key(&d) {
                self.free_index[d] = Some(self.free_dofs.len());
                self.free_dofs.push(d);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::rectangle;

    #[test]
    fn dense_unique_numbering() {
        let mesh = rectangle([0.0, 0.0], [1.0, 1.0], 3, 3, CellTag::Solid);
        let map = DofMap::new(&mesh, 2);
        assert_eq!(map.ndofs(), 2 * mesh.num_nodes());
        let mut seen = vec![false; map.ndofs()];
        for n in 0..mesh.num_nodes() {
            for c in 0..2 {
                let d = map.dof(n, c).unwrap();
                assert!(!seen[d]);
                seen[d] = true;
                assert_eq!(map.node_of(d), n);
            }
        }
    }

    #[test]
    fn dirichlet_reduces_free_set() {
        let mesh = rectangle([0.0, 0.0], [1.0, 1.0], 2, 2, CellTag::Solid);
        let mut map = DofMap::new(&mesh, 1);
        map.set_dirichlet_many([(0, 1.0), (4, -2.0)]);
        assert_eq!(map.num_free(), map.ndofs() - 2);
        assert!(map.is_dirichlet(4));
        let lifted = map.lift();
        assert_eq!(lifted[0], 1.0);
        assert_eq!(lifted[4], -2.0);
        let mut full = lifted.clone();
        map.expand(&vec![7.0; map.num_free()], &mut full);
        assert_eq!(map.restrict(&full), vec![7.0; map.num_free()]);
        assert_eq!(full[4], -2.0);
    }
}
