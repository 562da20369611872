//! Compressed sparse row matrices with a fixed sparsity pattern.

use std::collections::BTreeSet;

use super::dofmap::DofMap;
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given per-row sorted column sets.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            n,
            row_ptr,
            col_idx,
            vals: vec![0.0; nnz],
        }
    }

    /// Sparsity of the reduced (free-dof) system coupling dofs that share
    /// a cell.
    pub fn pattern_for(mesh: &Mesh, dofmap: &DofMap) -> Self {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); dofmap.num_free()];
        for &c in dofmap.cells() {
            let free: Vec<usize> = dofmap
                .cell_dofs(mesh, c)
                .into_iter()
                .filter_map(|d| dofmap.free_index(d))
                .collect();
            for &i in &free {
                rows[i].extend(free.iter().copied());
            }
        }
        let rows: Vec<Vec<usize>> = rows.into_iter().map(|s| s.into_iter().collect()).collect();
        Self::from_pattern(&rows)
    }

    /// Builds a matrix from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(i, j, _) in triplets {
            rows[i].insert(j);
        }
        let rows: Vec<Vec<usize>> = rows.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut m = Self::from_pattern(&rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.vals[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let cols = &self.col_idx[start..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    /// Adds `v` to entry (i, j). Panics if the entry is not in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.vals[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.vals[k])
    }

    pub fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Largest |a_ij − a_ji| relative to the largest |a_ij|.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry() <= rel_tol
    }
}

/// A reduced linear system `A x = b` over the free dofs of a [`DofMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}
