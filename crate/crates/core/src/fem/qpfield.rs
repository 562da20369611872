//! Values stored at every quadrature point of every cell.

/// `nq` values per cell, indexed by global cell id.
#[derive(Debug, Clone, PartialEq)]
pub struct QpField<T> {
    nq: usize,
    data: Vec<T>,
}

impl<T: Clone + Default> QpField<T> {
    pub fn zeros(num_cells: usize, nq: usize) -> Self {
        Self {
            nq,
            data: vec![T::default(); num_cells * nq],
        }
    }
}

impl<T> QpField<T> {
    /// Builds a field from per-cell vectors of equal length `nq`.
    pub fn from_cells(nq: usize, cells: Vec<Vec<T>>) -> Self {
        debug_assert!(cells.iter().all(|c| c.len() == nq));
        Self {
            nq,
            data: cells.into_iter().flatten().collect(),
        }
    }

    pub fn num_qps(&self) -> usize {
        self.nq
    }

    pub fn num_cells(&self) -> usize {
        if self.nq == 0 {
            0
        } else {
            self.data.len() / self.nq
        }
    }

    pub fn cell(&self, cell: usize) -> &[T] {
        &self.data[cell * self.nq..(cell + 1) * self.nq]
    }

    pub fn cell_mut(&mut self, cell: usize) -> &mut [T] {
        &mut self.data[cell * self.nq..(cell + 1) * self.nq]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

impl<T: Copy> QpField<T> {
    pub fn at(&self, cell: usize, q: usize) -> T {
        self.data[cell * self.nq + q]
    }
}
