//! Global assembly from per-cell kernels.
//!
//! Local systems are computed with the requested [`Exec`] policy in chunks
//! and accumulated sequentially in the order of the given cell list, so the
//! result does not depend on the thread count.

use thiserror::Error;

use super::dofmap::DofMap;
use super::sparse::{CsrMatrix, SparseSystem};
use crate::mesh::Mesh;
use crate::par::Exec;

const CHUNK: usize = 2048;

/// Element matrix (row-major, `n × n`) and vector for one cell, in the
/// local dof order of [`DofMap::cell_dofs`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSystem {
    pub matrix: Vec<f64>,
    pub vector: Vec<f64>,
}

impl LocalSystem {
    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: vec![0.0; n * n],
            vector: vec![0.0; n],
        }
    }
}

#[derive(Debug, Error)]
#[error("element kernel failed on cell {cell}: {source}")]
pub struct AssemblyError<E: std::error::Error + 'static> {
    pub cell: usize,
    #[source]
    pub source: E,
}

/// Assembles the reduced system over the free dofs of `dofmap`.
///
/// `pattern` must come from [`CsrMatrix::pattern_for`] for the same dof
/// map. Dirichlet columns are eliminated with the values in `bc_values`
/// (a full-length vector; only constrained entries are read).
pub fn assemble_system<E, K>(
    mesh: &Mesh,
    dofmap: &DofMap,
    pattern: &CsrMatrix,
    cells: &[usize],
    exec: Exec,
    bc_values: &[f64],
    kernel: K,
) -> Result<SparseSystem, AssemblyError<E>>
where
    E: std::error::Error + Send + 'static,
    K: Fn(usize) -> Result<LocalSystem, E> + Sync + Send,
{
    let mut matrix = pattern.clone();
    matrix.clear();
    let mut rhs = vec![0.0; dofmap.num_free()];
    for chunk in cells.chunks(CHUNK) {
        let locals = exec.try_map(chunk, |&c| {
            kernel(c)
                .map(|ls| (c, ls))
                .map_err(|source| AssemblyError { cell: c, source })
        })?;
        for (c, ls) in locals {
            let dofs = dofmap.cell_dofs(mesh, c);
            let n = dofs.len();
            debug_assert_eq!(ls.matrix.len(), n * n);
            for (a, &ga) in dofs.iter().enumerate() {
                let Some(i) = dofmap.free_index(ga) else {
                    continue;
                };
                rhs[i] += ls.vector[a];
                for (b, &gb) in dofs.iter().enumerate() {
                    let k = ls.matrix[a * n + b];
                    match dofmap.free_index(gb) {
                        Some(j) => matrix.add(i, j, k),
                        None => rhs[i] -= k * bc_values[gb],
                    }
                }
            }
        }
    }
    Ok(SparseSystem { matrix, rhs })
}

/// Assembles a full-length vector (including constrained dofs).
pub fn assemble_vector<E, K>(
    mesh: &Mesh,
    dofmap: &DofMap,
    cells: &[usize],
    exec: Exec,
    kernel: K,
) -> Result<Vec<f64>, AssemblyError<E>>
where
    E: std::error::Error + Send + 'static,
    K: Fn(usize) -> Result<Vec<f64>, E> + Sync + Send,
{
    let mut out = vec![0.0; dofmap.ndofs()];
    for chunk in cells.chunks(CHUNK) {
        let locals = exec.try_map(chunk, |&c| {
            kernel(c)
                .map(|v| (c, v))
                .map_err(|source| AssemblyError { cell: c, source })
        })?;
        for (c, v) in locals {
            for (a, g) in dofmap.cell_dofs(mesh, c).into_iter().enumerate() {
                out[g] += v[a];
            }
        }
    }
    Ok(out)
}
