//! Linear solvers: sparse LU with partial pivoting (faer, fill-reducing
//! ordering), a profile (skyline) LU after reverse Cuthill-McKee
//! reordering, and Jacobi-preconditioned conjugate gradients.
//!
//! The skyline LU does not pivot; a zero pivot is reported as
//! [`SolverError::SingularMatrix`]. It is kept for small systems and as an
//! independent cross-check of the sparse factorization.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("matrix is singular (zero pivot at row {row})")]
    SingularMatrix { row: usize },
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("dimension mismatch: matrix {matrix}, rhs {rhs}")]
    Dimension { matrix: usize, rhs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum LinearSolver {
    /// Sparse LU with partial pivoting.
    Direct,
    /// Profile LU without pivoting.
    Skyline,
    Cg { tol: f64, max_iter: usize },
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver::Direct
    }
}

pub fn solve_linear(a: &CsrMatrix, b: &[f64], method: LinearSolver) -> Result<Vec<f64>, SolverError> {
    if a.dim() != b.len() {
        return Err(SolverError::Dimension {
            matrix: a.dim(),
            rhs: b.len(),
        });
    }
    match method {
        LinearSolver::Direct => sparse_lu(a, b),
        LinearSolver::Skyline => ProfileLu::factor(a)?.solve_refined(a, b),
        LinearSolver::Cg { tol, max_iter } => cg(a, b, tol, max_iter),
    }
}

fn sparse_lu(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    use faer::linalg::solvers::Solve;
    use faer::sparse::{SparseColMat, Triplet};
    let n = a.dim();
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..n {
        let (cols, vals) = a.row(i);
        triplets.extend(cols.iter().zip(vals).map(|(&j, &v)| Triplet::new(i, j, v)));
    }
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    let lu = m.sp_lu().map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    let x = lu.solve(faer::Col::from_fn(n, |i| b[i]));
    let x: Vec<f64> = (0..n).map(|i| x[i]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::Factorization("non-finite solution".to_string()));
    }
    Ok(x)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients; `tol` is relative to ‖b‖.
pub fn cg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, SolverError> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(SolverError::NoConvergence {
                iterations: it,
                residual: norm(&r) / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NoConvergence {
        iterations: max_iter,
        residual: norm(&r) / bnorm,
    })
}

/// Reverse Cuthill-McKee ordering of the (symmetrized) matrix graph.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| -> usize {
        // Returns the last node reached (a far node).
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        let mut last = start;
        let mut nbrs = Vec::new();
        while let Some(v) = q.pop_front() {
            out.push(v);
            last = v;
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                q.push_back(w);
            }
        }
        last
    };
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Approximate a peripheral node by two sweeps from the seed.
        let mut start = seed;
        for _ in 0..2 {
            let mut scratch = visited.clone();
            let mut tmp = Vec::new();
            start = bfs(start, &mut scratch, &mut tmp);
        }
        bfs(start, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// LU factors stored by profile: for each row `i`, the strict lower row
/// from column `first[i]` and the strict upper column from row `first[i]`.
#[derive(Debug, Clone)]
pub struct ProfileLu {
    perm: Vec<usize>,
    first: Vec<usize>,
    ptr: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    diag: Vec<f64>,
}

impl ProfileLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SolverError> {
        let n = a.dim();
        let perm = rcm_ordering(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for &old_j in a.row(old_i).0 {
                let j = inv[old_j];
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        for i in 0..n {
            ptr.push(ptr[i] + (i - first[i]));
        }
        let size = ptr[n];
        let mut lower = vec![0.0; size];
        let mut upper = vec![0.0; size];
        let mut diag = vec![0.0; n];
        let mut row_scale = vec![0.0f64; n];
        for old_i in 0..n {
            let i = inv[old_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = inv[old_j];
                row_scale[i] = row_scale[i].max(v.abs());
                if i == j {
                    diag[i] += v;
                } else if j < i {
                    lower[ptr[i] + j - first[i]] += v;
                } else {
                    upper[ptr[j] + i - first[j]] += v;
                }
            }
        }
        for j in 0..n {
            let fj = first[j];
            for i in fj..j {
                let fi = first[i];
                let k0 = fi.max(fj);
                let (li, ui) = (ptr[i], ptr[i]);
                let (lj, uj) = (ptr[j], ptr[j]);
                let s = dot(
                    &lower[li + k0 - fi..li + i - fi],
                    &upper[uj + k0 - fj..uj + i - fj],
                );
                upper[uj + i - fj] -= s;
                let s2 = dot(
                    &lower[lj + k0 - fj..lj + i - fj],
                    &upper[ui + k0 - fi..ui + i - fi],
                );
                lower[lj + i - fj] = (lower[lj + i - fj] - s2) / diag[i];
            }
            let lj = ptr[j];
            let s = dot(&lower[lj..lj + j - fj], &upper[lj..lj + j - fj]);
            diag[j] -= s;
            if !(diag[j].abs() > 1e-14 * row_scale[j]) || !diag[j].is_finite() {
                return Err(SolverError::SingularMatrix { row: perm[j] });
            }
        }
        Ok(Self {
            perm,
            first,
            ptr,
            lower,
            upper,
            diag,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let p = self.ptr[i];
            y[i] -= dot(&self.lower[p..p + i - fi], &y[fi..i]);
        }
        for j in (0..n).rev() {
            let xj = y[j] / self.diag[j];
            y[j] = xj;
            let fj = self.first[j];
            let p = self.ptr[j];
            for (k, u) in self.upper[p..p + j - fj].iter().enumerate() {
                y[fj + k] -= u * xj;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Solves and applies up to two steps of iterative refinement.
    pub fn solve_refined(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
        let mut x = self.solve(b);
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(x);
        }
        for _ in 0..2 {
            let ax = a.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            if norm(&r) <= 1e-13 * bnorm {
                break;
            }
            let dx = self.solve(&r);
            for (x, d) in x.iter_mut().zip(&dx) {
                *x += d;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::SingularMatrix { row: 0 });
        }
        Ok(x)
    }

    pub fn profile_size(&self) -> usize {
        self.lower.len()
    }
}
