//! Out-of-plane magnetic vector potential `A_z` on the whole domain.
//!
//! Backward Euler in time with the permittivity term dropped:
//!
//! ```text
//! ∫ (1/μ0) ∇A·∇δA + ∫ (σ0/Δt)(A − Aⁿ) δA + ∫ σ0 ∇Φ δA − ∫ J_s δA = 0
//! ```
//!
//! with `A = 0` on the outer boundary of the mesh. Permeability and
//! conductivity of the solid follow the phase field through
//! [`MaterialSet::constants_at`].

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::solver::norm;
use crate::fem::{
    assemble_system, solve_linear, AssemblyError, CsrMatrix, DofMap, LinearSolver, LocalSystem, QpField, QuadratureRule,
    SolverError, SparseSystem,
};
use crate::fem::element::CellValues;
use crate::material::{DomainError, MaterialSet};
use crate::mesh::{CellTag, Mesh, Point};
use crate::par::Exec;

#[derive(Debug, Error)]
pub enum MagneticsError {
    #[error("material evaluation failed in cell {cell}: {source}")]
    Material { cell: usize, source: DomainError },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("region {0} has no cells")]
    EmptyRegion(String),
}

impl From<AssemblyError<DomainError>> for MagneticsError {
    fn from(e: AssemblyError<DomainError>) -> Self {
        MagneticsError::Material {
            cell: e.cell,
            source: e.source,
        }
    }
}

/// Pulse power supply `∇Φ0(t) = a + b·exp(−c t)` (z-component).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradPhi {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for GradPhi {
    fn default() -> Self {
        Self {
            a: -1e-3,
            b: -1e-3,
            c: 1e-2,
        }
    }
}

impl GradPhi {
    pub const ZERO: GradPhi = GradPhi { a: 0.0, b: 0.0, c: 0.0 };

    pub fn at(&self, t: f64) -> f64 {
        self.a + self.b * (-self.c * t).exp()
    }
}

/// Current density law `J(t) = value + slope·t` in A/mm².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceLaw {
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub slope: f64,
}

impl SourceLaw {
    pub fn constant(value: f64) -> Self {
        Self { value, slope: 0.0 }
    }

    pub fn linear(slope: f64) -> Self {
        Self { value: 0.0, slope }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.value + self.slope * t
    }
}

pub type SourceFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// Impressed current density.
#[derive(Clone)]
pub enum Source {
    /// Piecewise constant per subdomain.
    PerTag(BTreeMap<CellTag, SourceLaw>),
    /// Arbitrary `J(x, t)`, used for manufactured solutions.
    Field(SourceFn),
}

impl Default for Source {
    fn default() -> Self {
        Source::PerTag(BTreeMap::new())
    }
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::PerTag(m) => f.debug_tuple("PerTag").field(m).finish(),
            Source::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl Source {
    fn at(&self, tag: CellTag, x: Point, t: f64) -> f64 {
        match self {
            Source::PerTag(m) => m.get(&tag).map_or(0.0, |law| law.at(t)),
            Source::Field(f) => f(x, t),
        }
    }
}

/// `B` at every quadrature point of every cell.
pub type BField = QpField<[f64; 2]>;

/// Mean of `|B|` over the quadrature points of a cell.
pub fn cell_b_magnitude(b: &BField, cell: usize) -> f64 {
    let c = b.cell(cell);
    c.iter().map(|v| v[0].hypot(v[1])).sum::<f64>() / c.len() as f64
}

pub struct MagneticProblem<'m> {
    mesh: &'m Mesh,
    dofmap: DofMap,
    pattern: CsrMatrix,
    rule: QuadratureRule,
    pub material: MaterialSet,
    pub source: Source,
    pub grad_phi: GradPhi,
    pub exec: Exec,
    pub solver: LinearSolver,
}

impl<'m> MagneticProblem<'m> {
    pub fn new(mesh: &'m Mesh, material: MaterialSet, source: Source, grad_phi: GradPhi) -> Self {
        let mut dofmap = DofMap::new(mesh, 1);
        let fixed: Vec<(usize, f64)> = mesh
            .outer_boundary_nodes()
            .into_iter()
            .filter_map(|n| dofmap.dof(n, 0).map(|d| (d, 0.0)))
            .collect();
        dofmap.set_dirichlet_many(fixed);
        let pattern = CsrMatrix::pattern_for(mesh, &dofmap);
        Self {
            mesh,
            dofmap,
            pattern,
            rule: QuadratureRule::for_element(mesh.order()),
            material,
            source,
            grad_phi,
            exec: Exec::default(),
            solver: LinearSolver::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_solver(mut self, solver: LinearSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.dofmap.ndofs()]
    }

    fn d_at(&self, cell: usize, d_nodes: Option<&[f64]>, vals: &[f64]) -> f64 {
        match d_nodes {
            Some(d) if self.mesh.cell_tag(cell).is_solid() => {
                let s: f64 = self.mesh.cell(cell).iter().zip(vals).map(|(&n, &v)| d[n] * v).sum();
                // higher-order interpolants may leave [0, 1] between nodes
                s.clamp(0.0, 1.0)
            }
            _ => 0.0,
        }
    }

    /// System for `A^{n+1}`. `dt = ∞` gives the steady problem.
    /// `d_nodes` is node-indexed (length `num_nodes`), `None` meaning
    /// undamaged.
    pub fn assemble(
        &self,
        a_prev: &[f64],
        d_nodes: Option<&[f64]>,
        t: f64,
        dt: f64,
    ) -> Result<SparseSystem, MagneticsError> {
        let gphi = self.grad_phi.at(t);
        let inv_dt = if dt.is_finite() { 1.0 / dt } else { 0.0 };
        let bc = self.dofmap.lift();
        let kernel = |c: usize| -> Result<LocalSystem, DomainError> {
            let cv = CellValues::new(self.mesh, c, &self.rule);
            let tag = self.mesh.cell_tag(c);
            let dofs = self.dofmap.cell_dofs(self.mesh, c);
            let n = dofs.len();
            let prev: Vec<f64> = dofs.iter().map(|&g| a_prev[g]).collect();
            let mut ls = LocalSystem::zeros(n);
            for qp in &cv.qps {
                let d = self.d_at(c, d_nodes, qp.values());
                let em = self.material.constants_at(tag, d)?;
                let nu = 1.0 / em.mu0;
                let s = em.sigma0 * inv_dt;
                let a_old = qp.eval(&prev);
                let f = self.source.at(tag, qp.x, t) - em.sigma0 * gphi + s * a_old;
                for i in 0..n {
                    let (ni, gi) = (qp.val[i], qp.grad[i]);
                    ls.vector[i] += f * ni * qp.jxw;
                    for j in 0..n {
                        let gj = qp.grad[j];
                        ls.matrix[i * n + j] +=
                            (nu * (gi[0] * gj[0] + gi[1] * gj[1]) + s * ni * qp.val[j]) * qp.jxw;
                    }
                }
            }
            Ok(ls)
        };
        Ok(assemble_system(
            self.mesh,
            &self.dofmap,
            &self.pattern,
            self.dofmap.cells(),
            self.exec,
            &bc,
            kernel,
        )?)
    }

    /// Solves one time step and returns the full-length `A^{n+1}`.
    pub fn step(&self, a_prev: &[f64], d_nodes: Option<&[f64]>, t: f64, dt: f64) -> Result<Vec<f64>, MagneticsError> {
        let sys = self.assemble(a_prev, d_nodes, t, dt)?;
        let x = solve_linear(&sys.matrix, &sys.rhs, self.solver)?;
        let mut a = self.dofmap.lift();
        self.dofmap.expand(&x, &mut a);
        Ok(a)
    }

    /// Residual of the discrete equations over the free dofs.
    pub fn residual(
        &self,
        a: &[f64],
        a_prev: &[f64],
        d_nodes: Option<&[f64]>,
        t: f64,
        dt: f64,
    ) -> Result<Vec<f64>, MagneticsError> {
        let sys = self.assemble(a_prev, d_nodes, t, dt)?;
        let mut r = sys.matrix.matvec(&self.dofmap.restrict(a));
        for (ri, bi) in r.iter_mut().zip(&sys.rhs) {
            *ri -= bi;
        }
        Ok(r)
    }

    pub fn residual_norm(
        &self,
        a: &[f64],
        a_prev: &[f64],
        d_nodes: Option<&[f64]>,
        t: f64,
        dt: f64,
    ) -> Result<f64, MagneticsError> {
        Ok(norm(&self.residual(a, a_prev, d_nodes, t, dt)?))
    }

    /// `B = (∂A/∂y, −∂A/∂x)` at every quadrature point.
    pub fn recover_b(&self, a: &[f64]) -> BField {
        recover_b(self.mesh, &self.dofmap, &self.rule, a, self.exec)
    }

    /// `∫_R A dx / |R|` over the cells whose tag satisfies `region`.
    pub fn average(&self, a: &[f64], name: &str, region: impl Fn(CellTag) -> bool) -> Result<f64, MagneticsError> {
        let (mut num, mut den) = (0.0, 0.0);
        for c in 0..self.mesh.num_cells() {
            if !region(self.mesh.cell_tag(c)) {
                continue;
            }
            let cv = CellValues::new(self.mesh, c, &self.rule);
            let local: Vec<f64> = self.dofmap.cell_dofs(self.mesh, c).iter().map(|&g| a[g]).collect();
            for qp in &cv.qps {
                num += qp.eval(&local) * qp.jxw;
                den += qp.jxw;
            }
        }
        if den == 0.0 {
            return Err(MagneticsError::EmptyRegion(name.to_string()));
        }
        Ok(num / den)
    }

    /// `∫ |B|²/(2 μ0(d))` over the cells accepted by `region`.
    pub fn magnetic_energy(
        &self,
        a: &[f64],
        d_nodes: Option<&[f64]>,
        region: impl Fn(usize) -> bool,
    ) -> Result<f64, MagneticsError> {
        let b = self.recover_b(a);
        let mut e = 0.0;
        for c in (0..self.mesh.num_cells()).filter(|&c| region(c)) {
            let cv = CellValues::new(self.mesh, c, &self.rule);
            for (q, qp) in cv.qps.iter().enumerate() {
                let d = self.d_at(c, d_nodes, qp.values());
                let mu = self
                    .material
                    .constants_at(self.mesh.cell_tag(c), d)
                    .map_err(|source| MagneticsError::Material { cell: c, source })?
                    .mu0;
                let bq = b.at(c, q);
                e += 0.5 * (bq[0] * bq[0] + bq[1] * bq[1]) / mu * qp.jxw;
            }
        }
        Ok(e)
    }
}

/// Curl of a scalar potential at the quadrature points of every cell.
/// Cells outside `dofmap` get `B = 0`.
pub fn recover_b(mesh: &Mesh, dofmap: &DofMap, rule: &QuadratureRule, a: &[f64], exec: Exec) -> BField {
    let cells: Vec<usize> = (0..mesh.num_cells()).collect();
    let active: Vec<bool> = {
        let mut v = vec![false; mesh.num_cells()];
        for &c in dofmap.cells() {
            v[c] = true;
        }
        v
    };
    let per_cell = exec.map(&cells, |&c| {
        if !active[c] {
            return vec![[0.0; 2]; rule.len()];
        }
        let cv = CellValues::new(mesh, c, rule);
        let local: Vec<f64> = dofmap.cell_dofs(mesh, c).iter().map(|&g| a[g]).collect();
        cv.qps
            .iter()
            .map(|qp| {
                let g = qp.eval_grad(&local);
                [g[1], -g[0]]
            })
            .collect::<Vec<_>>()
    });
    BField::from_cells(rule.len(), per_cell)
}
