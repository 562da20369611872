//! Quasi-static equilibrium `Div τ(u, B, d) + b̄ = 0` on the solid.
//!
//! Small strains, plane strain. The residual uses the total stress of
//! [`constitutive::total_stress`]; Newton's method uses a tangent obtained
//! by central differences of that stress at each quadrature point.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{self, ConstitutiveError, PlaneTensor, Sym2};
use crate::fem::element::CellValues;
use crate::fem::solver::norm;
use crate::fem::{
    assemble_system, assemble_vector, solve_linear, AssemblyError, CsrMatrix, DofMap, LinearSolver, LocalSystem,
    QpField, QuadratureRule, SolverError,
};
use crate::magnetics::BField;
use crate::material::MaterialSet;
use crate::mesh::{BoundaryTag, Mesh};
use crate::par::Exec;

#[derive(Debug, Error)]
pub enum ElasticityError {
    #[error("constitutive evaluation failed in cell {cell}: {source}")]
    Constitutive { cell: usize, source: ConstitutiveError },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("Newton diverged after {iterations} iterations (residual history {history:?})")]
    NewtonDiverged { iterations: usize, history: Vec<f64> },
    #[error("no displacement boundary condition: rigid-body modes are unconstrained")]
    NoDirichlet,
}

impl From<AssemblyError<ConstitutiveError>> for ElasticityError {
    fn from(e: AssemblyError<ConstitutiveError>) -> Self {
        ElasticityError::Constitutive {
            cell: e.cell,
            source: e.source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    /// Relative tolerance with respect to [`ElasticProblem::load_norm`].
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    /// Step halvings tried when a full step does not reduce the residual
    /// norm; 0 gives plain Newton.
    pub max_backtracks: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            max_iter: 25,
            max_backtracks: 8,
        }
    }
}

/// Displacement component `value + slope·t` on a set of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementBc {
    pub nodes: BTreeSet<usize>,
    pub comp: usize,
    pub value: f64,
    pub slope: f64,
}

/// Newton statistics of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub history: Vec<f64>,
}

pub struct ElasticProblem<'m> {
    mesh: &'m Mesh,
    dofmap: DofMap,
    pattern: CsrMatrix,
    rule: QuadratureRule,
    bcs: Vec<DisplacementBc>,
    pub material: MaterialSet,
    pub body_force: [f64; 2],
    pub tractions: Vec<(BoundaryTag, [f64; 2])>,
    pub newton: NewtonConfig,
    pub exec: Exec,
    pub solver: LinearSolver,
}

impl<'m> ElasticProblem<'m> {
    pub fn new(mesh: &'m Mesh, material: MaterialSet, bcs: Vec<DisplacementBc>) -> Result<Self, ElasticityError> {
        let mut dofmap = DofMap::on_cells(mesh, 2, |t| t.is_solid());
        let mut fixed = Vec::new();
        for bc in &bcs {
            for &n in &bc.nodes {
                if let Some(d) = dofmap.dof(n, bc.comp) {
                    fixed.push((d, bc.value));
                }
            }
        }
        if fixed.is_empty() {
            return Err(ElasticityError::NoDirichlet);
        }
        dofmap.set_dirichlet_many(fixed);
        let pattern = CsrMatrix::pattern_for(mesh, &dofmap);
        Ok(Self {
            mesh,
            dofmap,
            pattern,
            rule: QuadratureRule::for_element(mesh.order()),
            bcs,
            material,
            body_force: [0.0; 2],
            tractions: Vec::new(),
            newton: NewtonConfig::default(),
            exec: Exec::default(),
            solver: LinearSolver::default(),
        })
    }

    /// Both components clamped on every edge tagged `tag`.
    pub fn clamped(mesh: &'m Mesh, material: MaterialSet, tag: BoundaryTag) -> Result<Self, ElasticityError> {
        let nodes = mesh.tagged_boundary_nodes(tag);
        let bcs = (0..2)
            .map(|comp| DisplacementBc {
                nodes: nodes.clone(),
                comp,
                value: 0.0,
                slope: 0.0,
            })
            .collect();
        Self::new(mesh, material, bcs)
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

    /// Updates the prescribed values to time `t`.
    pub fn set_time(&mut self, t: f64) {
        let mut vals = Vec::new();
        for bc in &self.bcs {
            for &n in &bc.nodes {
                if let Some(d) = self.dofmap.dof(n, bc.comp) {
                    vals.push((d, bc.value + bc.slope * t));
                }
            }
        }
        self.dofmap.set_dirichlet_many(vals);
    }

    fn d_at(&self, cell: usize, d_nodes: Option<&[f64]>, vals: &[f64]) -> f64 {
        match d_nodes {
            Some(d) => self
                .mesh
                .cell(cell)
                .iter()
                .zip(vals)
                .map(|(&n, &v)| d[n] * v)
                .sum::<f64>()
                .clamp(0.0, 1.0),
            None => 0.0,
        }
    }

    fn strain(qp: &crate::fem::QpValues, local: &[f64]) -> Sym2 {
        let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
        for a in 0..qp.n {
            let g = qp.grad[a];
            let (ux, uy) = (local[2 * a], local[2 * a + 1]);
            xx += g[0] * ux;
            yy += g[1] * uy;
            xy += 0.5 * (g[1] * ux + g[0] * uy);
        }
        Sym2::new(xx, yy, xy)
    }

    fn local_u(&self, u: &[f64], cell: usize) -> Vec<f64> {
        self.dofmap.cell_dofs(self.mesh, cell).iter().map(|&g| u[g]).collect()
    }

    /// External load vector (body force and tractions), full length.
    fn external(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.dofmap.ndofs()];
        if self.body_force != [0.0; 2] {
            for &c in self.dofmap.cells() {
                let cv = CellValues::new(self.mesh, c, &self.rule);
                let dofs = self.dofmap.cell_dofs(self.mesh, c);
                for qp in &cv.qps {
                    for a in 0..qp.n {
                        f[dofs[2 * a]] += self.body_force[0] * qp.val[a] * qp.jxw;
                        f[dofs[2 * a + 1]] += self.body_force[1] * qp.val[a] * qp.jxw;
                    }
                }
            }
        }
        for (tag, t) in &self.tractions {
            for e in self.mesh.boundary_edges().iter().filter(|e| e.tag == *tag) {
                let [p, q] = [self.mesh.nodes()[e.nodes[0]], self.mesh.nodes()[e.nodes[1]]];
                let len = (q[0] - p[0]).hypot(q[1] - p[1]);
                let weights: Vec<(usize, f64)> = match e.mid {
                    None => vec![(e.nodes[0], 0.5), (e.nodes[1], 0.5)],
                    Some(m) => vec![(e.nodes[0], 1.0 / 6.0), (e.nodes[1], 1.0 / 6.0), (m, 2.0 / 3.0)],
                };
                for (n, w) in weights {
                    for k in 0..2 {
                        if let Some(d) = self.dofmap.dof(n, k) {
                            f[d] += t[k] * w * len;
                        }
                    }
                }
            }
        }
        f
    }

    /// Internal force vector `∫ τ : ε(N)` (full length, no external loads).
    pub fn internal_force(&self, u: &[f64], b: &BField, d_nodes: Option<&[f64]>) -> Result<Vec<f64>, ElasticityError> {
        let kernel = |c: usize| -> Result<Vec<f64>, ConstitutiveError> {
            let cv = CellValues::new(self.mesh, c, &self.rule);
            let local = self.local_u(u, c);
            let mut r = vec![0.0; local.len()];
            for (q, qp) in cv.qps.iter().enumerate() {
                let e = Self::strain(qp, &local);
                let d = self.d_at(c, d_nodes, qp.values());
                let s = constitutive::total_stress(&e, b.at(c, q), d, &self.material)?;
                for a in 0..qp.n {
                    let g = qp.grad[a];
                    r[2 * a] += (s.xx * g[0] + s.xy * g[1]) * qp.jxw;
                    r[2 * a + 1] += (s.xy * g[0] + s.yy * g[1]) * qp.jxw;
                }
            }
            Ok(r)
        };
        Ok(assemble_vector(self.mesh, &self.dofmap, self.dofmap.cells(), self.exec, kernel)?)
    }

    /// Residual over the free dofs.
    pub fn residual(&self, u: &[f64], b: &BField, d_nodes: Option<&[f64]>) -> Result<Vec<f64>, ElasticityError> {
        let fint = self.internal_force(u, b, d_nodes)?;
        let fext = self.external();
        Ok(self
            .dofmap
            .free_dofs()
            .iter()
            .map(|&g| fint[g] - fext[g])
            .collect())
    }

    pub fn residual_norm(&self, u: &[f64], b: &BField, d_nodes: Option<&[f64]>) -> Result<f64, ElasticityError> {
        Ok(norm(&self.residual(u, b, d_nodes)?))
    }

    /// Norm of the full residual (constrained rows included) at the lifted
    /// Dirichlet data. Self-equilibrated field stresses leave almost no
    /// force on the free dofs, so the reactions set the force scale.
    pub fn load_norm(&self, b: &BField, d_nodes: Option<&[f64]>) -> Result<f64, ElasticityError> {
        let fint = self.internal_force(&self.dofmap.lift(), b, d_nodes)?;
        let fext = self.external();
        Ok(norm(&fint.iter().zip(&fext).map(|(a, b)| a - b).collect::<Vec<_>>()))
    }

    /// Sum of internal forces on the nodes of a boundary tag, per
    /// component.
    pub fn reaction(
        &self,
        u: &[f64],
        b: &BField,
        d_nodes: Option<&[f64]>,
        nodes: &BTreeSet<usize>,
    ) -> Result<[f64; 2], ElasticityError> {
        let f = self.internal_force(u, b, d_nodes)?;
        let mut r = [0.0; 2];
        for &n in nodes {
            for (k, rk) in r.iter_mut().enumerate() {
                if let Some(d) = self.dofmap.dof(n, k) {
                    *rk += f[d];
                }
            }
        }
        Ok(r)
    }

    /// Newton solve from `guess` (Dirichlet values are imposed on it).
    pub fn solve(
        &self,
        b: &BField,
        d_nodes: Option<&[f64]>,
        guess: &[f64],
    ) -> Result<(Vec<f64>, NewtonReport), ElasticityError> {
        let reference = self.load_norm(b, d_nodes)?;
        let tol = (self.newton.rtol * reference).max(self.newton.atol);
        let mut u = guess.to_vec();
        self.dofmap.apply_dirichlet(&mut u);
        let mut history = Vec::new();
        let mut r = self.residual(&u, b, d_nodes)?;
        let mut rn = norm(&r);
        for it in 0..=self.newton.max_iter {
            history.push(rn);
            if !rn.is_finite() {
                break;
            }
            if rn <= tol {
                return Ok((u, NewtonReport { iterations: it, history }));
            }
            if it == self.newton.max_iter {
                break;
            }
            let k = self.tangent(&u, b, d_nodes)?;
            let du = solve_linear(&k, &r, self.solver)?;
            // The stress is only piecewise smooth (tension/compression
            // switch), so full steps can cycle; halve until the residual
            // norm drops, else keep the shortest step.
            let mut step = 1.0;
            for attempt in 0..=self.newton.max_backtracks {
                let mut trial = u.clone();
                for (i, &g) in self.dofmap.free_dofs().iter().enumerate() {
                    trial[g] -= step * du[i];
                }
                let tr = match self.residual(&trial, b, d_nodes) {
                    Ok(tr) => tr,
                    Err(_) if attempt < self.newton.max_backtracks => {
                        step *= 0.5;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let tn = norm(&tr);
                if tn < rn || attempt == self.newton.max_backtracks {
                    u = trial;
                    r = tr;
                    rn = tn;
                    break;
                }
                step *= 0.5;
            }
        }
        Err(ElasticityError::NewtonDiverged {
            iterations: history.len().saturating_sub(1),
            history,
        })
    }

    /// Reduced tangent matrix at `u`.
    pub fn tangent(&self, u: &[f64], b: &BField, d_nodes: Option<&[f64]>) -> Result<CsrMatrix, ElasticityError> {
        let zero = vec![0.0; self.dofmap.ndofs()];
        let kernel = |c: usize| -> Result<LocalSystem, ConstitutiveError> {
            let cv = CellValues::new(self.mesh, c, &self.rule);
            let local = self.local_u(u, c);
            let n = local.len();
            let mut ls = LocalSystem::zeros(n);
            for (q, qp) in cv.qps.iter().enumerate() {
                let e = Self::strain(qp, &local);
                let d = self.d_at(c, d_nodes, qp.values());
                let t = constitutive::total_stress_tangent(&e, b.at(c, q), d, &self.material)?;
                // strain of each unit nodal displacement and the stress
                // weights of each residual entry, both as (xx, yy, xy)
                let mut se = vec![[0.0; 3]; n];
                let mut bv = vec![[0.0; 3]; n];
                for a in 0..qp.n {
                    let g = qp.grad[a];
                    se[2 * a] = [g[0], 0.0, 0.5 * g[1]];
                    se[2 * a + 1] = [0.0, g[1], 0.5 * g[0]];
                    bv[2 * a] = [g[0], 0.0, g[1]];
                    bv[2 * a + 1] = [0.0, g[1], g[0]];
                }
                for j in 0..n {
                    // dτ for unit perturbation of dof j
                    let mut ds = [0.0; 3];
                    for (l, sl) in se[j].iter().enumerate() {
                        if *sl != 0.0 {
                            for m in 0..3 {
                                ds[m] += sl * t[l][m];
                            }
                        }
                    }
                    for i in 0..n {
                        let v = bv[i][0] * ds[0] + bv[i][1] * ds[1] + bv[i][2] * ds[2];
                        ls.matrix[i * n + j] += v * qp.jxw;
                    }
                }
            }
            Ok(ls)
        };
        let sys = assemble_system(
            self.mesh,
            &self.dofmap,
            &self.pattern,
            self.dofmap.cells(),
            self.exec,
            &zero,
            kernel,
        )?;
        Ok(sys.matrix)
    }

    /// Strain at every quadrature point (zero outside the solid).
    pub fn strains(&self, u: &[f64]) -> QpField<Sym2> {
        let cells: Vec<usize> = (0..self.mesh.num_cells()).collect();
        let per_cell = self.exec.map(&cells, |&c| {
            if !self.mesh.cell_tag(c).is_solid() {
                return vec![Sym2::default(); self.rule.len()];
            }
            let cv = CellValues::new(self.mesh, c, &self.rule);
            let local = self.local_u(u, c);
            cv.qps.iter().map(|qp| Self::strain(qp, &local)).collect()
        });
        QpField::from_cells(self.rule.len(), per_cell)
    }

    /// Undegraded tensile energy `ψ⁺` at every quadrature point.
    pub fn psi_plus(&self, u: &[f64]) -> QpField<f64> {
        let eps = self.strains(u);
        let cells: Vec<usize> = (0..self.mesh.num_cells()).collect();
        let per_cell = self.exec.map(&cells, |&c| {
            eps.cell(c)
                .iter()
                .map(|e| constitutive::psi_elastic(e, &self.material).0)
                .collect()
        });
        QpField::from_cells(self.rule.len(), per_cell)
    }

    /// `∫ (g_e(d) ψ⁺ + ψ⁻)` over the solid.
    pub fn elastic_energy(&self, u: &[f64], d_nodes: Option<&[f64]>) -> Result<f64, ElasticityError> {
        let mut w = 0.0;
        for &c in self.dofmap.cells() {
            let cv = CellValues::new(self.mesh, c, &self.rule);
            let local = self.local_u(u, c);
            for qp in &cv.qps {
                let e = Self::strain(qp, &local);
                let d = self.d_at(c, d_nodes, qp.values());
                let ge = self
                    .material
                    .rule
                    .g_elastic(d)
                    .map_err(|s| ElasticityError::Constitutive { cell: c, source: s.into() })?;
                let (pp, pm) = constitutive::psi_elastic(&e, &self.material);
                w += (ge * pp + pm) * qp.jxw;
            }
        }
        Ok(w)
    }

    /// Total stress averaged over the quadrature points of each cell
    /// (zero outside the solid).
    pub fn cell_stresses(&self, u: &[f64], b: &BField, d_nodes: Option<&[f64]>) -> Result<Vec<PlaneTensor>, ElasticityError> {
        let mut out = vec![PlaneTensor::default(); self.mesh.num_cells()];
        for &c in self.dofmap.cells() {
            let cv = CellValues::new(self.mesh, c, &self.rule);
            let local = self.local_u(u, c);
            let mut acc = PlaneTensor::default();
            let mut wsum = 0.0;
            for (q, qp) in cv.qps.iter().enumerate() {
                let e = Self::strain(qp, &local);
                let d = self.d_at(c, d_nodes, qp.values());
                let s = constitutive::total_stress(&e, b.at(c, q), d, &self.material)
                    .map_err(|source| ElasticityError::Constitutive { cell: c, source })?;
                acc.xx += s.xx * qp.jxw;
                acc.yy += s.yy * qp.jxw;
                acc.xy += s.xy * qp.jxw;
                acc.zz += s.zz * qp.jxw;
                wsum += qp.jxw;
            }
            out[c] = PlaneTensor {
                xx: acc.xx / wsum,
                yy: acc.yy / wsum,
                xy: acc.xy / wsum,
                zz: acc.zz / wsum,
            };
        }
        Ok(out)
    }
}
