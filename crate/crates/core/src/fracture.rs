//! Crack phase field with a history-field driving force.
//!
//! Each step solves the linear problem (AT2, divided through by `Δt`)
//!
//! ```text
//! [(1 − κ) H + 1 + η/Δt] d − l² Δd = (1 − κ) H + (η/Δt) dⁿ
//! ```
//!
//! with homogeneous Neumann conditions, then projects `d` onto `[0, 1]`.
//! `H = max_s D(s)` with `D = 2 l ψ⁺ / G_c` is stored per quadrature point.
//!
//! For linear elements the reaction and viscous terms are row-sum lumped.
//! The system is then an M-matrix on Delaunay meshes, which makes `d`
//! bounded by one and non-decreasing in time without any constraint
//! handling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::element::CellValues;
use crate::fem::solver::norm;
use crate::fem::{
    assemble_system, solve_linear, AssemblyError, CsrMatrix, DofMap, LinearSolver, LocalSystem, QpField,
    QuadratureRule, SolverError, SparseSystem,
};
use crate::mesh::Mesh;
use crate::par::Exec;

#[derive(Debug, Error)]
pub enum FractureError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid phase-field input: {0}")]
    Input(String),
}

impl From<AssemblyError<std::convert::Infallible>> for FractureError {
    fn from(e: AssemblyError<std::convert::Infallible>) -> Self {
        match e.source {}
    }
}

/// Crack surface density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `f(d) = d`, `c_d = 8/3`: the material stays intact below a
    /// threshold.
    At1,
    /// `f(d) = d²`, `c_d = 2`.
    #[default]
    At2,
}

impl Variant {
    pub fn c_d(self) -> f64 {
        match self {
            Variant::At1 => 8.0 / 3.0,
            Variant::At2 => 2.0,
        }
    }
}

/// `γ = (f(d)/l + l |∇d|²) / c_d`.
pub fn surface_density(d: f64, grad_d: [f64; 2], l_d: f64, variant: Variant) -> f64 {
    let f = match variant {
        Variant::At1 => d,
        Variant::At2 => d * d,
    };
    (f / l_d + l_d * (grad_d[0] * grad_d[0] + grad_d[1] * grad_d[1])) / variant.c_d()
}

/// `D = 2 l ψ⁺ / G_c`.
pub fn driving_state(psi_plus: f64, g_c: f64, l_d: f64) -> f64 {
    2.0 * l_d * psi_plus / g_c
}

pub fn update_history(h_old: f64, d_new: f64) -> f64 {
    h_old.max(d_new)
}

/// History field `H` at the quadrature points.
pub type HistoryField = QpField<f64>;

/// Result of a phase-field solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FractureSolution {
    pub d: Vec<f64>,
    /// Number of nodal values moved by the projection onto `[0, 1]`.
    pub projected: usize,
    /// Largest distance of the raw solution from `[0, 1]`.
    pub overshoot: f64,
}

pub struct FractureProblem<'m> {
    mesh: &'m Mesh,
    dofmap: DofMap,
    pattern: CsrMatrix,
    rule: QuadratureRule,
    pub l_d: f64,
    pub eta_d: f64,
    pub kappa: f64,
    pub variant: Variant,
    pub exec: Exec,
    pub solver: LinearSolver,
}

impl<'m> FractureProblem<'m> {
    /// Phase field on the solid cells of `mesh`.
    pub fn new(mesh: &'m Mesh, l_d: f64, eta_d: f64, kappa: f64) -> Self {
        let dofmap = DofMap::on_cells(mesh, 1, |t| t.is_solid());
        Self::from_dofmap(mesh, dofmap, l_d, eta_d, kappa)
    }

    /// Uses a prepared dof map (for instance one with prescribed `d`).
    pub fn from_dofmap(mesh: &'m Mesh, dofmap: DofMap, l_d: f64, eta_d: f64, kappa: f64) -> Self {
        let pattern = CsrMatrix::pattern_for(mesh, &dofmap);
        Self {
            mesh,
            dofmap,
            pattern,
            rule: QuadratureRule::for_element(mesh.order()),
            l_d,
            eta_d,
            kappa,
            variant: Variant::default(),
            exec: Exec::default(),
            solver: LinearSolver::default(),
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_solver(mut self, solver: LinearSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn zeros(&self) -> Vec<f64> {
        self.dofmap.lift()
    }

    pub fn zero_history(&self) -> HistoryField {
        HistoryField::zeros(self.mesh.num_cells(), self.rule.len())
    }

    /// Reaction coefficient and `H`-dependent load at one point.
    fn coefficients(&self, h: f64) -> (f64, f64) {
        let w = 1.0 - self.kappa;
        match self.variant {
            Variant::At2 => (w * h + 1.0, w * h),
            Variant::At1 => (w * 4.0 / 3.0 * h, w * 4.0 / 3.0 * h - 0.5),
        }
    }

    pub fn assemble(&self, d_prev: &[f64], history: &HistoryField, dt: f64) -> Result<SparseSystem, FractureError> {
        if !(dt > 0.0) {
            return Err(FractureError::Input(format!("time step {dt} must be positive")));
        }
        let visc = self.eta_d / dt;
        let l2 = self.l_d * self.l_d;
        let lumped = self.mesh.order() == 1;
        let bc = self.dofmap.lift();
        let kernel = |c: usize| -> Result<LocalSystem, std::convert::Infallible> {
            let cv = CellValues::new(self.mesh, c, &self.rule);
            let dofs = self.dofmap.cell_dofs(self.mesh, c);
            let n = dofs.len();
            let prev: Vec<f64> = dofs.iter().map(|&g| d_prev[g]).collect();
            let mut ls = LocalSystem::zeros(n);
            for (q, qp) in cv.qps.iter().enumerate() {
                let (r, f) = self.coefficients(history.at(c, q));
                for i in 0..n {
                    let (ni, gi) = (qp.val[i], qp.grad[i]);
                    ls.vector[i] += f * ni * qp.jxw;
                    for j in 0..n {
                        let (nj, gj) = (qp.val[j], qp.grad[j]);
                        let diff = l2 * (gi[0] * gj[0] + gi[1] * gj[1]);
                        ls.matrix[i * n + j] += diff * qp.jxw;
                        let m = (r + visc) * ni * nj * qp.jxw;
                        if lumped {
                            ls.matrix[i * n + i] += m;
                            ls.vector[i] += visc * ni * nj * prev[i] * qp.jxw;
                        } else {
                            ls.matrix[i * n + j] += m;
                            ls.vector[i] += visc * ni * nj * prev[j] * qp.jxw;
                        }
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

    /// Solves for `d^{n+1}` and projects it onto `[0, 1]`.
    pub fn solve(&self, d_prev: &[f64], history: &HistoryField, dt: f64) -> Result<FractureSolution, FractureError> {
        let sys = self.assemble(d_prev, history, dt)?;
        let x = solve_linear(&sys.matrix, &sys.rhs, self.solver)?;
        let mut d = self.dofmap.lift();
        self.dofmap.expand(&x, &mut d);
        let mut projected = 0;
        let mut overshoot: f64 = 0.0;
        for v in d.iter_mut() {
            let p = v.clamp(0.0, 1.0);
            if p != *v {
                overshoot = overshoot.max((*v - p).abs());
                projected += 1;
                *v = p;
            }
        }
        Ok(FractureSolution { d, projected, overshoot })
    }

    /// Norm of the discrete residual at `d` over the free dofs.
    pub fn residual_norm(&self, d: &[f64], d_prev: &[f64], history: &HistoryField, dt: f64) -> Result<f64, FractureError> {
        let sys = self.assemble(d_prev, history, dt)?;
        let mut r = sys.matrix.matvec(&self.dofmap.restrict(d));
        for (ri, bi) in r.iter_mut().zip(&sys.rhs) {
            *ri -= bi;
        }
        Ok(norm(&r))
    }

    /// `∫ γ(d, ∇d) dx`, the regularised crack length.
    pub fn crack_measure(&self, d: &[f64]) -> f64 {
        let mut s = 0.0;
        for &c in self.dofmap.cells() {
            let cv = CellValues::new(self.mesh, c, &self.rule);
            let local: Vec<f64> = self.dofmap.cell_dofs(self.mesh, c).iter().map(|&g| d[g]).collect();
            for qp in &cv.qps {
                s += surface_density(qp.eval(&local), qp.eval_grad(&local), self.l_d, self.variant) * qp.jxw;
            }
        }
        s
    }

    /// Phase field at the quadrature points of a solid cell.
    pub fn values_at_qps(&self, d: &[f64], cell: usize) -> Vec<f64> {
        let cv = CellValues::new(self.mesh, cell, &self.rule);
        let local: Vec<f64> = self.dofmap.cell_dofs(self.mesh, cell).iter().map(|&g| d[g]).collect();
        cv.qps.iter().map(|qp| qp.eval(&local)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interpolate;
    use crate::fem::norms::l2_error;
    use crate::mesh::{rectangle, CellTag};

    #[test]
    fn density_examples() {
        assert_eq!(surface_density(0.0, [0.0; 2], 0.1, Variant::At2), 0.0);
        assert!((surface_density(1.0, [0.0; 2], 0.1, Variant::At2) - 5.0).abs() < 1e-14);
        assert!((surface_density(1.0, [0.0; 2], 0.1, Variant::At1) - 3.75).abs() < 1e-14);
    }

    #[test]
    fn driving_state_examples() {
        assert_eq!(driving_state(0.0, 0.0027, 0.1), 0.0);
        let unit = 0.0027 / (2.0 * 0.1);
        assert!((driving_state(unit, 0.0027, 0.1) - 1.0).abs() < 1e-14);
        assert!((driving_state(2.0 * unit, 0.0027, 0.1) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn history_is_running_max() {
        assert_eq!(update_history(0.5, 0.2), 0.5);
        assert_eq!(update_history(0.5, 0.9), 0.9);
        let seq = [0.3, 0.1, 0.7, 0.2, 0.7, 0.9, 0.0];
        let mut h = 0.0;
        let mut m: f64 = 0.0;
        for &x in &seq {
            h = update_history(h, x);
            m = m.max(x);
            assert_eq!(h, m);
        }
    }

    #[test]
    fn unloaded_body_stays_intact() {
        let mesh = rectangle([0.0, 0.0], [1.0, 1.0], 4, 4, CellTag::Solid);
        let p = FractureProblem::new(&mesh, 0.1, 1e-6, 1e-8);
        let s = p.solve(&p.zeros(), &p.zero_history(), 0.1).unwrap();
        assert!(s.d.iter().all(|&x| x == 0.0));
        assert_eq!(s.projected, 0);
    }

    #[test]
    fn homogeneous_steady_state() {
        for order in [1, 2] {
            let base = rectangle([0.0, 0.0], [1.0, 1.0], 4, 4, CellTag::Solid);
            let mesh = if order == 2 { base.to_order2() } else { base };
            let p = FractureProblem::new(&mesh, 0.1, 0.0, 0.0);
            let mut h = p.zero_history();
            for c in 0..mesh.num_cells() {
                h.cell_mut(c).fill(1.0);
            }
            let s = p.solve(&p.zeros(), &h, 1.0).unwrap();
            assert!(s.d.iter().all(|&x| (x - 0.5).abs() < 1e-12));
        }
    }

    #[test]
    fn exponential_profile() {
        let l = 0.1;
        let err = |nx: usize| {
            let mesh = rectangle([-1.0, 0.0], [1.0, 0.05], nx, 1, CellTag::Solid);
            let mut map = DofMap::on_cells(&mesh, 1, |t| t.is_solid());
            let fixed: Vec<(usize, f64)> = (0..mesh.num_nodes())
                .filter(|&n| mesh.nodes()[n][0].abs() < 1e-12)
                .map(|n| (map.dof(n, 0).unwrap(), 1.0))
                .collect();
            assert!(!fixed.is_empty());
            map.set_dirichlet_many(fixed);
            let p = FractureProblem::from_dofmap(&mesh, map, l, 0.0, 0.0);
            let s = p.solve(&p.zeros(), &p.zero_history(), 1.0).unwrap();
            l2_error(&mesh, p.dofmap(), &s.d, |x| (-x[0].abs() / l).exp())
        };
        let (e1, e2) = (err(80), err(160));
        assert!(e2 < e1 && e2 < 2e-3, "{e1} {e2}");
    }

    #[test]
    fn unit_crack_measure() {
        let l = 0.1;
        let mesh = rectangle([-1.5, 0.0], [1.5, 0.1], 600, 1, CellTag::Solid);
        let p = FractureProblem::new(&mesh, l, 0.0, 0.0);
        let d = interpolate(&mesh, p.dofmap(), |x| (-x[0].abs() / l).exp());
        let per_width = p.crack_measure(&d) / 0.1;
        assert!((per_width - 1.0).abs() < 0.02, "{per_width}");
    }

    #[test]
    fn monotone_and_bounded_under_growing_history() {
        let mesh = rectangle([0.0, 0.0], [1.0, 1.0], 10, 10, CellTag::Solid);
        let p = FractureProblem::new(&mesh, 0.1, 1e-3, 1e-8);
        let mut h = p.zero_history();
        let mut d = p.zeros();
        for step in 1..=6 {
            for c in 0..mesh.num_cells() {
                let x = mesh.centroid(c);
                let target = 50.0 * step as f64 * (-((x[0] - 0.5).powi(2)) / 0.01).exp();
                for v in h.cell_mut(c) {
                    *v = update_history(*v, target);
                }
            }
            let s = p.solve(&d, &h, 0.01).unwrap();
            assert!(s.overshoot <= 1e-10, "overshoot {}", s.overshoot);
            for (a, b) in s.d.iter().zip(&d) {
                assert!(*a >= b - 1e-12);
            }
            d = s.d;
        }
        assert!(d.iter().cloned().fold(0.0, f64::max) > 0.9);
    }

    #[test]
    fn at1_has_elastic_stage() {
        let mesh = rectangle([0.0, 0.0], [1.0, 1.0], 3, 3, CellTag::Solid);
        let p = FractureProblem::new(&mesh, 0.1, 1e-3, 0.0).with_variant(Variant::At1);
        let mut h = p.zero_history();
        for c in 0..mesh.num_cells() {
            h.cell_mut(c).fill(0.3);
        }
        let s = p.solve(&p.zeros(), &h, 1.0).unwrap();
        assert!(s.d.iter().all(|&x| x == 0.0));
    }
}
