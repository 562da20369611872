//! Time stepping with the staggered fixed-point iteration.
//!
//! Within a step, iteration `k` solves the vector potential with the
//! phase field of iteration `k − 1`, recovers `B`, solves the displacement
//! (warm-started), raises the history field and solves the phase field.
//! The step is accepted when
//!
//! ```text
//! ‖R_u‖ / s_u + ‖R_A‖ / s_A ≤ TOL
//! ```
//!
//! at the current iterate, where `s_A` is the norm of the magnetic load
//! vector at the start of the step and `s_u` the residual of the lifted
//! displacement data under the first iterate's field (a load scale). A
//! vanishing scale falls back to the absolute norm.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::PlaneTensor;
use crate::elasticity::{DisplacementBc, ElasticProblem, ElasticityError, NewtonConfig};
use crate::fem::solver::norm;
use crate::fem::LinearSolver;
use crate::fracture::{driving_state, update_history, FractureError, FractureProblem, HistoryField, Variant};
use crate::magnetics::{cell_b_magnitude, BField, GradPhi, MagneticProblem, MagneticsError, Source, SourceLaw};
use crate::material::MaterialSet;
use crate::mesh::{BoundaryTag, CellTag, Mesh};
use crate::par::Exec;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Magnetics(#[from] MagneticsError),
    #[error(transparent)]
    Elasticity(#[from] ElasticityError),
    #[error(transparent)]
    Fracture(#[from] FractureError),
    #[error("staggered iteration did not converge in {iterations} iterations (residual history {history:?})")]
    StaggerDiverged { iterations: usize, history: Vec<f64> },
    #[error("step {step} (t = {t}): {source}")]
    AtStep {
        step: usize,
        t: f64,
        #[source]
        source: Box<DriverError>,
    },
    #[error("invalid run setup: {0}")]
    Setup(String),
}

/// Base of the history update inside a step's staggered loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryUpdate {
    /// `H^k = max(H^k−1, D(u^k))`: damage reached by an intermediate
    /// iterate is kept, so `d` is non-decreasing over the iterations.
    #[default]
    Accumulate,
    /// `H^k = max(H^n−1, D(u^k))`: each iteration starts from the last
    /// committed history.
    FromStep,
}

/// Settings of the time loop and the nested solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaggeredConfig {
    /// Time step, s.
    pub dt: f64,
    /// Final time, s.
    pub t_end: f64,
    pub tol_stag: f64,
    pub max_stagger_iters: usize,
    /// Solve the displacement and phase field; off for purely magnetic
    /// problems.
    pub mechanics: bool,
    /// Also require the phase-field residual (relative to its load) to be
    /// below `tol_stag`.
    pub check_phase_residual: bool,
    /// Retry a failed step once as two half steps.
    pub halve_on_failure: bool,
    pub history: HistoryUpdate,
    pub variant: Variant,
    pub newton: NewtonConfig,
    pub linear_solver: LinearSolver,
    pub exec: Exec,
}

impl Default for StaggeredConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 1.0,
            tol_stag: 1e-4,
            max_stagger_iters: 50,
            mechanics: true,
            check_phase_residual: false,
            halve_on_failure: true,
            history: HistoryUpdate::default(),
            variant: Variant::At2,
            newton: NewtonConfig::default(),
            linear_solver: LinearSolver::Direct,
            exec: Exec::default(),
        }
    }
}

impl StaggeredConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(format!("t_end = {} must be positive", self.t_end));
        }
        if !(self.tol_stag > 0.0) {
            return Err(format!("tol_stag = {} must be positive", self.tol_stag));
        }
        if self.max_stagger_iters == 0 {
            return Err("max_stagger_iters must be at least 1".to_string());
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (the last step may end exactly at
    /// `t_end` up to rounding).
    pub fn num_steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Everything a run needs besides the solver settings.
#[derive(Debug, Clone)]
pub struct Case {
    pub mesh: Mesh,
    pub material: MaterialSet,
    pub sources: BTreeMap<CellTag, SourceLaw>,
    pub grad_phi: GradPhi,
    /// Prescribed displacement components per boundary tag.
    pub displacement: Vec<(BoundaryTag, usize, f64)>,
    pub tractions: Vec<(BoundaryTag, [f64; 2])>,
    pub body_force: [f64; 2],
}

/// Diagnostics of one committed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub a_ave_solid: f64,
    pub max_d: f64,
    pub elastic_energy: f64,
    pub stagger_iters: usize,
    /// Scaled residuals at acceptance.
    pub u_residual: f64,
    pub a_residual: f64,
    pub stagger_history: Vec<f64>,
    pub newton_iters: Vec<usize>,
    /// Nodal values moved by the phase-field projection (last iterate).
    pub projected: usize,
    /// Largest distance of the raw phase field from `[0, 1]` over all
    /// iterates of the step.
    pub overshoot: f64,
    /// Smallest nodal increment `d^{n+1} − dⁿ`.
    pub min_d_increment: f64,
    pub halved: bool,
}

/// Committed fields.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub t: f64,
    /// Vector potential, one value per mesh node.
    pub a: Vec<f64>,
    /// Displacement in the solid dof numbering.
    pub u: Vec<f64>,
    /// Phase field in the solid dof numbering.
    pub d: Vec<f64>,
    pub history: HistoryField,
}

/// Read-only view handed to observers after each committed step.
pub struct StepView<'a> {
    pub diagnostics: &'a StepDiagnostics,
    pub state: &'a FieldState,
    pub b: &'a BField,
    /// Phase field indexed by mesh node (zero outside the solid).
    pub d_nodes: &'a [f64],
    pub mesh: &'a Mesh,
    pub runner: &'a Runner<'a>,
}

/// Nodal and cellwise output fields of a committed step.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub a: Vec<f64>,
    /// Displacement per node (zero outside the solid).
    pub u: Vec<[f64; 2]>,
    pub d: Vec<f64>,
    pub b_magnitude: Vec<f64>,
    pub von_mises: Vec<f64>,
}

#[derive(Debug)]
pub struct RunResult {
    pub diagnostics: Vec<StepDiagnostics>,
    pub snapshots: Vec<Snapshot>,
    /// First failure, if the run stopped before `t_end`.
    pub failure: Option<DriverError>,
}

/// Solvers assembled for one mesh.
pub struct Runner<'a> {
    pub case: &'a Case,
    pub cfg: StaggeredConfig,
    pub magnetics: MagneticProblem<'a>,
    pub elasticity: Option<ElasticProblem<'a>>,
    pub fracture: Option<FractureProblem<'a>>,
}

struct StepOutcome {
    state: FieldState,
    b: BField,
    diag: StepDiagnostics,
}

impl<'a> Runner<'a> {
    pub fn new(case: &'a Case, cfg: StaggeredConfig) -> Result<Self, DriverError> {
        cfg.validate().map_err(DriverError::Setup)?;
        let mesh = &case.mesh;
        let magnetics = MagneticProblem::new(
            mesh,
            case.material.clone(),
            Source::PerTag(case.sources.clone()),
            case.grad_phi,
        )
        .with_exec(cfg.exec)
        .with_solver(cfg.linear_solver);
        let has_solid = mesh.cell_tags().iter().any(|t| t.is_solid());
        let (elasticity, fracture) = if cfg.mechanics && has_solid {
            let bcs = case
                .displacement
                .iter()
                .map(|&(tag, comp, value)| DisplacementBc {
                    nodes: mesh.tagged_boundary_nodes(tag),
                    comp,
                    value,
                    slope: 0.0,
                })
                .collect();
            let mut el = ElasticProblem::new(mesh, case.material.clone(), bcs)?
                .with_exec(cfg.exec)
                .with_solver(cfg.linear_solver);
            el.newton = cfg.newton;
            el.body_force = case.body_force;
            el.tractions = case.tractions.clone();
            let m = &case.material;
            let fr = FractureProblem::new(mesh, m.l_d, m.eta_d, m.rule.kappa)
                .with_variant(cfg.variant)
                .with_exec(cfg.exec)
                .with_solver(cfg.linear_solver);
            (Some(el), Some(fr))
        } else {
            (None, None)
        };
        Ok(Self {
            case,
            cfg,
            magnetics,
            elasticity,
            fracture,
        })
    }

    pub fn mesh(&self) -> &'a Mesh {
        &self.case.mesh
    }

    pub fn initial_state(&self) -> FieldState {
        let nq = self.magnetics.rule().len();
        FieldState {
            t: 0.0,
            a: self.magnetics.zeros(),
            u: self.elasticity.as_ref().map_or_else(Vec::new, |e| e.zeros()),
            d: self.fracture.as_ref().map_or_else(Vec::new, |f| f.zeros()),
            history: HistoryField::zeros(self.mesh().num_cells(), nq),
        }
    }

    /// Phase field indexed by mesh node.
    pub fn d_nodes(&self, d: &[f64]) -> Vec<f64> {
        match &self.fracture {
            Some(f) => f.dofmap().to_nodes(d, self.mesh().num_nodes()),
            None => vec![0.0; self.mesh().num_nodes()],
        }
    }

    fn a_average(&self, a: &[f64]) -> Result<f64, MagneticsError> {
        if self.mesh().cell_tags().iter().any(|t| t.is_solid()) {
            self.magnetics.average(a, "solid", CellTag::is_solid)
        } else {
            Ok(0.0)
        }
    }

    /// One staggered step from `prev` to `prev.t + dt`.
    fn try_step(&mut self, prev: &FieldState, step: usize, dt: f64) -> Result<StepOutcome, DriverError> {
        let t = prev.t + dt;
        let cfg = self.cfg.clone();
        if let Some(el) = self.elasticity.as_mut() {
            el.set_time(t);
        }
        let prev_d_nodes = self.d_nodes(&prev.d);
        let mag = &self.magnetics;
        let has_d = self.fracture.is_some();
        let opt = |v: &[f64]| -> Option<Vec<f64>> { has_d.then(|| v.to_vec()) };

        let load_a = norm(&mag.assemble(&prev.a, opt(&prev_d_nodes).as_deref(), t, dt)?.rhs);
        let scale_a = if load_a > 0.0 { load_a } else { 1.0 };
        let mut scale_u = None;
        let mut scale_d = None;

        let mut d = prev.d.clone();
        let mut d_nodes = prev_d_nodes.clone();
        let mut u = prev.u.clone();
        let mut history = prev.history.clone();
        let mut history_res = Vec::new();
        let mut newton_iters = Vec::new();
        let mut overshoot: f64 = 0.0;
        let mut projected = 0;

        for k in 1..=cfg.max_stagger_iters {
            let dn = opt(&d_nodes);
            let a = mag.step(&prev.a, dn.as_deref(), t, dt)?;
            let b = mag.recover_b(&a);
            let mut r_u = 0.0;
            let mut r_d = 0.0;
            if let (Some(el), Some(fr)) = (self.elasticity.as_ref(), self.fracture.as_ref()) {
                let (u_new, rep) = el.solve(&b, dn.as_deref(), &u)?;
                newton_iters.push(rep.iterations);
                u = u_new;
                let psi = el.psi_plus(&u);
                let m = &self.case.material;
                if cfg.history == HistoryUpdate::FromStep {
                    history = prev.history.clone();
                }
                for &c in fr.dofmap().cells() {
                    let hp = psi.cell(c);
                    for (q, h) in history.cell_mut(c).iter_mut().enumerate() {
                        *h = update_history(*h, driving_state(hp[q], m.g_c, m.l_d));
                    }
                }
                let sol = fr.solve(&prev.d, &history, dt)?;
                overshoot = overshoot.max(sol.overshoot);
                projected = sol.projected;
                d = sol.d;
                d_nodes = self.d_nodes(&d);
                let su = *scale_u.get_or_insert_with(|| el.load_norm(&b, Some(&d_nodes)).unwrap_or(0.0));
                // Below this load the check is Newton's absolute tolerance.
                let floor = cfg.newton.atol / cfg.tol_stag;
                r_u = el.residual_norm(&u, &b, Some(&d_nodes))? / su.max(floor);
                if cfg.check_phase_residual {
                    let sd = *scale_d.get_or_insert_with(|| {
                        fr.residual_norm(&fr.zeros(), &prev.d, &history, dt).unwrap_or(0.0)
                    });
                    r_d = fr.residual_norm(&d, &prev.d, &history, dt)? / if sd > 0.0 { sd } else { 1.0 };
                }
            }
            let dn = opt(&d_nodes);
            let r_a = mag.residual_norm(&a, &prev.a, dn.as_deref(), t, dt)? / scale_a;
            let res = r_u + r_a;
            history_res.push(res);
            log::debug!("step {step} iter {k}: res {res:.3e} (u {r_u:.3e}, A {r_a:.3e})");
            if res <= cfg.tol_stag && (!cfg.check_phase_residual || r_d <= cfg.tol_stag) {
                let min_inc = d
                    .iter()
                    .zip(&prev.d)
                    .map(|(x, y)| x - y)
                    .fold(f64::INFINITY, f64::min);
                let elastic_energy = match &self.elasticity {
                    Some(el) => el.elastic_energy(&u, Some(&d_nodes))?,
                    None => 0.0,
                };
                let diag = StepDiagnostics {
                    step,
                    t,
                    dt,
                    a_ave_solid: self.a_average(&a)?,
                    max_d: d.iter().cloned().fold(0.0, f64::max),
                    elastic_energy,
                    stagger_iters: k,
                    u_residual: r_u,
                    a_residual: r_a,
                    stagger_history: history_res,
                    newton_iters,
                    projected,
                    overshoot,
                    min_d_increment: if min_inc.is_finite() { min_inc } else { 0.0 },
                    halved: false,
                };
                let state = FieldState {
                    t,
                    a,
                    u,
                    d,
                    history,
                };
                return Ok(StepOutcome { state, b, diag });
            }
        }
        Err(DriverError::StaggerDiverged {
            iterations: cfg.max_stagger_iters,
            history: history_res,
        })
    }

    /// Advances `prev` by `dt`, retrying once with two half steps on
    /// failure. Returns one outcome per committed (sub)step.
    fn advance(&mut self, prev: &FieldState, step: usize, dt: f64) -> Result<Vec<StepOutcome>, DriverError> {
        match self.try_step(prev, step, dt) {
            Ok(o) => Ok(vec![o]),
            Err(e) if self.cfg.halve_on_failure => {
                log::warn!("step {step} failed ({e}); retrying with dt/2");
                let mut first = self.try_step(prev, step, 0.5 * dt)?;
                first.diag.halved = true;
                let mut second = self.try_step(&first.state, step, 0.5 * dt)?;
                second.diag.halved = true;
                Ok(vec![first, second])
            }
            Err(e) => Err(e),
        }
    }

    /// Output fields of a committed state.
    pub fn snapshot(&self, state: &FieldState, b: &BField, step: usize) -> Result<Snapshot, DriverError> {
        let mesh = self.mesh();
        let nn = mesh.num_nodes();
        let a = self.magnetics.dofmap().to_nodes(&state.a, nn);
        let d_nodes = self.d_nodes(&state.d);
        let mut u = vec![[0.0; 2]; nn];
        let mut von_mises = vec![0.0; mesh.num_cells()];
        if let Some(el) = &self.elasticity {
            for (n, un) in u.iter_mut().enumerate() {
                for (k, v) in un.iter_mut().enumerate() {
                    if let Some(dof) = el.dofmap().dof(n, k) {
                        *v = state.u[dof];
                    }
                }
            }
            let s: Vec<PlaneTensor> = el.cell_stresses(&state.u, b, Some(&d_nodes))?;
            von_mises = s.iter().map(PlaneTensor::von_mises).collect();
        }
        let b_magnitude = (0..mesh.num_cells()).map(|c| cell_b_magnitude(b, c)).collect();
        Ok(Snapshot {
            step,
            t: state.t,
            a,
            u,
            d: d_nodes,
            b_magnitude,
            von_mises,
        })
    }

    /// Runs to `t_end`. `every` is the snapshot cadence in steps (0 keeps
    /// only the final state); `observer` sees every committed step.
    pub fn run_with(&mut self, every: usize, mut observer: impl FnMut(&StepView)) -> RunResult {
        let mut state = self.initial_state();
        let mut diagnostics = Vec::new();
        let mut snapshots = Vec::new();
        let mut failure = None;
        let mut last_b = BField::zeros(self.mesh().num_cells(), self.magnetics.rule().len());
        let n_steps = self.cfg.num_steps();
        for step in 1..=n_steps {
            let dt = (self.cfg.t_end - state.t).min(self.cfg.dt);
            let outcomes = match self.advance(&state, step, dt) {
                Ok(o) => o,
                Err(e) => {
                    failure = Some(DriverError::AtStep {
                        step,
                        t: state.t + dt,
                        source: Box::new(e),
                    });
                    break;
                }
            };
            for o in outcomes {
                let d_nodes = self.d_nodes(&o.state.d);
                observer(&StepView {
                    diagnostics: &o.diag,
                    state: &o.state,
                    b: &o.b,
                    d_nodes: &d_nodes,
                    mesh: self.mesh(),
                    runner: self,
                });
                diagnostics.push(o.diag);
                state = o.state;
                last_b = o.b;
            }
            if every > 0 && step % every == 0 {
                match self.snapshot(&state, &last_b, step) {
                    Ok(s) => snapshots.push(s),
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
        }
        let last_step = diagnostics.last().map_or(0, |d| d.step);
        if !snapshots.last().is_some_and(|s| s.step == last_step) {
            match self.snapshot(&state, &last_b, last_step) {
                Ok(s) => snapshots.push(s),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        RunResult {
            diagnostics,
            snapshots,
            failure,
        }
    }
}

/// Builds the solvers for `case` and runs it.
pub fn run(case: &Case, cfg: &StaggeredConfig, every: usize) -> Result<RunResult, DriverError> {
    let mut runner = Runner::new(case, cfg.clone())?;
    Ok(runner.run_with(every, |_| {}))
}
