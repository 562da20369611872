//! Manufactured-solution convergence study of the steady magnetic operator
//! `−∇·(μ⁻¹ ∇A) = J` on the unit square with `A = 0` on the boundary.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::fem::norms::l2_error;
use crate::magnetics::{GradPhi, MagneticProblem, MagneticsError, Source, SourceFn};
use crate::material::MaterialSet;
use crate::mesh::{rectangle, CellTag, Point};

/// Permeability used by the study.
pub const MU: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MmsError {
    #[error("need at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error("element order must be 1 or 2, got {0}")]
    Order(usize),
    #[error(transparent)]
    Magnetics(#[from] MagneticsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsLevel {
    pub h: f64,
    pub l2_error: f64,
    /// `log2(e_{i−1}/e_i)`; absent on the coarsest level.
    pub rate: Option<f64>,
}

pub fn exact(x: Point) -> f64 {
    (PI * x[0]).sin() * (2.0 * PI * x[1]).sin() * (1.0 + x[0])
}

/// `−μ⁻¹ ΔA` of [`exact`].
fn rhs(x: Point) -> f64 {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let sy = (2.0 * PI * x[1]).sin();
    let g = 1.0 + x[0];
    let d2x = (-PI * PI * sx * g + 2.0 * PI * cx) * sy;
    let d2y = -4.0 * PI * PI * sx * sy * g;
    -(d2x + d2y) / MU
}

/// Runs `levels` uniform meshes with `4·2^i` divisions per side.
pub fn mms_study(order: usize, levels: usize) -> Result<Vec<MmsLevel>, MmsError> {
    if levels < 3 {
        return Err(MmsError::TooFewLevels(levels));
    }
    if order != 1 && order != 2 {
        return Err(MmsError::Order(order));
    }
    let mut material = MaterialSet::example12();
    material.vacuum.mu0 = MU;
    material.vacuum.sigma0 = 0.0;
    let src: SourceFn = Arc::new(|x, _| rhs(x));
    let mut out: Vec<MmsLevel> = Vec::with_capacity(levels);
    for i in 0..levels {
        let n = 4usize << i;
        let mut mesh = rectangle([0.0, 0.0], [1.0, 1.0], n, n, CellTag::Vacuum);
        if order == 2 {
            mesh = mesh.to_order2();
        }
        let p = MagneticProblem::new(&mesh, material.clone(), Source::Field(src.clone()), GradPhi::ZERO);
        let a = p.step(&p.zeros(), None, 0.0, f64::INFINITY)?;
        let e = l2_error(&mesh, p.dofmap(), &a, exact);
        let rate = out.last().map(|prev| (prev.l2_error / e).log2());
        out.push(MmsLevel {
            h: 1.0 / n as f64,
            l2_error: e,
            rate,
        });
    }
    Ok(out)
}

/// CSV with header `h,l2_error,rate`; the rate is empty on the first row.
pub fn to_csv(levels: &[MmsLevel]) -> String {
    let mut s = String::from("h,l2_error,rate\n");
    for l in levels {
        let _ = write!(s, "{:.12e},{:.12e},", l.h, l.l2_error);
        if let Some(r) = l.rate {
            let _ = write!(s, "{r:.6}");
        }
        s.push('\n');
    }
    s
}
