//! Two-dimensional finite-element simulation of magnetostriction-induced
//! fracture in ferromagnetic solids.
//!
//! Three fields are coupled on a triangular mesh: the out-of-plane magnetic
//! vector potential `A_z` on the whole domain, the displacement `u` on the
//! solid, and a crack phase field `d` on the solid. The [`driver`] advances
//! them in time with a staggered fixed-point loop.
//!
//! Units throughout: mm, s, GPa (= kN/mm²), kN/mm for the fracture energy.

pub mod config;
pub mod constitutive;
pub mod driver;
pub mod elasticity;
pub mod fem;
pub mod fracture;
pub mod magnetics;
pub mod material;
pub mod mesh;
pub mod mms;
pub mod output;
pub mod par;

pub use config::{CaseConfig, ConfigError};
pub use driver::{DriverError, HistoryUpdate, RunResult, StaggeredConfig};
pub use mesh::{BoundaryTag, CellTag, Mesh, MeshError};
pub use par::Exec;
