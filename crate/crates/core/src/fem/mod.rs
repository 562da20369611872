//! Lagrange finite elements on triangles: quadrature, shape functions, dof
//! numbering, sparse assembly and linear solvers.

pub mod assembly;
pub mod dofmap;
pub mod element;
pub mod norms;
pub mod qpfield;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use assembly::{assemble_system, assemble_vector, AssemblyError, LocalSystem};
pub use dofmap::DofMap;
pub use element::{CellValues, QpValues};
pub use norms::{interpolate, l2_error};
pub use qpfield::QpField;
pub use quadrature::{QuadratureRule, UnsupportedOrder};
pub use solver::{solve_linear, LinearSolver, SolverError};
pub use sparse::{CsrMatrix, SparseSystem};
