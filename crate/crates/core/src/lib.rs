//! Optimality-system solvers for Merton's terminal-utility problem.
//!
//! The density of controlled wealth solves a forward Fokker–Planck equation,
//! its multiplier solves the backward adjoint equation, and the optimal
//! feedback control is read off pointwise from the multiplier's first and
//! second derivatives. [`optimizer::optimize`] iterates the three to a fixed
//! point; [`hj_solver::solve_hj`] solves the resulting Hamilton–Jacobi
//! equation directly by policy iteration. [`oracle`] and [`montecarlo`]
//! provide independent references.

pub mod adjoint;
pub mod control_law;
pub mod error;
pub mod field;
pub mod fokker_planck;
pub mod grid;
pub mod hj_solver;
pub mod market;
pub mod montecarlo;
pub mod optimizer;
pub mod oracle;
pub mod report;
pub mod stencil;
pub mod sum;
pub mod tridiag;
pub mod utility;

pub use error::{Error, Result};
pub use field::{FieldFrame, FieldTrajectory};
pub use grid::GridSpec;
pub use market::MarketModel;
pub use report::SolveReport;
pub use utility::UtilitySpec;
