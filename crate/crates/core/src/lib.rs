//! Symplectic Magnus-based integrators for x'' + M(t)x = 0 with real
//! symmetric M(t).
//!
//! Two families are provided: Magnus-decomposition schemes
//! ([`decomposition`]), which propagate the fundamental matrix with
//! matrix-matrix products, and the 11-stage Magnus-splitting scheme
//! ([`splitting`]), which needs only matrix-vector products. Classical
//! Runge–Kutta baselines, a sixth-order Magnus oracle, the Mathieu, matrix
//! Hill and trapped-wave test problems and an experiment harness complete
//! the crate.

pub mod baseline;
pub mod bench;
pub mod decomposition;
pub mod error;
pub mod exec;
pub mod ledger;
pub mod linalg;
pub mod magnus;
pub mod method;
pub mod problem;
pub mod problems;
pub mod reference;
pub mod splitting;

pub use error::{Error, Result};
pub use exec::Execution;
pub use ledger::{Cost, CostLedger};
pub use linalg::{FundamentalMatrix, PhasePoint, ShearState, SymmetricMatrix};
pub use method::Method;
pub use problem::LinearProblem;
