//! Structural vector autoregressions identified through the unitriangular
//! LU factorization of selected reduced-form coefficient columns.
//!
//! The pipeline is: [`var::ols_fit`] for the reduced form, [`identify`] for
//! `Q̂`, `Â₀`, `Â` and their delta-method covariances, [`impulse`] for
//! responses and bands, [`inference`] for tests of `A₀ = O`, and
//! [`simulation`] for Monte Carlo studies. [`cli`] wires these into the
//! command-line tool.

pub mod cli;
pub mod error;
pub mod identify;
pub mod impulse;
pub mod inference;
pub mod linalg;
pub mod numdiff;
pub mod simulation;
pub mod var;

pub use error::{Result, SvarError};
pub use identify::{ColumnSelection, JacobianMethod, StructuralFit, StructuralPoint};
pub use impulse::IrfResult;
pub use inference::{StatisticKind, TestResult};
pub use linalg::Mat;
pub use simulation::{ReplicationConfig, ReplicationReport, SvarDgp};
pub use var::{ReducedFormFit, TimeSeriesPanel};
