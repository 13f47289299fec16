//! Lift-based privacy leakage analysis and privatization mechanisms for
//! discrete joint distributions.
//!
//! The crate is organized bottom-up:
//!
//! - [`prob`]: validated joint tables, marginals, channels, entropy and
//!   mutual information, random Dirichlet joints.
//! - [`lift`]: per-output lift statistics (`Ψ`, `Λ`, `Γ`) and average
//!   leakage measures.
//! - [`measures`]: lift-based and lift-inverse measures and the bounds they
//!   imply on the extreme lifts.
//! - [`watchdog`]: low/high-risk partitioning, X-invariant merging and
//!   greedy subset merging.
//! - [`response`]: optimal random response under asymmetric lift bounds,
//!   via polytope vertex enumeration and a small linear program, and its
//!   per-subset variant.
//! - [`harness`]: seeded Monte-Carlo sweeps, lift histograms and
//!   single-instance analysis with CSV output.

pub mod budget;
pub mod error;
pub mod harness;
pub mod io;
pub mod lift;
pub mod measures;
pub mod prob;
pub mod report;
pub mod response;
pub mod watchdog;

pub use budget::Budget;
pub use error::{Error, Result};
pub use lift::{lift_table, LiftTable};
pub use measures::{Direction, MeasureKind};
pub use prob::{Channel, JointDistribution, Marginal};
pub use report::{MechanismKind, MechanismReport};
pub use watchdog::Partition;
