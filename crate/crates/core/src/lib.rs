//! Numerical toolkit for Birkhoff-James orthogonality on discretized
//! Lebesgue-Bochner spaces `L^p(mu, l^q_d)` over finitely many atoms.
//!
//! * [`blockspace`]: the spaces, their norms, dual pairing and support functionals.
//! * [`ortho`]: exact and epsilon-approximate B-J orthogonality, decided by
//!   convex minimization and by support-functional certificates.
//! * [`sip`]: the semi-inner product on `L^p(mu, X)` and its axioms.
//! * [`preserver`]: the scaling operators `U_eps`, isometry detection and
//!   preservation trials.
//! * [`harness`]: configuration, seeded trial runner and reports for the CLI.

pub mod blockspace;
pub mod error;
pub mod harness;
pub mod ortho;
pub mod preserver;
pub mod sip;

pub use blockspace::{BlockFunctional, BochnerElement, SpaceSpec};
pub use error::{Error, Result};
pub use ortho::{ApproxParam, CheckResult, Tolerances};
pub use preserver::{AtomPartition, ScalingOperator, TrialRecord};
