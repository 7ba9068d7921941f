//! Numerical laboratory for joint concavity and convexity of matrix trace and
//! norm functionals.
//!
//! The crate evaluates functionals of the form
//! `||{Phi(A^p)^{1/2} Psi(B^q) Phi(A^p)^{1/2}}^s||`,
//! `||{Phi(A^p) sigma Psi(B^q)}^s||`, `||Phi(A^p)^s||` and
//! `||exp{Phi(log A) + Psi(log B)}||` for positive linear maps `Phi`, `Psi`,
//! Kubo-Ando means `sigma`, and symmetric norms or anti-norms, then tests
//! joint concavity/convexity empirically and hunts replayable counterexamples.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod families;
pub mod lab;
pub mod linalg;
pub mod means;
pub mod norms;
pub mod posmaps;

pub use error::{LabError, Result};
pub use families::{FamilyKind, FamilySpec, ParameterPoint};
pub use lab::{Certificate, Direction, TestReport, TheoremId, Verdict};
pub use linalg::{HermMatrix, PosDefMatrix, SamplerConfig};
pub use means::{MeanKind, MeanModifier, MeanSpec};
pub use norms::{NormClass, NormSpec};
pub use posmaps::{MapKind, MapSpec};

/// Library version embedded in every serialized run output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
