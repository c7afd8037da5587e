//! Numerical verification of point and potential transformations between
//! nonlinear diffusion equations.
//!
//! Second-order complex jets carry derivatives through a transformation's
//! chain rule; the pushed jets are substituted into the target equation and
//! the residual measured.

pub mod catalog;
pub mod error;
pub mod expr;
pub mod numjet;
pub mod pde;
pub mod transform;
pub mod verify;

pub use catalog::{
    lambda_of_mu, scaling_parameter_map, solution_eval, CaseKind, Catalog, ClosedFormSolution,
    VerificationCase,
};
pub use error::{Error, Result};
pub use expr::{Expr, Params, Var};
pub use numjet::{CScalar, Jet};
pub use pde::{Equation, PotentialSystem, ScalarJetPoint, ScalarUPde, ScalarVPde, SystemJetPoint};
pub use transform::{ScalarTransform, SystemTransform, Transform};
pub use verify::{CheckReport, SamplingConfig, SuiteConfig, SuiteReport};
