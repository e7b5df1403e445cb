//! Dense nonlinear programming support for the line-parameter recovery models.
//!
//! * [`dual`]: a [`Scalar`](dual::Scalar) trait and forward-mode second-order
//!   dual numbers used to obtain exact gradients and Hessians.
//! * [`ipm`]: a primal-dual interior-point solver for problems with a handful
//!   of variables and constraints.

pub mod dual;
pub mod ipm;

pub use dual::{Dual2, Scalar};
pub use ipm::{
    constraint_violation, solve, ConstraintKind, Derivatives, IpmOptions, IpmSolution, IpmStatus,
    NlpProblem,
};
