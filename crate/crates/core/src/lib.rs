//! Non-myopic Bayesian optimisation with a multi-step lookahead expected
//! loss, approximated through a batch of predicted future evaluations and
//! expectation propagation over polyhedral regions.

// Negated comparisons below are NaN rejections.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod ep;
pub mod error;
pub mod gp;
pub mod glasses;
pub mod normal;
pub mod optim;
pub mod steps_ahead;
pub mod test_functions;

pub use error::{Error, Result};
