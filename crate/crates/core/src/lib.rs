//! Calibration, steady state, perfect-foresight transitions and
//! payment-instrument equivalence audits for a real economy with bank deposits,
//! central bank digital currency (CBDC) and collateralized central-bank loans.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod equivalence;
pub mod error;
pub mod model;
pub mod numerics;
pub mod perfect_foresight;
pub mod steady_state;

pub use error::{Error, Result};
pub use model::{ModelParams, PeriodState};
