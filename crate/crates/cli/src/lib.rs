//! Configuration, run orchestration and verification suites behind the
//! `lyapunov-lab` binary.

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod verify;
