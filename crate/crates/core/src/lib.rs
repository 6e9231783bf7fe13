//! Planning and simulation of multi-agent motion and object transportation
//! under linear temporal logic goals.

// `!(x > 0.0)` style checks are there to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abstraction;
pub mod commands;
pub mod dynamics;
pub mod error;
pub mod executor;
pub mod geometry;
pub mod ltl;
pub mod navfield;
pub mod planfile;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
