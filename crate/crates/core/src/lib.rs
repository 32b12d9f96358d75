//! Support-function curvature flows for regular and general
//! Orlicz–Minkowski problems on S¹ and S².

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Flow failures carry the last good state by value.
#![allow(clippy::result_large_err)]

pub mod config;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod measure;
pub mod orlicz;
pub mod quadrature;
pub mod runner;

pub use error::{Error, Result};
