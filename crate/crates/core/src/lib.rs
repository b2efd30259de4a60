// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod generator;
pub mod integrators;
pub mod matrices;
pub mod noise;
pub mod potentials;
pub mod schedules;
pub mod theory;

pub use error::{Error, Result};
