#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod excitation;
pub mod ftc;
pub mod mixing;
pub mod numerics;
pub mod operators;
pub mod scenarios;
pub mod signals;

pub use error::{Error, Result};
