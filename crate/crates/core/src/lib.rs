#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod closure;
pub mod energy;
pub mod error;
pub mod grid;
pub mod helmholtz;
pub mod linalg;
pub mod solver;
pub mod subsolution;
pub mod symmetric_form;

pub use error::{Error, Result};
