//! Construction, PDE solving and numerical verification of special Lagrangian
//! 4-folds with SO(2)⋊S₃-symmetric cubic form in ℂ⁴, ℂP⁴ and ℂH⁴.

// `!(x <= tol)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops over small fixed tensors read closer to the formulas
#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod kfield;
pub mod structure;

pub use error::{Error, Result};
