#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod error;
pub mod graph;
pub mod operators;
pub mod heat_kernel;
pub mod semilinear;
pub mod picard;
