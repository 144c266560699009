//! Numerical laboratory for mollified moments of Dirichlet L-functions at
//! the central point: characters, exponential sums, central values, the
//! two-piece mollifier, averaging weights, moments and the non-vanishing
//! ratio optimizer.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod characters;
pub mod error;
pub mod expsums;
pub mod lvalue;
pub mod mollifier;
pub mod moments;
pub mod optimizer;
pub mod sum;
pub mod weights;

pub use error::{Error, Result};
