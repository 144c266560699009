//! Command-line front end: configuration layering, the central-value cache,
//! output tables and the subcommands.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;
