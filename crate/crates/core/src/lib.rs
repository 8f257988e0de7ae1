//! Scalar conservation laws on foliated (1+1)-dimensional spacetimes.
//!
//! The crate covers both formulations of the equation (a flux vector field
//! `f(u)` with `div f(u) = 0`, and its dual one-form flux `omega(u)` with
//! `d omega(u) = 0`), a monotone finite-volume solver on the foliation, and
//! evaluators for Kuznetsov-type L1 error budgets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod flux;
pub mod geometry;
pub mod harness;
pub mod mollifier;
pub mod solver;

pub use error::{Error, Result};
