//! Model-agnostic adaptive testing.
//!
//! Each step scores the untested pool by expected model change, keeps the
//! top candidates, and picks the one that adds the most importance-weighted
//! concept coverage. Diagnosis models, baselines and the simulation harness
//! all sit behind the same small set of traits.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cdm;
pub mod diversity;
pub mod environment;
pub mod error;
pub mod harness;
pub mod importance;
pub mod quality;
pub mod session;

pub use error::{MaatError, Result};
