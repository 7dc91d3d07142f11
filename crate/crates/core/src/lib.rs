//! Discrete active predictive coding over a population of rewrite rules.
//!
//! Rules are symbolic `lhs → rhs` rewrites over sets of ground facts. A
//! softmax over per-rule logits turns the population into a stochastic
//! generative model; the mismatch between what the rules predict and what
//! the environment shows (a KL divergence over outcome patterns) drives
//! both structural edits to the rules and Wasserstein natural-gradient
//! steps on the logits. Causal rule induction adds rules that explain
//! surprising, possibly delayed, effects.
//!
//! Modules:
//!
//! - [`metagraph`]: terms, matching, rewriting, sampling, rule distances
//! - [`beliefs`]: rule probabilities, outcome distributions, error and rewards
//! - [`transport`]: rule graph, measure-dependent Laplacian, metric tensor,
//!   natural-gradient and proximal steps
//! - [`learning`]: the predict/act/observe/update trainer
//! - [`airis`]: causal rule induction, delayed attribution, planning
//! - [`envs`]: corridor, bug grid, and feature world
//! - [`harness`]: experiment configs, snapshots, metrics export

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airis;
pub mod beliefs;
pub mod envs;
mod error;
pub mod harness;
pub mod learning;
pub mod metagraph;
pub mod transport;

pub use error::{Error, Result};
