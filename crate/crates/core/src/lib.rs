//! Subgroup fairness auditing and learning.
//!
//! Auditing a classifier for γ-unfairness over a rich group class reduces to
//! cost-sensitive classification. Learning a fair classifier is solved as a
//! zero-sum game between a Learner and an Auditor, each of which only needs
//! a CSC oracle.

pub mod audit;
pub mod csc;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod frontier;
pub mod game;
pub mod labels;
pub mod metrics;
pub mod model;

pub use error::{Error, Result};
