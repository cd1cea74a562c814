//! Dynamic payoff mechanisms that steer a population of learning agents
//! whose strategy profile drives an exogenous dynamical system.

// Negated comparisons such as `!(x > 0.0)` are used on purpose so that NaN
// fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod design;
pub mod error;
pub mod exo;
pub mod mechanism;
pub mod output;
pub mod presets;
pub mod rules;
pub mod runner;
pub mod sim;
pub mod simplex;

pub use error::{Error, Result};
