//! Config-driven platform for building, running, and evaluating multi-domain
//! task-oriented dialog agents against simulated and human users.

pub mod agent;
pub mod config;
pub mod dialog;
pub mod domain;
pub mod dst;
pub mod env;
pub mod error;
pub mod harness;
pub mod nlg;
pub mod nlu;
pub mod policy;
pub mod service;
pub mod user_sim;
pub mod world;

#[cfg(test)]
mod test_support;

pub use error::{Error, Result};
