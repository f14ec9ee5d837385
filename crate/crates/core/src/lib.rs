//! Simulation core for multi-agent workflow management.

pub mod actions;
pub mod engine;
pub mod evaluation;
pub mod model;
pub mod policies;
pub mod rng;
pub mod scenario;
