//! Config-driven front end for the graph semilinear heat equation toolkit.

pub mod config;
pub mod error;
pub mod plot;
pub mod run;
