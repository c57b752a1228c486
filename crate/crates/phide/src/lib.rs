//! Experiment runner for learning on relaxed information maps.

pub mod config;
pub mod experiment;
pub mod games;
pub mod summary;
pub mod verify;
