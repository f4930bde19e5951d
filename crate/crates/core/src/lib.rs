//! Simulation and analysis of a single vehicle guarding a circular perimeter
//! against targets that move radially inward.

pub mod bounds;
pub mod cli;
pub mod geometry;
pub mod graph;
pub mod model;
pub mod tour;
pub mod engine;
pub mod policies;
