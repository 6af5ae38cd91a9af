//! Vision-only navigation along a topological graph.
//!
//! The pipeline localizes against a graph of recorded poses, picks a subgoal
//! pixel from a relative yaw and a traversability mask, and tracks it with a
//! sampling-based MPPI controller whose costs live in image space and on the
//! ground plane. A small deterministic simulator supplies oracle perception.

pub mod config;
pub mod controller;
pub mod episode;
pub mod exec;
pub mod geometry;
pub mod logs;
pub mod scenarios;
pub mod simworld;
pub mod subgoal;
pub mod topograph;
pub mod traversability;
