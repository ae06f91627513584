//! Open-set recognition evaluation toolkit: run I/O, scoring rules,
//! threshold-free metrics, difficulty-graded class splits, cross-run
//! analysis and synthetic run generation.

pub mod analysis;
pub mod metrics;
pub mod runio;
pub mod scoring;
pub mod splits;
pub mod synth;
