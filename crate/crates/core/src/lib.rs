//! Manifest-driven synthesis of spatial-reasoning challenges with certified unique
//! answers, difficulty calibration and offline evaluation.

pub mod canonical;
pub mod difficulty;
pub mod evalkit;
pub mod families;
pub mod geometry;
pub mod manifest;
pub mod par;
pub mod pipeline;
pub mod renderer;
pub mod rng;
