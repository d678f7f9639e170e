//! Experiment runner for the continuous-averaging library: configuration,
//! grid execution, fits, and report emission.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod report;
