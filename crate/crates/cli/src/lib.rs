//! Harness for the exponential-sum library: verification suites, measurement
//! sweeps, machine-readable output, and a deterministic worker pool.
//!
//! Every randomized choice is driven by a counter-based generator keyed by
//! (seed, grid-point index), so identical configurations produce byte-identical
//! output files at any worker count.

pub mod config;
pub mod output;
pub mod pool;
pub mod suites;
pub mod sweeps;
