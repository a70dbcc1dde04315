//! Benchmark harness: configuration, single runs with CSV output, parallel
//! sweeps and a gnuplot script generator.

pub mod config;
pub mod plot;
pub mod runner;
pub mod sweep;
