//! Configuration-driven front end for the gaugeforge verification suites.

pub mod commands;
pub mod config;
pub mod report;
