//! Command-line front end for finite-SNR outage and diversity sweeps.
//!
//! The binary is a thin wrapper; everything it does is reachable from here
//! so tests can drive scenarios without spawning a process.

pub mod config;
pub mod error;
pub mod output;
pub mod record;
pub mod reproduce;
pub mod scenario;
