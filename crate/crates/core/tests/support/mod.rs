//! Oracles shared by the integration tests and the acceptance run.

#![allow(dead_code)]

pub mod metrics;
pub mod recovery;
pub mod stats;
