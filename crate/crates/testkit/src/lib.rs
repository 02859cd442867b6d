//! Test-only generators and oracles.
//!
//! Nothing here depends on `pianoview-core`: the writers and oracles are
//! independent reimplementations used to check the core from the outside.

pub mod dataset;
pub mod motion;
pub mod oracle;
pub mod smf;
