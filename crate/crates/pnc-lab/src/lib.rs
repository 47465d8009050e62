//! Library surface of the `pnc-lab` experiment runner: config parsing,
//! experiment dispatch, CSV reporting and golden-file verification. The
//! binary in `main.rs` is a thin CLI over these modules.

pub mod config;
pub mod experiments;
pub mod report;
