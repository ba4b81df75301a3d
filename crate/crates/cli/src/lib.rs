//! Pipeline driver behind the `keyprosody` binary.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod simulate;
