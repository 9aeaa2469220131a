//! Library surface of the study runner, shared by the `hpf` binary and the
//! integration tests.

pub mod config;
pub mod output;
pub mod studies;
pub mod svg;
