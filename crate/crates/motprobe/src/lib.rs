//! Library surface of the `motprobe` command-line tool, exposed so
//! integration tests can drive the same code paths as the binary.

pub mod configfile;
pub mod errors;
pub mod manifest;
pub mod report;
pub mod runner;
