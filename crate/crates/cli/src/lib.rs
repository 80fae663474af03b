//! Library behind the `masklab` binary: argument grammar, command
//! execution and the built-in self test.

pub mod args;
pub mod error;
pub mod indexset;
mod plot;
pub mod run;
pub mod selftest;

pub use args::Cli;
pub use error::{exit, CliError};
pub use run::run;
