//! Configuration, file output and command-line verbs around `yamabe-core`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod output;

pub use commands::{run_command, Check, Outcome, Verb};
pub use config::{parse_config, RunConfig};
pub use error::LabError;
pub use exec::Rayon;
pub use output::{output_root, OUT_ENV};
