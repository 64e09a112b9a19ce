//! Configuration, experiment orchestration and output layout behind the
//! `usv-auv` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Loaded, PolicyKind, Profile, RunConfig, SweepRun};
pub use error::{HarnessError, Result};
