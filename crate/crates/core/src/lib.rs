//! Energy-efficient downlink scheduling for a distributed antenna system
//! under a reactive threshold jammer.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod jammer;
pub mod phy;
pub mod scenario;
pub mod sched;
pub mod stats;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use sched::SchedulerKind;
