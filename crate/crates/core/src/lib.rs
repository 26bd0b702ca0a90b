//! Discrete-time simulation of polymorphic, very lightweight fault-mitigation
//! agents (VLAs) embedded in the worker DSPs of a farmlet.
//!
//! Every DSP shares its cycles between the physics application (PA), which
//! drains the crossing-data buffer, and its embedded agent, which checks
//! neighbouring DSPs for errors. Each step a DSP compares its buffer watermark
//! against an adjusted sigmoid of the time since it last checked every
//! (neighbour, error type) pair and hands control to whichever is larger.
//! Checks that find an error raise the agent's sensitivity to that pair and
//! checks that find nothing lower it, so agents specialise purely from what the
//! environment shows them.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line live
//! in the `vla-sim` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agent;
pub mod config;
pub mod engine;
pub mod error;
pub mod fault;
pub mod metrics;
pub mod model;

pub use agent::{
    adjusted_sigmoid, decide_control, decide_from_urgency, update_sensitivity, utility_value,
    AgentParams, ControlDecision, SensitivityMatrix,
};
pub use config::{Preset, SimConfig};
pub use engine::{run, FarmletSim};
pub use error::{ConfigError, SimError};
pub use fault::{ErrorSchedule, Phase, RngStream};
pub use metrics::{Decision, EventKind, MetricsLog, Summary};
pub use model::{CrossingBuffer, DspId, DspNode, ErrorStateSet, ErrorTypeId, FarmletState};
