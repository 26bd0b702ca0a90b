//! Experiment parameterization and the two built-in scenarios.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::agent::AgentParams;
use crate::error::ConfigError;
use crate::fault::ErrorSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub farmlets: usize,
    pub nodes_per_farmlet: usize,
    pub error_types: usize,
    pub total_steps: u64,
    pub seed: u64,
    pub buffer_capacity: u64,
    /// Units arriving at every node each step.
    pub arrival_rate: u64,
    /// Units a healthy node processes per step.
    pub base_rate: u64,
    /// Multiplicative slowdown per error type, each in `(0, 1]`.
    pub slowdowns: Vec<f64>,
    pub agent: AgentParams,
    pub schedule: ErrorSchedule,
    pub sample_every: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Preset::PaperFluctuating.config()
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.farmlets == 0 {
            return Err(ConfigError::new("farmlets", "must be >= 1"));
        }
        if self.nodes_per_farmlet < 2 {
            return Err(ConfigError::new(
                "nodes_per_farmlet",
                "must be >= 2 (agents only monitor neighbours)",
            ));
        }
        if self.error_types == 0 {
            return Err(ConfigError::new("error_types", "must be >= 1"));
        }
        if self.buffer_capacity == 0 {
            return Err(ConfigError::new("buffer_capacity", "must be >= 1"));
        }
        if self.base_rate == 0 {
            return Err(ConfigError::new("base_rate", "must be >= 1"));
        }
        if self.sample_every == 0 {
            return Err(ConfigError::new("sample_every", "must be >= 1"));
        }
        if self.slowdowns.len() != self.error_types {
            return Err(ConfigError::new(
                format!("slowdown.{}", self.slowdowns.len().min(self.error_types)),
                format!(
                    "expected {} slowdown factors (one per error type), found {}",
                    self.error_types,
                    self.slowdowns.len()
                ),
            ));
        }
        for (i, &s) in self.slowdowns.iter().enumerate() {
            if !(s > 0.0 && s <= 1.0) {
                return Err(ConfigError::new(
                    format!("slowdown.{i}"),
                    format!("{s} is outside (0, 1]"),
                ));
            }
        }
        self.agent.validate()?;
        self.schedule.validate(self.total_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Adaptive agents under the moderate / low / high schedule.
    PaperFluctuating,
    /// Same scenario with every sensitivity frozen at 0.01.
    PaperFixedBaseline,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::PaperFluctuating, Preset::PaperFixedBaseline];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperFluctuating => "paper-fluctuating",
            Preset::PaperFixedBaseline => "paper-fixed-baseline",
        }
    }

    pub fn config(self) -> SimConfig {
        let agent = AgentParams {
            adaptive: matches!(self, Preset::PaperFluctuating),
            ..AgentParams::default()
        };
        SimConfig {
            farmlets: 1,
            nodes_per_farmlet: 6,
            error_types: 3,
            total_steps: 100_000,
            seed: 1,
            buffer_capacity: 1000,
            arrival_rate: 4,
            base_rate: 5,
            slowdowns: alloc::vec![0.5, 0.7, 0.8],
            agent,
            schedule: ErrorSchedule::fluctuating(),
            sample_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPreset;

impl fmt::Display for UnknownPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown preset (expected paper-fluctuating or paper-fixed-baseline)")
    }
}

impl FromStr for Preset {
    type Err = UnknownPreset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or(UnknownPreset)
    }
}
