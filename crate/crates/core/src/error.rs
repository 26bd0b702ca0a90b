use alloc::string::String;
use core::fmt;

/// A configuration value failed validation. `field` names the offending key
/// using the same spelling as the config file (`schedule.1.rate`, `d_min`, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    Config(ConfigError),
    /// An observer tried to check its own slot.
    SelfCheck {
        observer: usize,
    },
    /// (target, error) is outside the observer's matrix.
    NoSuchPair {
        observer: usize,
        target: usize,
        error: usize,
    },
    /// enqueued != processed + fill + dropped for a node.
    Conservation {
        farmlet: usize,
        slot: usize,
        enqueued: u64,
        processed: u64,
        fill: u64,
        dropped: u64,
    },
    /// The summary disagrees with the series it was folded from.
    SummaryMismatch {
        metric: &'static str,
    },
}

impl From<ConfigError> for SimError {
    fn from(e: ConfigError) -> Self {
        SimError::Config(e)
    }
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(e) => e.fmt(f),
            SimError::SelfCheck { observer } => {
                write!(f, "observer {observer} cannot check its own slot")
            }
            SimError::NoSuchPair {
                observer,
                target,
                error,
            } => write!(
                f,
                "observer {observer} has no entry for target {target}, error {error}"
            ),
            SimError::Conservation {
                farmlet,
                slot,
                enqueued,
                processed,
                fill,
                dropped,
            } => write!(
                f,
                "conservation violated at farmlet {farmlet} slot {slot}: \
                 enqueued {enqueued} != processed {processed} + fill {fill} + dropped {dropped}"
            ),
            SimError::SummaryMismatch { metric } => {
                write!(f, "summary total `{metric}` does not match its series")
            }
        }
    }
}

impl core::error::Error for SimError {}
impl core::error::Error for ConfigError {}
