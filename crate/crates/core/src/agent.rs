//! The agent's decision kernel.
//!
//! Each observer keeps, for every (neighbour, error type) pair, a sensitivity
//! `d` and a counter `F` of steps since it last checked that pair. The urgency
//! of a pair is the adjusted sigmoid `2 * (1 / (1 + e^(-d*F)) - 0.5)`, which
//! starts at 0 and climbs toward 1 the longer the pair goes unchecked. The
//! physics application keeps the processor while the buffer watermark is at
//! least the largest urgency; otherwise the agent checks the most urgent pair.

use alloc::vec::Vec;

use crate::error::{ConfigError, SimError};
use crate::model::ErrorTypeId;

/// Guard used by [`utility_value`] in place of a zero denominator.
pub const UTILITY_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub d_init: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// Added to `d` when a check finds an error.
    pub delta_up: f64,
    /// Subtracted from `d` when a check finds nothing.
    pub delta_down: f64,
    /// `false` freezes every `d` at `d_init` (fixed-rate baseline).
    pub adaptive: bool,
    /// Weight on check recency in the utility value.
    pub c: f64,
    /// Expected data processable per decision interval, for the utility value.
    pub expected_data: f64,
    /// Steps a control decision is held before being re-evaluated.
    pub decision_interval: u64,
    /// Steps a node is occupied by one check.
    pub check_cost_steps: u64,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            d_init: 0.01,
            d_min: 0.001,
            d_max: 1.0,
            delta_up: 0.005,
            delta_down: 0.0005,
            adaptive: true,
            c: 1.0,
            expected_data: 5.0,
            decision_interval: 1,
            check_cost_steps: 1,
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = [
            ("d_init", self.d_init),
            ("d_min", self.d_min),
            ("d_max", self.d_max),
            ("delta_up", self.delta_up),
            ("delta_down", self.delta_down),
            ("c", self.c),
            ("expected_data", self.expected_data),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(ConfigError::new(field, "must be a finite number"));
            }
        }
        if self.d_min <= 0.0 {
            return Err(ConfigError::new("d_min", "must be > 0"));
        }
        if self.d_max < self.d_min {
            return Err(ConfigError::new("d_max", "must be >= d_min"));
        }
        if !(self.d_min..=self.d_max).contains(&self.d_init) {
            return Err(ConfigError::new("d_init", "must lie in [d_min, d_max]"));
        }
        if self.delta_up <= 0.0 {
            return Err(ConfigError::new("delta_up", "must be > 0"));
        }
        if self.delta_down <= 0.0 {
            return Err(ConfigError::new("delta_down", "must be > 0"));
        }
        if self.c < 0.0 {
            return Err(ConfigError::new("c", "must be >= 0"));
        }
        if self.expected_data < 0.0 {
            return Err(ConfigError::new("expected_data", "must be >= 0"));
        }
        if self.decision_interval == 0 {
            return Err(ConfigError::new("decision_interval", "must be >= 1"));
        }
        if self.check_cost_steps == 0 {
            return Err(ConfigError::new("check_cost_steps", "must be >= 1"));
        }
        Ok(())
    }
}

/// `2 * (1 / (1 + e^(-d*F)) - 0.5)`: 0 at `F = 0`, tending to 1 as `F` grows.
pub fn adjusted_sigmoid(d: f64, elapsed: u64) -> f64 {
    let x = d * elapsed as f64;
    2.0 * (1.0 / (1.0 + libm::exp(-x)) - 0.5)
}

/// `D / w + c / F`, with both denominators floored at [`UTILITY_EPSILON`].
/// Logged for diagnostics; control itself is decided by [`decide_control`].
pub fn utility_value(expected_data: f64, watermark: f64, c: f64, elapsed: u64) -> f64 {
    expected_data / watermark.max(UTILITY_EPSILON) + c / (elapsed as f64).max(UTILITY_EPSILON)
}

/// Next sensitivity after a check. Clamped to `[d_min, d_max]`.
pub fn update_sensitivity(d: f64, found: bool, params: &AgentParams) -> f64 {
    if !params.adaptive {
        d
    } else if found {
        (d + params.delta_up).min(params.d_max)
    } else {
        (d - params.delta_down).max(params.d_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlDecision {
    Pa,
    Check {
        target: usize,
        error: ErrorTypeId,
        score: f64,
    },
}

impl ControlDecision {
    pub fn is_check(&self) -> bool {
        matches!(self, ControlDecision::Check { .. })
    }
}

/// One observer's view of its neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    observer: usize,
    nodes: usize,
    error_types: usize,
    d: Vec<f64>,
    elapsed: Vec<u64>,
}

impl SensitivityMatrix {
    pub fn new(observer: usize, nodes: usize, error_types: usize, d_init: f64) -> Self {
        debug_assert!(observer < nodes);
        let len = nodes * error_types;
        Self {
            observer,
            nodes,
            error_types,
            d: alloc::vec![d_init; len],
            elapsed: alloc::vec![0; len],
        }
    }

    pub fn observer(&self) -> usize {
        self.observer
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn error_types(&self) -> usize {
        self.error_types
    }

    fn index(&self, target: usize, error: ErrorTypeId) -> Result<usize, SimError> {
        if target == self.observer {
            return Err(SimError::SelfCheck {
                observer: self.observer,
            });
        }
        if target >= self.nodes || error.0 >= self.error_types {
            return Err(SimError::NoSuchPair {
                observer: self.observer,
                target,
                error: error.0,
            });
        }
        Ok(target * self.error_types + error.0)
    }

    pub fn d(&self, target: usize, error: ErrorTypeId) -> Result<f64, SimError> {
        self.index(target, error).map(|i| self.d[i])
    }

    pub fn elapsed(&self, target: usize, error: ErrorTypeId) -> Result<u64, SimError> {
        self.index(target, error).map(|i| self.elapsed[i])
    }

    pub fn set_elapsed(
        &mut self,
        target: usize,
        error: ErrorTypeId,
        elapsed: u64,
    ) -> Result<(), SimError> {
        let i = self.index(target, error)?;
        self.elapsed[i] = elapsed;
        Ok(())
    }

    pub fn set_d(&mut self, target: usize, error: ErrorTypeId, d: f64) -> Result<(), SimError> {
        let i = self.index(target, error)?;
        self.d[i] = d;
        Ok(())
    }

    /// `(target, error, d, F)` for every neighbour pair, target-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, ErrorTypeId, f64, u64)> + '_ {
        let e_count = self.error_types;
        let observer = self.observer;
        self.d
            .iter()
            .zip(&self.elapsed)
            .enumerate()
            .filter(move |(i, _)| i / e_count != observer)
            .map(move |(i, (&d, &f))| (i / e_count, ErrorTypeId(i % e_count), d, f))
    }

    /// The pair with the highest urgency. Ties go to the lowest target, then
    /// the lowest error id. `None` only for a single-node farmlet.
    pub fn most_urgent(&self) -> Option<(usize, ErrorTypeId, f64)> {
        let mut best: Option<(usize, ErrorTypeId, f64)> = None;
        for (target, error, d, f) in self.entries() {
            let s = adjusted_sigmoid(d, f);
            if best.is_none_or(|(_, _, b)| s > b) {
                best = Some((target, error, s));
            }
        }
        best
    }

    pub fn tick_counters(&mut self) {
        for f in &mut self.elapsed {
            *f = f.saturating_add(1);
        }
    }

    /// Books one check of `(target, error)`: resets its counter and adapts
    /// its sensitivity. Every other entry is left as is.
    pub fn record_check(
        &mut self,
        target: usize,
        error: ErrorTypeId,
        found: bool,
        params: &AgentParams,
    ) -> Result<(), SimError> {
        let i = self.index(target, error)?;
        self.elapsed[i] = 0;
        self.d[i] = update_sensitivity(self.d[i], found, params);
        Ok(())
    }
}

/// PA keeps control while `watermark >= max urgency`; otherwise the agent
/// checks the most urgent pair.
pub fn decide_control(watermark: f64, matrix: &SensitivityMatrix) -> ControlDecision {
    decide_from_urgency(watermark, matrix.most_urgent())
}

/// [`decide_control`] for an already computed [`SensitivityMatrix::most_urgent`].
pub fn decide_from_urgency(
    watermark: f64,
    most_urgent: Option<(usize, ErrorTypeId, f64)>,
) -> ControlDecision {
    match most_urgent {
        Some((target, error, score)) if score > watermark => ControlDecision::Check {
            target,
            error,
            score,
        },
        _ => ControlDecision::Pa,
    }
}
