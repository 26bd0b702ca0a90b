//! Seeded error injection under a piecewise-constant rate schedule.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::ConfigError;
use crate::model::{ErrorTypeId, FarmletState};

/// Steps `[start, end)` during which every (node, error type) pair is hit
/// with probability `rate` per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub start: u64,
    pub end: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSchedule {
    phases: Vec<Phase>,
}

impl ErrorSchedule {
    pub fn new(phases: Vec<Phase>) -> Self {
        Self { phases }
    }

    /// A single phase covering `[0, total_steps)`.
    pub fn constant(rate: f64, total_steps: u64) -> Self {
        Self::new(alloc::vec![Phase {
            start: 0,
            end: total_steps,
            rate,
        }])
    }

    /// Moderate, low, then high: 5e-4 on `[0, 35000)`, 5e-6 on
    /// `[35000, 70000)` and 5e-3 on `[70000, 100000)`.
    pub fn fluctuating() -> Self {
        Self::new(alloc::vec![
            Phase {
                start: 0,
                end: 35_000,
                rate: 5e-4,
            },
            Phase {
                start: 35_000,
                end: 70_000,
                rate: 5e-6,
            },
            Phase {
                start: 70_000,
                end: 100_000,
                rate: 5e-3,
            },
        ])
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    /// Phases must be contiguous from step 0, each non-empty, with rates in
    /// `[0, 1]`, and reach at least `total_steps`.
    pub fn validate(&self, total_steps: u64) -> Result<(), ConfigError> {
        if self.phases.is_empty() {
            return if total_steps == 0 {
                Ok(())
            } else {
                Err(ConfigError::new("schedule", "no phases defined"))
            };
        }
        let mut expected_start = 0;
        for (i, p) in self.phases.iter().enumerate() {
            if p.start != expected_start {
                return Err(ConfigError::new(
                    format!("schedule.{i}.start"),
                    format!("must equal {expected_start} (phases are contiguous from step 0)"),
                ));
            }
            if p.end <= p.start {
                return Err(ConfigError::new(
                    format!("schedule.{i}.end"),
                    format!("must be greater than start {}", p.start),
                ));
            }
            if !(0.0..=1.0).contains(&p.rate) {
                return Err(ConfigError::new(
                    format!("schedule.{i}.rate"),
                    format!("{} is outside [0, 1]", p.rate),
                ));
            }
            expected_start = p.end;
        }
        if expected_start < total_steps {
            return Err(ConfigError::new(
                format!("schedule.{}.end", self.phases.len() - 1),
                format!("schedule ends at {expected_start} but total_steps is {total_steps}"),
            ));
        }
        Ok(())
    }

    /// Index of the phase containing `step`. Validated schedules always have one
    /// for `step < total_steps`.
    pub fn phase_index(&self, step: u64) -> Option<usize> {
        self.phases
            .iter()
            .position(|p| (p.start..p.end).contains(&step))
    }

    /// All error types share one rate per phase.
    pub fn rate_at(&self, step: u64, _error: ErrorTypeId) -> f64 {
        self.phase_index(step)
            .map(|i| self.phases[i].rate)
            .unwrap_or(0.0)
    }
}

/// ChaCha8 stream `farmlet` under seed `seed`: same pair, same variates.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    draws: u64,
}

impl RngStream {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, draws: 0 }
    }

    /// Uniform on `[0, 1)` from the top 53 bits of the next `u64`.
    pub fn next_uniform(&mut self) -> f64 {
        self.draws += 1;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// Draws one variate per (slot, error type), slot-major, and activates the
/// pair when the variate falls below the current rate. Already-active pairs
/// still consume their draw. Returns the newly activated pairs in draw order.
pub fn inject(
    farmlet: &mut FarmletState,
    schedule: &ErrorSchedule,
    step: u64,
    rng: &mut RngStream,
) -> Vec<(usize, ErrorTypeId)> {
    let mut activated = Vec::new();
    let error_types = farmlet.errors.error_types();
    for slot in 0..farmlet.len() {
        for e in 0..error_types {
            let error = ErrorTypeId(e);
            let u = rng.next_uniform();
            if u < schedule.rate_at(step, error) && farmlet.errors.activate(slot, error, step) {
                activated.push((slot, error));
            }
        }
    }
    activated
}

#[cfg(test)]
mod tests {
    use super::*;

    fn farmlet() -> FarmletState {
        FarmletState::new(0, 6, 3, 1000, 5)
    }

    #[test]
    fn fluctuating_rates() {
        let s = ErrorSchedule::fluctuating();
        s.validate(100_000).unwrap();
        assert_eq!(s.rate_at(10_000, ErrorTypeId(0)), 5e-4);
        assert_eq!(s.rate_at(34_999, ErrorTypeId(1)), 5e-4);
        assert_eq!(s.rate_at(35_000, ErrorTypeId(1)), 5e-6);
        assert_eq!(s.rate_at(50_000, ErrorTypeId(2)), 5e-6);
        assert_eq!(s.rate_at(70_000, ErrorTypeId(0)), 5e-3);
        assert_eq!(s.rate_at(99_999, ErrorTypeId(0)), 5e-3);
    }

    #[test]
    fn schedule_validation() {
        let gap = ErrorSchedule::new(alloc::vec![
            Phase {
                start: 0,
                end: 10,
                rate: 0.1
            },
            Phase {
                start: 11,
                end: 20,
                rate: 0.1
            },
        ]);
        assert_eq!(gap.validate(20).unwrap_err().field, "schedule.1.start");

        let rate = ErrorSchedule::new(alloc::vec![Phase {
            start: 0,
            end: 10,
            rate: 1.5
        }]);
        let err = rate.validate(10).unwrap_err();
        assert_eq!(err.field, "schedule.0.rate");
        assert!(err.reason.contains("[0, 1]"));

        let short = ErrorSchedule::constant(0.1, 10);
        assert_eq!(short.validate(11).unwrap_err().field, "schedule.0.end");
        // longer than the run is fine
        short.validate(5).unwrap();
        ErrorSchedule::new(Vec::new()).validate(0).unwrap();
        assert!(ErrorSchedule::new(Vec::new()).validate(1).is_err());
    }

    #[test]
    fn zero_rate_consumes_draws_only() {
        let mut f = farmlet();
        let before = f.clone();
        let mut rng = RngStream::new(7, 0);
        let s = ErrorSchedule::constant(0.0, 10);
        assert!(inject(&mut f, &s, 0, &mut rng).is_empty());
        assert_eq!(f, before);
        assert_eq!(rng.draws(), 18);
    }

    #[test]
    fn unit_rate_activates_everything_once() {
        let mut f = farmlet();
        let mut rng = RngStream::new(7, 0);
        let s = ErrorSchedule::constant(1.0, 10);
        assert_eq!(inject(&mut f, &s, 0, &mut rng).len(), 18);
        assert_eq!(f.errors.active_count(), 18);
        assert!(inject(&mut f, &s, 1, &mut rng).is_empty());
        assert_eq!(f.errors.onset(3, ErrorTypeId(2)), Some(0));
        assert_eq!(rng.draws(), 36);
    }

    #[test]
    fn identical_streams_give_identical_traces() {
        let s = ErrorSchedule::constant(0.05, 1000);
        let trace = |seed, stream| {
            let mut f = farmlet();
            let mut rng = RngStream::new(seed, stream);
            let mut out = Vec::new();
            for step in 0..1000 {
                for (slot, e) in inject(&mut f, &s, step, &mut rng) {
                    out.push((step, slot, e));
                    f.errors.clear(slot, e);
                }
            }
            out
        };
        assert_eq!(trace(11, 0), trace(11, 0));
        assert_ne!(trace(11, 0), trace(11, 1));
        assert_ne!(trace(11, 0), trace(12, 0));
    }

    #[test]
    fn attempt_frequency_matches_binomial() {
        // Count variates below the rate directly, independent of activation state.
        let rate = 5e-3;
        let steps = 100_000u64;
        let mut rng = RngStream::new(2024, 0);
        let trials = steps * 18;
        let hits = (0..trials).filter(|_| rng.next_uniform() < rate).count() as f64;
        let mean = trials as f64 * rate;
        let sd = libm::sqrt(trials as f64 * rate * (1.0 - rate));
        assert!(
            (hits - mean).abs() < 5.0 * sd,
            "hits {hits}, expected {mean} +- {sd}"
        );
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut rng = RngStream::new(0, 3);
        for _ in 0..10_000 {
            let u = rng.next_uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
