//! Time series and run totals.
//!
//! `d` and throughput rows are sampled every `sample_every` steps; events are
//! always recorded. Per-node totals and per-phase sensitivity means are
//! accumulated every step so the summary does not depend on the sampling.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Pa,
    Vla,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Pa => "PA",
            Decision::Vla => "VLA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Inject,
    CheckHit,
    CheckMiss,
    OverflowDrop,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Inject => "inject",
            EventKind::CheckHit => "check_hit",
            EventKind::CheckMiss => "check_miss",
            EventKind::OverflowDrop => "overflow_drop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DRow {
    pub step: u64,
    pub farmlet: usize,
    pub observer: usize,
    pub target: usize,
    pub error: usize,
    pub d: f64,
    pub elapsed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThroughputRow {
    pub step: u64,
    pub farmlet: usize,
    pub slot: usize,
    pub processed: u64,
    pub fill: u64,
    /// Dropped during this step.
    pub dropped: u64,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRow {
    pub step: u64,
    pub farmlet: usize,
    /// Target node for checks and injections, the overflowing node for drops.
    pub slot: usize,
    pub kind: EventKind,
    /// `None` for overflow drops.
    pub error: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeTotals {
    pub farmlet: usize,
    pub slot: usize,
    pub enqueued: u64,
    pub processed: u64,
    pub dropped: u64,
    pub final_fill: u64,
    pub pa_steps: u64,
    pub vla_steps: u64,
    pub check_hits: u64,
    pub check_misses: u64,
    pub utility_sum: f64,
}

/// Running per-phase sums of `d` for one farmlet, indexed
/// `[phase][observer][target][error]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDAccumulator {
    nodes: usize,
    error_types: usize,
    steps: Vec<u64>,
    sums: Vec<f64>,
}

impl PhaseDAccumulator {
    pub fn new(phases: usize, nodes: usize, error_types: usize) -> Self {
        Self {
            nodes,
            error_types,
            steps: alloc::vec![0; phases],
            sums: alloc::vec![0.0; phases * nodes * nodes * error_types],
        }
    }

    fn index(&self, phase: usize, observer: usize, target: usize, error: usize) -> usize {
        ((phase * self.nodes + observer) * self.nodes + target) * self.error_types + error
    }

    pub fn begin_step(&mut self, phase: usize) {
        self.steps[phase] += 1;
    }

    pub fn add(&mut self, phase: usize, observer: usize, target: usize, error: usize, d: f64) {
        let i = self.index(phase, observer, target, error);
        self.sums[i] += d;
    }

    pub fn phases(&self) -> usize {
        self.steps.len()
    }

    pub fn steps_in(&self, phase: usize) -> u64 {
        self.steps[phase]
    }

    /// `None` when the phase saw no steps or `observer == target`.
    pub fn mean(&self, phase: usize, observer: usize, target: usize, error: usize) -> Option<f64> {
        let n = self.steps[phase];
        if n == 0 || observer == target {
            return None;
        }
        Some(self.sums[self.index(phase, observer, target, error)] / n as f64)
    }
}

/// Everything one farmlet (or, after [`MetricsLog::merge`], a whole run)
/// produced.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub sample_every: u64,
    pub check_cost_steps: u64,
    pub nodes_per_farmlet: usize,
    pub error_types: usize,
    pub d_series: Vec<DRow>,
    pub throughput_series: Vec<ThroughputRow>,
    pub event_log: Vec<EventRow>,
    pub nodes: Vec<NodeTotals>,
    /// One accumulator per farmlet, in farmlet order.
    pub phase_d: Vec<PhaseDAccumulator>,
    pub summary: Option<Summary>,
}

impl MetricsLog {
    pub fn new(
        sample_every: u64,
        check_cost_steps: u64,
        nodes_per_farmlet: usize,
        error_types: usize,
    ) -> Self {
        Self {
            sample_every,
            check_cost_steps,
            nodes_per_farmlet,
            error_types,
            d_series: Vec::new(),
            throughput_series: Vec::new(),
            event_log: Vec::new(),
            nodes: Vec::new(),
            phase_d: Vec::new(),
            summary: None,
        }
    }

    pub fn is_sample_step(&self, step: u64) -> bool {
        step.is_multiple_of(self.sample_every)
    }

    /// Concatenates per-farmlet logs. Callers pass them in farmlet order so
    /// rows stay ordered by (farmlet, step).
    pub fn merge(parts: Vec<MetricsLog>) -> Option<MetricsLog> {
        let mut iter = parts.into_iter();
        let mut out = iter.next()?;
        for part in iter {
            out.d_series.extend(part.d_series);
            out.throughput_series.extend(part.throughput_series);
            out.event_log.extend(part.event_log);
            out.nodes.extend(part.nodes);
            out.phase_d.extend(part.phase_d);
        }
        out.summary = None;
        Some(out)
    }

    pub fn finalize(&mut self) -> Result<&Summary, SimError> {
        let summary = summarize(self)?;
        Ok(self.summary.insert(summary))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SummaryValue {
    Count(u64),
    Real(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDMean {
    pub farmlet: usize,
    pub phase: usize,
    pub observer: usize,
    pub target: usize,
    pub error: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub nodes: Vec<NodeTotals>,
    pub total_enqueued: u64,
    pub total_processed: u64,
    pub total_dropped: u64,
    pub mean_processed_per_dsp: f64,
    pub check_hits: u64,
    pub check_misses: u64,
    pub injections: u64,
    pub vla_steps: u64,
    pub pa_steps: u64,
    pub phase_d_means: Vec<PhaseDMean>,
}

impl Summary {
    /// Long-form `(metric, scope, value)` rows: run aggregates first, then
    /// per-node totals, then per-phase sensitivity means.
    pub fn rows(&self) -> Vec<(&'static str, String, SummaryValue)> {
        use SummaryValue::{Count, Real};
        let run = || String::from("run");
        let mut rows = alloc::vec![
            (
                "mean_processed_per_dsp",
                run(),
                Real(self.mean_processed_per_dsp)
            ),
            ("total_enqueued", run(), Count(self.total_enqueued)),
            ("total_processed", run(), Count(self.total_processed)),
            ("total_dropped", run(), Count(self.total_dropped)),
            ("check_hits", run(), Count(self.check_hits)),
            ("check_misses", run(), Count(self.check_misses)),
            ("injections", run(), Count(self.injections)),
            ("pa_steps", run(), Count(self.pa_steps)),
            ("vla_steps", run(), Count(self.vla_steps)),
        ];
        for n in &self.nodes {
            let scope = || format!("f{}.s{}", n.farmlet, n.slot);
            let steps = n.pa_steps + n.vla_steps;
            let mean_utility = if steps == 0 {
                0.0
            } else {
                n.utility_sum / steps as f64
            };
            rows.extend([
                ("enqueued", scope(), Count(n.enqueued)),
                ("processed", scope(), Count(n.processed)),
                ("dropped", scope(), Count(n.dropped)),
                ("final_fill", scope(), Count(n.final_fill)),
                ("pa_steps", scope(), Count(n.pa_steps)),
                ("vla_steps", scope(), Count(n.vla_steps)),
                ("check_hits", scope(), Count(n.check_hits)),
                ("check_misses", scope(), Count(n.check_misses)),
                ("mean_utility", scope(), Real(mean_utility)),
            ]);
        }
        for m in &self.phase_d_means {
            rows.push((
                "mean_d",
                format!(
                    "f{}.p{}.o{}.t{}.e{}",
                    m.farmlet, m.phase, m.observer, m.target, m.error
                ),
                Real(m.mean),
            ));
        }
        rows
    }
}

/// Folds the log into run totals, checking per-node conservation and that
/// the totals agree with the event log (and, at full resolution, with the
/// throughput series).
pub fn summarize(log: &MetricsLog) -> Result<Summary, SimError> {
    for n in &log.nodes {
        if n.enqueued != n.processed + n.final_fill + n.dropped {
            return Err(SimError::Conservation {
                farmlet: n.farmlet,
                slot: n.slot,
                enqueued: n.enqueued,
                processed: n.processed,
                fill: n.final_fill,
                dropped: n.dropped,
            });
        }
    }

    let sum = |f: fn(&NodeTotals) -> u64| log.nodes.iter().map(f).sum::<u64>();
    let total_enqueued = sum(|n| n.enqueued);
    let total_processed = sum(|n| n.processed);
    let total_dropped = sum(|n| n.dropped);
    let check_hits = sum(|n| n.check_hits);
    let check_misses = sum(|n| n.check_misses);
    let vla_steps = sum(|n| n.vla_steps);
    let pa_steps = sum(|n| n.pa_steps);

    let count = |kind| log.event_log.iter().filter(|e| e.kind == kind).count() as u64;
    if count(EventKind::CheckHit) != check_hits {
        return Err(SimError::SummaryMismatch {
            metric: "check_hits",
        });
    }
    if count(EventKind::CheckMiss) != check_misses {
        return Err(SimError::SummaryMismatch {
            metric: "check_misses",
        });
    }
    if log.check_cost_steps == 1 && check_hits + check_misses != vla_steps {
        return Err(SimError::SummaryMismatch {
            metric: "vla_steps",
        });
    }
    let dropped_events: u64 = log
        .event_log
        .iter()
        .filter(|e| e.kind == EventKind::OverflowDrop)
        .count() as u64;
    if (dropped_events == 0) != (total_dropped == 0) {
        return Err(SimError::SummaryMismatch {
            metric: "total_dropped",
        });
    }
    if log.sample_every == 1 {
        let series: u64 = log.throughput_series.iter().map(|r| r.processed).sum();
        if series != total_processed {
            return Err(SimError::SummaryMismatch {
                metric: "total_processed",
            });
        }
        let series_drops: u64 = log.throughput_series.iter().map(|r| r.dropped).sum();
        if series_drops != total_dropped {
            return Err(SimError::SummaryMismatch {
                metric: "total_dropped",
            });
        }
    }

    let mean_processed_per_dsp = if log.nodes.is_empty() {
        0.0
    } else {
        total_processed as f64 / log.nodes.len() as f64
    };

    let mut phase_d_means = Vec::new();
    for (farmlet, acc) in log.phase_d.iter().enumerate() {
        for phase in 0..acc.phases() {
            for observer in 0..log.nodes_per_farmlet {
                for target in 0..log.nodes_per_farmlet {
                    for error in 0..log.error_types {
                        if let Some(mean) = acc.mean(phase, observer, target, error) {
                            phase_d_means.push(PhaseDMean {
                                farmlet,
                                phase,
                                observer,
                                target,
                                error,
                                mean,
                            });
                        }
                    }
                }
            }
        }
    }

    Ok(Summary {
        nodes: log.nodes.clone(),
        total_enqueued,
        total_processed,
        total_dropped,
        mean_processed_per_dsp,
        check_hits,
        check_misses,
        injections: count(EventKind::Inject),
        vla_steps,
        pa_steps,
        phase_d_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(slot: usize, enqueued: u64, processed: u64, fill: u64, dropped: u64) -> NodeTotals {
        NodeTotals {
            slot,
            enqueued,
            processed,
            final_fill: fill,
            dropped,
            ..Default::default()
        }
    }

    #[test]
    fn empty_log_summarizes_to_zero() {
        let s = summarize(&MetricsLog::new(1, 1, 6, 3)).unwrap();
        assert_eq!(s.total_processed, 0);
        assert_eq!(s.mean_processed_per_dsp, 0.0);
        assert!(s.phase_d_means.is_empty());
    }

    #[test]
    fn mean_times_nodes_is_total() {
        let mut log = MetricsLog::new(50, 1, 3, 1);
        log.nodes = alloc::vec![
            node(0, 10, 7, 3, 0),
            node(1, 10, 10, 0, 0),
            node(2, 10, 4, 6, 0)
        ];
        let s = summarize(&log).unwrap();
        assert_eq!(s.total_processed, 21);
        assert!((s.mean_processed_per_dsp * 3.0 - 21.0).abs() < 1e-12);
    }

    #[test]
    fn conservation_violation_is_reported() {
        let mut log = MetricsLog::new(50, 1, 3, 1);
        log.nodes = alloc::vec![node(2, 10, 7, 2, 0)];
        assert!(matches!(
            summarize(&log),
            Err(SimError::Conservation { slot: 2, .. })
        ));
    }

    #[test]
    fn event_count_mismatch_is_reported() {
        let mut log = MetricsLog::new(50, 1, 3, 1);
        let mut n = node(0, 0, 0, 0, 0);
        n.check_hits = 1;
        n.vla_steps = 1;
        log.nodes = alloc::vec![n];
        assert_eq!(
            summarize(&log),
            Err(SimError::SummaryMismatch {
                metric: "check_hits"
            })
        );
    }

    #[test]
    fn phase_accumulator_means() {
        let mut acc = PhaseDAccumulator::new(2, 3, 1);
        for d in [0.01, 0.03] {
            acc.begin_step(1);
            acc.add(1, 0, 2, 0, d);
        }
        assert!((acc.mean(1, 0, 2, 0).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(acc.mean(0, 0, 2, 0), None);
        assert_eq!(acc.mean(1, 2, 2, 0), None);
    }
}
