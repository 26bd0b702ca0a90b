//! The lockstep simulation loop.
//!
//! One call to [`FarmletSim::step`] runs, in order:
//!
//! 1. error injection for the current step;
//! 2. arrivals into every buffer;
//! 3. a control decision per node, slot ascending, from the post-arrival
//!    watermark and the pre-check matrices;
//! 4. execution, slot ascending: PA nodes drain their buffer at the
//!    error-degraded rate, checking nodes inspect one (target, error) pair,
//!    clear it if present (visible immediately to later slots) and adapt;
//! 5. every agent's counters tick;
//! 6. metrics are recorded and the clock advances.

use alloc::vec::Vec;

use crate::agent::{decide_from_urgency, utility_value, ControlDecision, SensitivityMatrix};
use crate::config::SimConfig;
use crate::error::SimError;
use crate::fault::{inject, RngStream};
use crate::metrics::{
    DRow, Decision, EventKind, EventRow, MetricsLog, NodeTotals, PhaseDAccumulator, ThroughputRow,
};
use crate::model::{effective_units, ErrorTypeId, FarmletState};

/// What a node did during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeAction {
    Processed(u64),
    Checked {
        target: usize,
        error: ErrorTypeId,
        found: bool,
    },
    /// Still occupied by a check that costs more than one step.
    Busy,
}

impl NodeAction {
    pub fn decision(&self) -> Decision {
        match self {
            NodeAction::Processed(_) => Decision::Pa,
            _ => Decision::Vla,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub injected: Vec<(usize, ErrorTypeId)>,
    pub actions: Vec<NodeAction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Holder {
    Pa,
    Vla,
}

/// One farmlet's state, agents, RNG stream and log.
#[derive(Debug, Clone)]
pub struct FarmletSim<'a> {
    config: &'a SimConfig,
    state: FarmletState,
    agents: Vec<SensitivityMatrix>,
    rng: RngStream,
    holders: Vec<Holder>,
    busy: Vec<u64>,
    log: MetricsLog,
    totals: Vec<NodeTotals>,
    phase_d: PhaseDAccumulator,
}

impl<'a> FarmletSim<'a> {
    /// `config` must already be validated.
    pub fn new(config: &'a SimConfig, farmlet: usize) -> Self {
        let n = config.nodes_per_farmlet;
        let e = config.error_types;
        let state = FarmletState::new(farmlet, n, e, config.buffer_capacity, config.base_rate);
        let agents = (0..n)
            .map(|slot| SensitivityMatrix::new(slot, n, e, config.agent.d_init))
            .collect();
        let totals = (0..n)
            .map(|slot| NodeTotals {
                farmlet,
                slot,
                ..NodeTotals::default()
            })
            .collect();
        Self {
            config,
            state,
            agents,
            rng: RngStream::new(config.seed, farmlet as u64),
            holders: alloc::vec![Holder::Pa; n],
            busy: alloc::vec![0; n],
            log: MetricsLog::new(config.sample_every, config.agent.check_cost_steps, n, e),
            totals,
            phase_d: PhaseDAccumulator::new(config.schedule.phases().len(), n, e),
        }
    }

    pub fn state(&self) -> &FarmletState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut FarmletState {
        &mut self.state
    }

    pub fn agents(&self) -> &[SensitivityMatrix] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [SensitivityMatrix] {
        &mut self.agents
    }

    pub fn log(&self) -> &MetricsLog {
        &self.log
    }

    pub fn rng_draws(&self) -> u64 {
        self.rng.draws()
    }

    pub fn is_done(&self) -> bool {
        self.state.clock >= self.config.total_steps
    }

    pub fn step(&mut self) -> StepReport {
        let cfg = self.config;
        let step = self.state.clock;
        let farmlet = self.state.index;
        let n = self.state.len();

        // (1) injection
        let injected = inject(&mut self.state, &cfg.schedule, step, &mut self.rng);
        for &(slot, error) in &injected {
            self.log.event_log.push(EventRow {
                step,
                farmlet,
                slot,
                kind: EventKind::Inject,
                error: Some(error.0),
            });
        }

        // (2) arrivals
        let mut dropped = alloc::vec![0u64; n];
        for (slot, node) in self.state.nodes.iter_mut().enumerate() {
            dropped[slot] = node.enqueue(cfg.arrival_rate);
            if dropped[slot] > 0 {
                self.log.event_log.push(EventRow {
                    step,
                    farmlet,
                    slot,
                    kind: EventKind::OverflowDrop,
                    error: None,
                });
            }
        }

        // (3) decisions against pre-check matrices
        let redecide = step.is_multiple_of(cfg.agent.decision_interval);
        let mut planned = Vec::with_capacity(n);
        for slot in 0..n {
            let w = self.state.nodes[slot].buffer.watermark();
            let matrix = &self.agents[slot];
            let urgent = matrix.most_urgent();
            let urgent_elapsed = urgent
                .and_then(|(t, e, _)| matrix.elapsed(t, e).ok())
                .unwrap_or(0);
            self.totals[slot].utility_sum +=
                utility_value(cfg.agent.expected_data, w, cfg.agent.c, urgent_elapsed);
            if self.busy[slot] > 0 {
                self.busy[slot] -= 1;
                planned.push(None);
                continue;
            }
            let decision = if redecide {
                let d = decide_from_urgency(w, urgent);
                self.holders[slot] = if d.is_check() {
                    Holder::Vla
                } else {
                    Holder::Pa
                };
                d
            } else {
                match (self.holders[slot], urgent) {
                    (Holder::Vla, Some((target, error, score))) => ControlDecision::Check {
                        target,
                        error,
                        score,
                    },
                    _ => ControlDecision::Pa,
                }
            };
            planned.push(Some(decision));
        }

        // (4) execution, slot order, clears visible immediately
        let mut actions = Vec::with_capacity(n);
        for (slot, decision) in planned.into_iter().enumerate() {
            let action = match decision {
                None => NodeAction::Busy,
                Some(ControlDecision::Pa) => {
                    let node = &self.state.nodes[slot];
                    let units = effective_units(node, &self.state.errors, &cfg.slowdowns);
                    NodeAction::Processed(self.state.nodes[slot].process(units))
                }
                Some(ControlDecision::Check { target, error, .. }) => {
                    let found = self.state.errors.clear(target, error);
                    self.agents[slot]
                        .record_check(target, error, found, &cfg.agent)
                        .expect("decide_control only selects neighbour pairs");
                    self.busy[slot] = cfg.agent.check_cost_steps - 1;
                    let t = &mut self.totals[slot];
                    if found {
                        t.check_hits += 1;
                    } else {
                        t.check_misses += 1;
                    }
                    self.log.event_log.push(EventRow {
                        step,
                        farmlet,
                        slot: target,
                        kind: if found {
                            EventKind::CheckHit
                        } else {
                            EventKind::CheckMiss
                        },
                        error: Some(error.0),
                    });
                    NodeAction::Checked {
                        target,
                        error,
                        found,
                    }
                }
            };
            match action.decision() {
                Decision::Pa => self.totals[slot].pa_steps += 1,
                Decision::Vla => self.totals[slot].vla_steps += 1,
            }
            actions.push(action);
        }

        // (5) counters
        for agent in &mut self.agents {
            agent.tick_counters();
        }

        // (6) metrics
        if let Some(phase) = cfg.schedule.phase_index(step) {
            self.phase_d.begin_step(phase);
            for agent in &self.agents {
                for (target, error, d, _) in agent.entries() {
                    self.phase_d
                        .add(phase, agent.observer(), target, error.0, d);
                }
            }
        }
        if self.log.is_sample_step(step) {
            for (slot, action) in actions.iter().enumerate() {
                let node = &self.state.nodes[slot];
                self.log.throughput_series.push(ThroughputRow {
                    step,
                    farmlet,
                    slot,
                    processed: match action {
                        NodeAction::Processed(p) => *p,
                        _ => 0,
                    },
                    fill: node.buffer.fill(),
                    dropped: dropped[slot],
                    decision: action.decision(),
                });
            }
            for agent in &self.agents {
                for (target, error, d, elapsed) in agent.entries() {
                    self.log.d_series.push(DRow {
                        step,
                        farmlet,
                        observer: agent.observer(),
                        target,
                        error: error.0,
                        d,
                        elapsed,
                    });
                }
            }
        }
        self.state.clock += 1;

        StepReport {
            step,
            injected,
            actions,
        }
    }

    /// Steps until `total_steps` is reached.
    pub fn run_to_end(&mut self) {
        while !self.is_done() {
            self.step();
        }
    }

    /// Closes out per-node totals and hands over the log.
    pub fn into_log(mut self) -> MetricsLog {
        for (t, node) in self.totals.iter_mut().zip(&self.state.nodes) {
            t.enqueued = node.crossings_enqueued_total;
            t.processed = node.crossings_processed_total;
            t.dropped = node.buffer.dropped_total();
            t.final_fill = node.buffer.fill();
        }
        self.log.nodes = self.totals;
        self.log.phase_d.push(self.phase_d);
        self.log
    }
}

/// Validates `config`, runs every farmlet to completion and returns the
/// merged, summarized log.
pub fn run(config: &SimConfig) -> Result<MetricsLog, SimError> {
    config.validate()?;
    let parts = (0..config.farmlets)
        .map(|f| {
            let mut sim = FarmletSim::new(config, f);
            sim.run_to_end();
            sim.into_log()
        })
        .collect();
    let mut log = MetricsLog::merge(parts).expect("at least one farmlet");
    log.finalize()?;
    Ok(log)
}
