use std::collections::HashMap;

use proptest::prelude::*;
use vla_core::engine::{self, FarmletSim};
use vla_core::{Decision, ErrorSchedule, EventKind, MetricsLog, Preset, SimConfig};

fn short(steps: u64) -> SimConfig {
    let mut cfg = Preset::PaperFluctuating.config();
    cfg.total_steps = steps;
    cfg.schedule = ErrorSchedule::constant(5e-3, steps);
    cfg
}

fn run(cfg: &SimConfig) -> MetricsLog {
    engine::run(cfg).expect("run succeeds")
}

#[test]
fn every_step_sampled_accounts_for_every_decision() {
    let mut cfg = short(3000);
    cfg.sample_every = 1;
    let log = run(&cfg);
    let summary = log.summary.as_ref().unwrap();

    assert_eq!(log.throughput_series.len() as u64, 3000 * 6);
    let vla_rows = log
        .throughput_series
        .iter()
        .filter(|r| r.decision == Decision::Vla)
        .count() as u64;
    assert_eq!(vla_rows, summary.vla_steps);
    assert_eq!(summary.check_hits + summary.check_misses, vla_rows);
    assert!(summary.check_hits > 0);

    let processed: u64 = log.throughput_series.iter().map(|r| r.processed).sum();
    let dropped: u64 = log.throughput_series.iter().map(|r| r.dropped).sum();
    assert_eq!(processed, summary.total_processed);
    assert_eq!(dropped, summary.total_dropped);
    for n in &summary.nodes {
        assert_eq!(n.enqueued, n.processed + n.final_fill + n.dropped);
    }
}

#[test]
fn elapsed_counters_grow_by_one_or_reset() {
    let mut cfg = short(2000);
    cfg.sample_every = 1;
    let log = run(&cfg);
    let mut last: HashMap<(usize, usize, usize), (u64, u64)> = HashMap::new();
    for r in &log.d_series {
        let key = (r.observer, r.target, r.error);
        if let Some(&(step, elapsed)) = last.get(&key) {
            assert_eq!(r.step, step + 1);
            // A check resets the counter before the step's tick.
            assert!(
                r.elapsed == elapsed + 1 || r.elapsed == 1,
                "{r:?} after {elapsed}"
            );
        }
        last.insert(key, (r.step, r.elapsed));
    }
    assert_eq!(last.len(), 6 * 5 * 3);
}

#[test]
fn sampling_thins_series_but_not_events() {
    let cfg = Preset::PaperFluctuating.config();
    let mut sim = FarmletSim::new(&cfg, 0);
    let mut activations = 0u64;
    while !sim.is_done() {
        activations += sim.step().injected.len() as u64;
    }
    let log = sim.into_log();

    assert_eq!(cfg.sample_every, 50);
    let per_node = log.throughput_series.iter().filter(|r| r.slot == 0).count();
    assert_eq!(per_node, 100_000 / 50);
    assert!(log.throughput_series.iter().all(|r| r.step % 50 == 0));
    assert_eq!(log.d_series.len(), 2000 * 6 * 5 * 3);

    let injects = log
        .event_log
        .iter()
        .filter(|e| e.kind == EventKind::Inject)
        .count() as u64;
    assert_eq!(injects, activations);
}

#[test]
fn sample_every_hundred_gives_a_thousand_rows_per_node() {
    let mut cfg = Preset::PaperFluctuating.config();
    cfg.sample_every = 100;
    let log = run(&cfg);
    for slot in 0..6 {
        let rows = log
            .throughput_series
            .iter()
            .filter(|r| r.slot == slot)
            .count();
        assert_eq!(rows, 1000);
    }
}

#[test]
fn same_seed_same_log() {
    let cfg = short(5000);
    let (a, b) = (run(&cfg), run(&cfg));
    assert_eq!(a.event_log, b.event_log);
    assert_eq!(a.d_series, b.d_series);
    assert_eq!(a.throughput_series, b.throughput_series);

    let mut other = cfg.clone();
    other.seed = 2;
    assert_ne!(run(&other).event_log, a.event_log);
}

#[test]
fn adaptive_and_fixed_draw_the_same_faults_while_both_are_healthy() {
    // Injection only happens on inactive pairs, so the traces agree until the
    // first check outcome differs. With no checks at all they agree fully.
    let mut adaptive = short(4000);
    adaptive.agent.d_init = 1e-6;
    adaptive.agent.d_min = 1e-6;
    adaptive.agent.delta_up = 1e-12;
    let mut fixed = adaptive.clone();
    fixed.agent.adaptive = false;

    let injects = |log: &MetricsLog| -> Vec<_> {
        log.event_log
            .iter()
            .filter(|e| e.kind == EventKind::Inject)
            .cloned()
            .collect()
    };
    let (a, f) = (run(&adaptive), run(&fixed));
    assert_eq!(a.summary.as_ref().unwrap().vla_steps, 0);
    assert!(!injects(&a).is_empty());
    assert_eq!(injects(&a), injects(&f));
}

#[test]
fn clean_checks_decay_sensitivity_to_its_floor() {
    let mut cfg = short(3000);
    cfg.schedule = ErrorSchedule::constant(0.0, 3000);
    cfg.sample_every = 1;
    let log = run(&cfg);
    assert!(log.event_log.iter().all(|e| e.kind == EventKind::CheckMiss));

    let mut last: HashMap<(usize, usize, usize), f64> = HashMap::new();
    for r in &log.d_series {
        let key = (r.observer, r.target, r.error);
        if let Some(&prev) = last.get(&key) {
            assert!(r.d <= prev);
        }
        last.insert(key, r.d);
    }
    assert!(last.values().all(|&d| d == cfg.agent.d_min), "{last:?}");
}

#[test]
fn farmlets_run_independently() {
    let mut cfg = short(2000);
    cfg.farmlets = 3;
    let log = run(&cfg);
    assert_eq!(log.nodes.len(), 18);
    let summary = log.summary.as_ref().unwrap();
    assert_eq!(summary.nodes.len(), 18);

    let mut single = cfg.clone();
    single.farmlets = 1;
    let first = run(&single);
    let f0: Vec<_> = log
        .event_log
        .iter()
        .filter(|e| e.farmlet == 0)
        .cloned()
        .collect();
    assert_eq!(f0, first.event_log);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn small_runs_keep_their_books(
        seed in 0u64..1000,
        nodes in 2usize..5,
        errors in 1usize..4,
        capacity in 1u64..40,
        arrival in 0u64..8,
        base in 1u64..8,
        rate in 0.0f64..0.05,
        check_cost in 1u64..3,
        interval in 1u64..4,
        adaptive in any::<bool>(),
    ) {
        let mut cfg = Preset::PaperFluctuating.config();
        cfg.seed = seed;
        cfg.nodes_per_farmlet = nodes;
        cfg.error_types = errors;
        cfg.slowdowns.truncate(errors);
        cfg.buffer_capacity = capacity;
        cfg.arrival_rate = arrival;
        cfg.base_rate = base;
        cfg.total_steps = 300;
        cfg.schedule = ErrorSchedule::constant(rate, 300);
        cfg.sample_every = 1;
        cfg.agent.check_cost_steps = check_cost;
        cfg.agent.decision_interval = interval;
        cfg.agent.adaptive = adaptive;

        let log = engine::run(&cfg).unwrap();
        let s = log.summary.as_ref().unwrap();
        let fill: u64 = s.nodes.iter().map(|n| n.final_fill).sum();
        prop_assert_eq!(s.total_enqueued, s.total_processed + fill + s.total_dropped);
        prop_assert!(log.throughput_series.iter().all(|r| r.fill <= capacity));
        prop_assert!(log.d_series.iter().all(|r| r.d >= cfg.agent.d_min && r.d <= cfg.agent.d_max));
        prop_assert_eq!(s.pa_steps + s.vla_steps, 300 * nodes as u64);
        if !adaptive {
            prop_assert!(log.d_series.iter().all(|r| r.d == cfg.agent.d_init));
        }
    }
}
