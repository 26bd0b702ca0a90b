//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Per-error slowdowns
//! use `slowdown.<i>` and schedule phases use `schedule.<i>.start`,
//! `schedule.<i>.end` and `schedule.<i>.rate`. Any `schedule.*` key replaces
//! the whole base schedule. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use vla_core::{ConfigError, ErrorSchedule, Phase, SimConfig};

use crate::error::LoadError;

/// A simulation config plus where its outputs go.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub out_dir: PathBuf,
}

pub const DEFAULT_OUT_DIR: &str = "results";

impl RunConfig {
    pub fn new(sim: SimConfig) -> Self {
        Self {
            sim,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }
}

fn parse_value<T: FromStr>(field: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(field, format!("cannot parse `{value}`")))
}

fn parse_bool(field: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::new(
            field,
            format!("expected true or false, found `{value}`"),
        )),
    }
}

#[derive(Default)]
struct PhaseKeys {
    start: Option<u64>,
    end: Option<u64>,
    rate: Option<f64>,
}

/// Overlays the `key = value` text on top of `base`. The result is not yet
/// validated.
pub fn apply_text(base: RunConfig, text: &str) -> Result<RunConfig, LoadError> {
    let mut cfg = base;
    let mut slowdowns: BTreeMap<usize, f64> = BTreeMap::new();
    let mut phases: BTreeMap<usize, PhaseKeys> = BTreeMap::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(LoadError::Syntax {
                line: lineno,
                reason: format!("expected `key = value`, found `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert(key.to_string(), lineno) {
            return Err(LoadError::Syntax {
                line: lineno,
                reason: format!("`{key}` already set on line {first}"),
            });
        }
        apply_key(&mut cfg, &mut slowdowns, &mut phases, key, value)?;
    }

    if !slowdowns.is_empty() {
        let n = cfg.sim.error_types;
        if let Some((&i, _)) = slowdowns.range(n..).next() {
            return Err(ConfigError::new(
                format!("slowdown.{i}"),
                format!("index out of range for error_types = {n}"),
            )
            .into());
        }
        let base = std::mem::take(&mut cfg.sim.slowdowns);
        for i in 0..n {
            let v = slowdowns.get(&i).copied().or_else(|| base.get(i).copied());
            match v {
                Some(v) => cfg.sim.slowdowns.push(v),
                None => return Err(ConfigError::new(format!("slowdown.{i}"), "missing").into()),
            }
        }
    } else if cfg.sim.slowdowns.len() > cfg.sim.error_types {
        cfg.sim.slowdowns.truncate(cfg.sim.error_types);
    }

    if !phases.is_empty() {
        let mut list = Vec::with_capacity(phases.len());
        for (expected, (i, keys)) in phases.into_iter().enumerate() {
            if i != expected {
                return Err(ConfigError::new(
                    format!("schedule.{expected}"),
                    "missing (phase indices must be 0, 1, 2, ...)",
                )
                .into());
            }
            let missing = |what: &str| ConfigError::new(format!("schedule.{i}.{what}"), "missing");
            list.push(Phase {
                start: keys.start.ok_or_else(|| missing("start"))?,
                end: keys.end.ok_or_else(|| missing("end"))?,
                rate: keys.rate.ok_or_else(|| missing("rate"))?,
            });
        }
        cfg.sim.schedule = ErrorSchedule::new(list);
    }
    Ok(cfg)
}

fn apply_key(
    cfg: &mut RunConfig,
    slowdowns: &mut BTreeMap<usize, f64>,
    phases: &mut BTreeMap<usize, PhaseKeys>,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    let sim = &mut cfg.sim;
    let agent = &mut sim.agent;
    match key {
        "farmlets" => sim.farmlets = parse_value(key, value)?,
        "nodes_per_farmlet" => sim.nodes_per_farmlet = parse_value(key, value)?,
        "error_types" => sim.error_types = parse_value(key, value)?,
        "total_steps" => sim.total_steps = parse_value(key, value)?,
        "seed" => sim.seed = parse_value(key, value)?,
        "buffer_capacity" => sim.buffer_capacity = parse_value(key, value)?,
        "arrival_rate" => sim.arrival_rate = parse_value(key, value)?,
        "base_rate" => sim.base_rate = parse_value(key, value)?,
        "sample_every" => sim.sample_every = parse_value(key, value)?,
        "d_init" => agent.d_init = parse_value(key, value)?,
        "d_min" => agent.d_min = parse_value(key, value)?,
        "d_max" => agent.d_max = parse_value(key, value)?,
        "delta_up" => agent.delta_up = parse_value(key, value)?,
        "delta_down" => agent.delta_down = parse_value(key, value)?,
        "adaptive" => agent.adaptive = parse_bool(key, value)?,
        "c" => agent.c = parse_value(key, value)?,
        "expected_data" => agent.expected_data = parse_value(key, value)?,
        "decision_interval" => agent.decision_interval = parse_value(key, value)?,
        "check_cost_steps" => agent.check_cost_steps = parse_value(key, value)?,
        "out_dir" => cfg.out_dir = PathBuf::from(value),
        _ => {
            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["slowdown", i] => {
                    let i: usize = parse_value(key, i)?;
                    slowdowns.insert(i, parse_value(key, value)?);
                }
                ["schedule", i, field] => {
                    let i: usize = parse_value(key, i)?;
                    let entry = phases.entry(i).or_default();
                    match *field {
                        "start" => entry.start = Some(parse_value(key, value)?),
                        "end" => entry.end = Some(parse_value(key, value)?),
                        "rate" => entry.rate = Some(parse_value(key, value)?),
                        _ => return Err(ConfigError::new(key, "unknown key")),
                    }
                }
                _ => return Err(ConfigError::new(key, "unknown key")),
            }
        }
    }
    Ok(())
}

/// Reads and overlays a config file.
pub fn apply_file(base: RunConfig, path: &Path) -> Result<RunConfig, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    apply_text(base, &text)
}

/// Every key, in a fixed order, with values that parse back to the same bits.
pub fn echo(cfg: &RunConfig) -> String {
    let sim = &cfg.sim;
    let a = &sim.agent;
    let mut out = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("farmlets", &sim.farmlets);
    kv("nodes_per_farmlet", &sim.nodes_per_farmlet);
    kv("error_types", &sim.error_types);
    kv("total_steps", &sim.total_steps);
    kv("seed", &sim.seed);
    kv("buffer_capacity", &sim.buffer_capacity);
    kv("arrival_rate", &sim.arrival_rate);
    kv("base_rate", &sim.base_rate);
    for (i, s) in sim.slowdowns.iter().enumerate() {
        kv(&format!("slowdown.{i}"), s);
    }
    kv("d_init", &a.d_init);
    kv("d_min", &a.d_min);
    kv("d_max", &a.d_max);
    kv("delta_up", &a.delta_up);
    kv("delta_down", &a.delta_down);
    kv("adaptive", &a.adaptive);
    kv("c", &a.c);
    kv("expected_data", &a.expected_data);
    kv("decision_interval", &a.decision_interval);
    kv("check_cost_steps", &a.check_cost_steps);
    for (i, p) in sim.schedule.phases().iter().enumerate() {
        kv(&format!("schedule.{i}.start"), &p.start);
        kv(&format!("schedule.{i}.end"), &p.end);
        kv(&format!("schedule.{i}.rate"), &p.rate);
    }
    kv("sample_every", &sim.sample_every);
    kv("out_dir", &cfg.out_dir.display());
    out
}
