//! The `run` and `compare` subcommands.
//!
//! Config values resolve as: command-line flag, then config file, then the
//! selected preset (`paper-fluctuating` unless `--preset` says otherwise).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use vla_core::{engine, Preset, Summary};

use crate::configfile::{self, RunConfig};
use crate::csv::{self, CompareRow};
use crate::error::{CliError, LoadError};

pub const ECHO_FILE: &str = "config.echo";
pub const COMPARE_FILE: &str = "compare.csv";

#[derive(Debug, Parser)]
#[command(
    name = "vla-sim",
    version,
    about = "Polymorphic fault-mitigation agent simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its CSVs.
    Run(RunArgs),
    /// Run adaptive and fixed-rate variants for each seed and compare throughput.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// key = value config file layered over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base scenario: paper-fluctuating or paper-fixed-baseline.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides total_steps.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sample_every: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated seeds; defaults to the config's seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

/// Resolves preset, file and flags into a validated config.
pub fn load_config(args: &ConfigArgs) -> Result<RunConfig, LoadError> {
    let preset = match &args.preset {
        Some(name) => name
            .parse::<Preset>()
            .map_err(|e| LoadError::Invalid(vla_core::ConfigError::new("preset", e.to_string())))?,
        None => Preset::PaperFluctuating,
    };
    let mut cfg = RunConfig::new(preset.config());
    if let Some(path) = &args.config {
        cfg = configfile::apply_file(cfg, path)?;
    }
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    if let Some(steps) = args.steps {
        cfg.sim.total_steps = steps;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(every) = args.sample_every {
        cfg.sim.sample_every = every;
    }
    cfg.sim.validate()?;
    Ok(cfg)
}

fn write_echo(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join(ECHO_FILE);
    std::fs::write(&path, configfile::echo(cfg)).map_err(|source| CliError::Write { path, source })
}

/// Runs the simulation and writes the four CSVs plus `config.echo`.
pub fn execute(cfg: &RunConfig) -> Result<Summary, CliError> {
    write_echo(cfg)?;
    let log = engine::run(&cfg.sim)?;
    csv::write_csv(&log, &cfg.out_dir)?;
    Ok(log.summary.expect("run finalizes the log"))
}

pub fn print_summary(out: &mut impl Write, summary: &Summary) -> std::io::Result<()> {
    writeln!(
        out,
        "mean processed per DSP  {:.1}",
        summary.mean_processed_per_dsp
    )?;
    writeln!(out, "total dropped           {}", summary.total_dropped)?;
    writeln!(out, "injections              {}", summary.injections)?;
    writeln!(
        out,
        "checks (hit / miss)     {} / {}",
        summary.check_hits, summary.check_misses
    )?;
    writeln!(
        out,
        "{:>7} {:>4} {:>10} {:>10} {:>8} {:>9} {:>9}",
        "farmlet", "slot", "processed", "dropped", "fill", "pa_steps", "vla_steps"
    )?;
    for n in &summary.nodes {
        writeln!(
            out,
            "{:>7} {:>4} {:>10} {:>10} {:>8} {:>9} {:>9}",
            n.farmlet, n.slot, n.processed, n.dropped, n.final_fill, n.pa_steps, n.vla_steps
        )?;
    }
    Ok(())
}

pub fn cmd_run(args: &RunArgs, out: &mut impl Write) -> Result<Summary, CliError> {
    let cfg = load_config(&args.config)?;
    let summary = execute(&cfg)?;
    writeln!(out, "wrote {}", cfg.out_dir.display()).ok();
    print_summary(out, &summary).ok();
    Ok(summary)
}

fn variant_config(base: &RunConfig, seed: u64, adaptive: bool) -> RunConfig {
    let mut cfg = base.clone();
    cfg.sim.seed = seed;
    cfg.sim.agent.adaptive = adaptive;
    cfg.out_dir = variant_dir(&base.out_dir, seed, adaptive);
    cfg
}

/// `<out>/seed-<seed>/<adaptive|fixed>`.
pub fn variant_dir(out: &Path, seed: u64, adaptive: bool) -> PathBuf {
    out.join(format!("seed-{seed}"))
        .join(if adaptive { "adaptive" } else { "fixed" })
}

/// For each seed runs the adaptive and fixed-rate variants (all else equal),
/// writes per-run outputs and `compare.csv`, and reports the adaptive win count.
pub fn cmd_compare(args: &CompareArgs, out: &mut impl Write) -> Result<Vec<CompareRow>, CliError> {
    let base = load_config(&args.config)?;
    let seeds = if args.seeds.is_empty() {
        vec![base.sim.seed]
    } else {
        args.seeds.clone()
    };
    let rows = compare(&base, &seeds)?;
    csv::write_compare(&base.out_dir.join(COMPARE_FILE), &rows)?;

    let mut wins = 0;
    for pair in rows.chunks(2) {
        let (a, f) = (&pair[0], &pair[1]);
        let delta = a.mean_processed_per_dsp - f.mean_processed_per_dsp;
        if delta > 0.0 {
            wins += 1;
        }
        writeln!(
            out,
            "seed {:>6}: adaptive {:.1}  fixed {:.1}  delta {:+.1}",
            a.seed, a.mean_processed_per_dsp, f.mean_processed_per_dsp, delta
        )
        .ok();
    }
    writeln!(out, "adaptive wins {wins}/{}", seeds.len()).ok();
    Ok(rows)
}

/// Runs both variants per seed concurrently; rows come back as
/// `(seed, adaptive), (seed, fixed)` in seed order.
pub fn compare(base: &RunConfig, seeds: &[u64]) -> Result<Vec<CompareRow>, CliError> {
    let jobs: Vec<RunConfig> = seeds
        .iter()
        .flat_map(|&s| {
            [
                variant_config(base, s, true),
                variant_config(base, s, false),
            ]
        })
        .collect();
    let results: Vec<Result<Summary, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|cfg| scope.spawn(move || execute(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("variant run panicked"))
            .collect()
    });
    jobs.iter()
        .zip(results)
        .map(|(cfg, summary)| {
            let s = summary?;
            Ok(CompareRow {
                seed: cfg.sim.seed,
                variant: if cfg.sim.agent.adaptive {
                    "adaptive"
                } else {
                    "fixed"
                },
                mean_processed_per_dsp: s.mean_processed_per_dsp,
                total_dropped: s.total_dropped,
                check_hits: s.check_hits,
                check_misses: s.check_misses,
            })
        })
        .collect()
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args, out).map(|_| ()),
        Command::Compare(args) => cmd_compare(args, out).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            writeln!(err, "error: {e}").ok();
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(dir: &Path) -> ConfigArgs {
        ConfigArgs {
            out: Some(dir.to_path_buf()),
            ..ConfigArgs::default()
        }
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.cfg");
        std::fs::write(&file, "seed = 5\ntotal_steps = 2000\nsample_every = 7\n").unwrap();

        let defaults = load_config(&args(dir.path())).unwrap();
        assert_eq!((defaults.sim.seed, defaults.sim.total_steps), (1, 100_000));

        let from_file = load_config(&ConfigArgs {
            config: Some(file.clone()),
            ..args(dir.path())
        })
        .unwrap();
        assert_eq!(from_file.sim.seed, 5);
        assert_eq!(from_file.sim.total_steps, 2000);
        assert_eq!(from_file.sim.sample_every, 7);

        let flagged = load_config(&ConfigArgs {
            config: Some(file),
            seed: Some(9),
            steps: Some(1000),
            sample_every: Some(3),
            ..args(dir.path())
        })
        .unwrap();
        assert_eq!(flagged.sim.seed, 9);
        assert_eq!(flagged.sim.total_steps, 1000);
        assert_eq!(flagged.sim.sample_every, 3);
        assert_eq!(flagged.out_dir, dir.path());
    }

    #[test]
    fn presets_load() {
        let a = load_config(&ConfigArgs {
            preset: Some("paper-fluctuating".into()),
            ..ConfigArgs::default()
        })
        .unwrap();
        assert!(a.sim.agent.adaptive);
        assert_eq!(a.sim.schedule.phases().len(), 3);
        let b = load_config(&ConfigArgs {
            preset: Some("paper-fixed-baseline".into()),
            ..ConfigArgs::default()
        })
        .unwrap();
        assert!(!b.sim.agent.adaptive);
        assert_eq!(b.sim.agent.d_init, 0.01);
        let err = load_config(&ConfigArgs {
            preset: Some("nope".into()),
            ..ConfigArgs::default()
        })
        .unwrap_err();
        assert!(err.to_string().contains("preset"));
    }

    #[test]
    fn bad_rate_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("bad.cfg");
        std::fs::write(
            &file,
            "schedule.0.start = 0\nschedule.0.end = 100000\nschedule.0.rate = 1.5\n",
        )
        .unwrap();
        let err = load_config(&ConfigArgs {
            config: Some(file),
            ..ConfigArgs::default()
        })
        .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("schedule.0.rate") && msg.contains("[0, 1]"),
            "{msg}"
        );
        assert_eq!(CliError::from(err).exit_code(), 2);
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let err = load_config(&ConfigArgs {
            config: Some("/nonexistent/x.cfg".into()),
            ..ConfigArgs::default()
        })
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.cfg"));
        assert_eq!(CliError::from(err).exit_code(), 2);
    }

    #[test]
    fn steps_beyond_schedule_rejected() {
        let err = load_config(&ConfigArgs {
            steps: Some(200_000),
            ..ConfigArgs::default()
        })
        .unwrap_err();
        assert!(err.to_string().contains("schedule.2.end"));
    }
}
