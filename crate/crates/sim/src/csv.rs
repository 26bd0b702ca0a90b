//! CSV output. Numbers are formatted by hand so files are byte-identical
//! across platforms and locales.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use vla_core::metrics::{MetricsLog, SummaryValue};

use crate::error::CliError;

pub const D_VALUES_HEADER: &str = "step,farmlet,observer,target,error,d,F";
pub const THROUGHPUT_HEADER: &str = "step,farmlet,slot,processed,fill,dropped,decision";
pub const EVENTS_HEADER: &str = "step,farmlet,slot,kind,error";
pub const SUMMARY_HEADER: &str = "metric,scope,value";
pub const COMPARE_HEADER: &str =
    "seed,variant,mean_processed_per_dsp,total_dropped,check_hits,check_misses";

pub const OUTPUT_FILES: [&str; 4] = [
    "d_values.csv",
    "throughput.csv",
    "events.csv",
    "summary.csv",
];

/// `printf("%.9g")`: nine significant digits, trailing zeros trimmed,
/// scientific notation outside `1e-4 <= |x| < 1e9`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<T>(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = T>,
    mut line: impl FnMut(&mut BufWriter<File>, T) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    let body = || -> std::io::Result<()> {
        writeln!(w, "{header}")?;
        for row in rows {
            line(&mut w, row)?;
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

/// Writes the four run CSVs into `out_dir`, creating it if needed.
/// The log must be finalized. Returns the paths written.
pub fn write_csv(log: &MetricsLog, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let paths: Vec<PathBuf> = OUTPUT_FILES.iter().map(|f| out_dir.join(f)).collect();

    write_rows(&paths[0], D_VALUES_HEADER, &log.d_series, |w, r| {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.step,
            r.farmlet,
            r.observer,
            r.target,
            r.error,
            format_sig9(r.d),
            r.elapsed
        )
    })?;
    write_rows(
        &paths[1],
        THROUGHPUT_HEADER,
        &log.throughput_series,
        |w, r| {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.step,
                r.farmlet,
                r.slot,
                r.processed,
                r.fill,
                r.dropped,
                r.decision.as_str()
            )
        },
    )?;
    write_rows(&paths[2], EVENTS_HEADER, &log.event_log, |w, r| {
        let error = r.error.map(|e| e.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            r.step,
            r.farmlet,
            r.slot,
            r.kind.as_str(),
            error
        )
    })?;
    let summary_rows = log.summary.as_ref().map(|s| s.rows()).unwrap_or_default();
    write_rows(
        &paths[3],
        SUMMARY_HEADER,
        summary_rows,
        |w, (metric, scope, value)| {
            let value = match value {
                SummaryValue::Count(c) => c.to_string(),
                SummaryValue::Real(x) => format_sig9(x),
            };
            writeln!(w, "{metric},{scope},{value}")
        },
    )?;
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub seed: u64,
    pub variant: &'static str,
    pub mean_processed_per_dsp: f64,
    pub total_dropped: u64,
    pub check_hits: u64,
    pub check_misses: u64,
}

pub fn write_compare(path: &Path, rows: &[CompareRow]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    write_rows(path, COMPARE_HEADER, rows, |w, r| {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.seed,
            r.variant,
            format_sig9(r.mean_processed_per_dsp),
            r.total_dropped,
            r.check_hits,
            r.check_misses
        )
    })
}
