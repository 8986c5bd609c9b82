use std::fs::File;
use std::path::{Path, PathBuf};

use super::{CellSummary, TrialRecord};
use crate::{Error, Result};

pub const CSV_TRIALS_HEADER: [&str; 8] = [
    "task",
    "method",
    "trial",
    "seed",
    "success",
    "steps",
    "mean_iter_ms",
    "std_iter_ms",
];

pub const CSV_SUMMARY_HEADER: [&str; 7] = [
    "task",
    "method",
    "success_pct",
    "steps_mean",
    "steps_std",
    "time_mean_ms",
    "time_std_ms",
];

/// Renders `v` with 6 significant digits the way C's `%g` does: fixed
/// notation for exponents in `[-4, 6)`, scientific otherwise, trailing zeros
/// dropped.
pub fn format_sig6(v: f64) -> String {
    const PRECISION: i32 = 6;
    if v == 0.0 {
        return "0".to_owned();
    }
    if v.is_nan() {
        return "nan".to_owned();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-4..PRECISION).contains(&exp) {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_owned()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_owned(),
        source,
    }
}

/// Writes `<path>.trials.csv` and `<path>.summary.csv` and returns both paths.
pub fn write_csv(summaries: &[CellSummary], records: &[TrialRecord], path: &Path) -> Result<(PathBuf, PathBuf)> {
    if summaries.is_empty() {
        return Err(Error::invalid("nothing to write: the summary is empty"));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    let trials_path = with_suffix(path, ".trials.csv");
    let summary_path = with_suffix(path, ".summary.csv");

    let mut w = csv::Writer::from_path(&trials_path).map_err(csv_err(&trials_path))?;
    w.write_record(CSV_TRIALS_HEADER).map_err(csv_err(&trials_path))?;
    for r in records {
        w.write_record([
            r.task.clone(),
            r.method.clone(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.success.to_string(),
            r.steps.to_string(),
            format_sig6(r.mean_iter_ms),
            format_sig6(r.std_iter_ms),
        ])
        .map_err(csv_err(&trials_path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: trials_path.clone(),
        source,
    })?;

    let mut w = csv::Writer::from_path(&summary_path).map_err(csv_err(&summary_path))?;
    w.write_record(CSV_SUMMARY_HEADER).map_err(csv_err(&summary_path))?;
    for s in summaries {
        w.write_record([
            s.task.clone(),
            s.method.clone(),
            format_sig6(s.success_pct),
            format_sig6(s.steps_mean),
            format_sig6(s.steps_std),
            format_sig6(s.time_mean_ms),
            format_sig6(s.time_std_ms),
        ])
        .map_err(csv_err(&summary_path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: summary_path.clone(),
        source,
    })?;
    Ok((trials_path, summary_path))
}

fn open_checked(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found = reader.headers().map_err(csv_err(path))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::config(format!(
            "{}:1: expected header '{}', found '{}'",
            path.display(),
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(reader)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, path: &Path) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec
        .get(idx)
        .ok_or_else(|| Error::config(format!("{}:{line}: missing field '{name}'", path.display())))?;
    raw.parse()
        .map_err(|_| Error::config(format!("{}:{line}: cannot parse {name} from '{raw}'", path.display())))
}

/// Reads a trials CSV back. Per-iteration times are not stored, so
/// `iter_ms` comes back empty.
pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut reader = open_checked(path, &CSV_TRIALS_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err(path))?;
        out.push(TrialRecord {
            task: field(&rec, 0, "task", path)?,
            method: field(&rec, 1, "method", path)?,
            trial: field(&rec, 2, "trial", path)?,
            seed: field(&rec, 3, "seed", path)?,
            success: field(&rec, 4, "success", path)?,
            steps: field(&rec, 5, "steps", path)?,
            mean_iter_ms: field(&rec, 6, "mean_iter_ms", path)?,
            std_iter_ms: field(&rec, 7, "std_iter_ms", path)?,
            iter_ms: Vec::new(),
            crashed: false,
            no_viable_events: 0,
            error: None,
        });
    }
    Ok(out)
}

/// Reads a summary CSV back; `trials` is not stored and comes back as 0.
/// An input with a header but no rows is rejected.
pub fn read_summary_csv(path: &Path) -> Result<Vec<CellSummary>> {
    let mut reader = open_checked(path, &CSV_SUMMARY_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err(path))?;
        out.push(CellSummary {
            task: field(&rec, 0, "task", path)?,
            method: field(&rec, 1, "method", path)?,
            trials: 0,
            success_pct: field(&rec, 2, "success_pct", path)?,
            steps_mean: field(&rec, 3, "steps_mean", path)?,
            steps_std: field(&rec, 4, "steps_std", path)?,
            time_mean_ms: field(&rec, 5, "time_mean_ms", path)?,
            time_std_ms: field(&rec, 6, "time_std_ms", path)?,
        });
    }
    if out.is_empty() {
        return Err(Error::config(format!("{}:2: summary has no rows", path.display())));
    }
    Ok(out)
}
