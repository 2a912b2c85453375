//! CSV/JSON result files and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::{ExperimentResult, ResultRow};

/// Fixed columns following the sweep keys.
pub const CSV_COLUMNS: &[&str] = &[
    "label", "mean", "std", "n", "exited", "caught", "truncated", "hellinger_sq", "q", "xq",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Formats `x` with 9 significant digits, `%g` style.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let mut s = format!("{x:.decimals$}");
        if s.contains('.') {
            s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        }
        s
    } else {
        let (mantissa, exp) = sci.split_once('e').unwrap();
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    }
}

pub fn csv_header(sweep_keys: &[String]) -> Vec<String> {
    std::iter::once("experiment".to_string())
        .chain(sweep_keys.iter().cloned())
        .chain(CSV_COLUMNS.iter().map(|s| s.to_string()))
        .collect()
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let keys: Vec<String> = rows
        .first()
        .map(|r| r.sweep.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(csv_header(&keys)).expect("in-memory write");
    for r in rows {
        let mut record = vec![r.experiment.to_string()];
        record.extend(r.sweep.iter().map(|&(_, v)| format_float(v)));
        record.push(r.label.clone());
        record.extend([format_float(r.mean), format_float(r.std)]);
        record.extend([r.n, r.outcomes.exited, r.outcomes.caught, r.outcomes.truncated].map(|c| c.to_string()));
        record.extend([format_float(r.hellinger_sq), format_float(r.q), format_float(r.xq)]);
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
}

pub fn to_json(rows: &[ResultRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `results.{csv,json}` and `run.json` into `dir`; returns the results path.
pub fn write_outputs(result: &ExperimentResult, dir: &Path, format: Format) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let results = match format {
        Format::Csv => {
            let p = dir.join("results.csv");
            write(&p, &to_csv(&result.rows))?;
            p
        }
        Format::Json => {
            let p = dir.join("results.json");
            write(&p, &to_json(&result.rows))?;
            p
        }
    };
    write(&dir.join("run.json"), &pretty(&result.manifest))?;
    Ok(results)
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("manifest serializes")
}
