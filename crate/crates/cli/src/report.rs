//! CSV/JSON sweep reports and their metadata companion.
//!
//! Floats are written with 17 significant digits so a report parses back to
//! the exact rows. The stability hash covers every column except wall time.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use crate::config::Format;
use crate::sweep::SweepRow;

pub const COLUMNS: [&str; 11] = [
    "hbar", "mu", "gamma", "lambda", "count", "riesz", "scaled", "target", "gap", "wall_time", "error",
];

const WALL_TIME: usize = 9;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("sweep produced no rows")]
    EmptySweep,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed report: {0}")]
    Malformed(String),
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fields(r: &SweepRow) -> [f64; 10] {
    [
        r.hbar, r.mu, r.gamma, r.lambda, r.count, r.riesz, r.scaled, r.target, r.gap, r.wall_time,
    ]
}

fn record(r: &SweepRow) -> Vec<String> {
    let mut rec: Vec<String> = fields(r).iter().map(|v| fmt_float(*v)).collect();
    rec.push(r.error.clone().unwrap_or_default());
    rec
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn parse_f64(s: &str) -> Result<f64, ReportError> {
    s.parse().map_err(|_| ReportError::Malformed(format!("bad number '{s}'")))
}

fn row_from(values: &[f64], error: Option<String>) -> SweepRow {
    SweepRow {
        hbar: values[0],
        mu: values[1],
        gamma: values[2],
        lambda: values[3],
        count: values[4],
        riesz: values[5],
        scaled: values[6],
        target: values[7],
        gap: values[8],
        wall_time: values[9],
        error,
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(COLUMNS) {
        return Err(ReportError::Malformed("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != COLUMNS.len() {
            return Err(ReportError::Malformed(format!("expected {} fields", COLUMNS.len())));
        }
        let values = (0..10).map(|k| parse_f64(&rec[k])).collect::<Result<Vec<_>, _>>()?;
        let error = Some(rec[10].to_string()).filter(|e| !e.is_empty());
        rows.push(row_from(&values, error));
    }
    Ok(rows)
}

/// Non-finite values become `null`.
pub fn json_value(rows: &[SweepRow]) -> Value {
    let num = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
    Value::Array(
        rows.iter()
            .map(|r| {
                let mut m = serde_json::Map::new();
                for (k, v) in fields(r).iter().enumerate() {
                    m.insert(COLUMNS[k].into(), num(*v));
                }
                m.insert("error".into(), r.error.clone().map_or(Value::Null, Value::String));
                Value::Object(m)
            })
            .collect(),
    )
}

pub fn read_json(text: &str) -> Result<Vec<SweepRow>, ReportError> {
    let v: Value = serde_json::from_str(text)?;
    let arr = v.as_array().ok_or_else(|| ReportError::Malformed("expected an array".into()))?;
    arr.iter()
        .map(|o| {
            let values: Vec<f64> = COLUMNS[..10]
                .iter()
                .map(|k| o.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN))
                .collect();
            let error = o.get("error").and_then(Value::as_str).map(String::from);
            Ok(row_from(&values, error))
        })
        .collect()
}

/// FNV-1a over the CSV text with the wall-time column left out.
pub fn stability_hash(rows: &[SweepRow]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |s: &str| {
        for b in s.bytes().chain(std::iter::once(b'\n')) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for r in rows {
        let rec = record(r);
        for (k, f) in rec.iter().enumerate() {
            if k != WALL_TIME {
                feed(f);
            }
        }
    }
    h
}

/// Extra facts recorded next to the config echo.
#[derive(Clone, Debug, Default)]
pub struct RunInfo {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

/// Writes `<stem>.csv` and/or `<stem>.json` plus `<stem>.meta.json` into `dir`.
pub fn emit_report(
    rows: &[SweepRow],
    format: Format,
    dir: &Path,
    stem: &str,
    config_echo: &str,
    info: &RunInfo,
) -> Result<Vec<PathBuf>, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::EmptySweep);
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, Format::Csv | Format::Both) {
        let p = dir.join(format!("{stem}.csv"));
        write_csv(rows, fs::File::create(&p)?)?;
        written.push(p);
    }
    if matches!(format, Format::Json | Format::Both) {
        let p = dir.join(format!("{stem}.json"));
        fs::write(&p, serde_json::to_string_pretty(&json_value(rows))? + "\n")?;
        written.push(p);
    }
    let meta = json!({
        "library": "weylbox",
        "version": weylbox::VERSION,
        "cli_version": env!("CARGO_PKG_VERSION"),
        "rows": rows.len(),
        "failed_rows": rows.iter().filter(|r| !r.is_ok()).count(),
        "columns": COLUMNS,
        "stability_hash": format!("{:016x}", stability_hash(rows)),
        "threads": info.threads,
        "seed": info.seed,
        "config": config_echo,
    });
    let p = dir.join(format!("{stem}.meta.json"));
    fs::write(&p, serde_json::to_string_pretty(&meta)? + "\n")?;
    written.push(p);
    Ok(written)
}
