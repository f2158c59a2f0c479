//! Report and coefficient-table serialization.

use std::path::Path;

use anyhow::{Context, Result};
use kp_core::models::ModelResult;
use kp_core::report::SuiteReport;

pub const REPORT_HEADER: [&str; 4] = ["check", "status", "anchor", "runtime_ms"];

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().context("flushing csv")?;
    Ok(String::from_utf8(bytes)?)
}

/// One row per check; `runtime_ms` is empty unless timings were recorded.
pub fn report_csv(report: &SuiteReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER)?;
    for c in &report.checks {
        let ms = c.runtime_ms.map(|m| m.to_string()).unwrap_or_default();
        w.write_record([
            c.name.as_str(),
            c.status.as_str(),
            c.anchor.as_str(),
            ms.as_str(),
        ])?;
    }
    finish(w)
}

/// One column per series variable, then the coefficient as `p/q`.
pub fn model_csv(r: &ModelResult) -> Result<String> {
    let names: Vec<String> = r
        .payload
        .vars()
        .vars()
        .iter()
        .map(|v| v.name.clone())
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(names.iter().map(String::as_str).chain(["value"]))?;
    for (e, c) in r.payload.terms() {
        let row: Vec<String> = e
            .iter()
            .map(|x| x.to_string())
            .chain([c.to_string()])
            .collect();
        w.write_record(&row)?;
    }
    finish(w)
}

/// Writes to `path`, or to stdout without one.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
