//! Artifact writers: `trace.csv` and `summary.json`.

use std::fs;
use std::io::Write;
use std::path::Path;

use rcs_core::engine::{MetricsSummary, RunResult, SlotRecord};
use rcs_core::policies::ExecutionDecision;
use serde::Serialize;

use crate::config::ScenarioFile;
use crate::CliError;

pub const TRACE_HEADER: [&str; 10] = [
    "t",
    "d_t",
    "status",
    "executed_id",
    "aoi_executed",
    "voi_executed",
    "distance_ok",
    "speed_ok",
    "risk",
    "downlink_queue_depth",
];

/// Formats `x` with 6 significant digits, like C's `%g`.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // The exponent is taken after rounding to 6 digits.
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn trace_row(r: &SlotRecord) -> [String; 10] {
    let executed_id = match r.executed {
        ExecutionDecision::Execute(id) => id.to_string(),
        ExecutionDecision::HoldLast => String::new(),
    };
    [
        r.t.to_string(),
        sig6(r.d_t),
        r.status.as_str().to_string(),
        executed_id,
        r.aoi_executed.map(|a| a.to_string()).unwrap_or_default(),
        r.voi_executed.map(sig6).unwrap_or_default(),
        r.verdict.distance_ok.to_string(),
        r.verdict.speed_ok.to_string(),
        sig6(r.risk),
        r.downlink_queue_depth.to_string(),
    ]
}

pub fn trace_csv(records: &[SlotRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER).expect("in-memory write");
    for r in records {
        w.write_record(trace_row(r)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub policy: &'a str,
    #[serde(flatten)]
    pub metrics: &'a MetricsSummary,
    pub config: ScenarioFile,
}

pub fn summary_json(run: &RunResult) -> String {
    let summary = Summary {
        policy: run.config.policies.execution.name(),
        metrics: &run.summary,
        config: ScenarioFile::resolved(&run.config),
    };
    let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| CliError::io(path, e))
}

pub fn write_run(dir: &Path, run: &RunResult) -> Result<(), CliError> {
    create_dir(dir)?;
    write_file(&dir.join("trace.csv"), &trace_csv(&run.records))?;
    write_file(&dir.join("summary.json"), summary_json(run).as_bytes())
}
