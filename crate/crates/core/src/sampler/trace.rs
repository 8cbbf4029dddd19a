//! Chain output containers and their on-disk formats.
//!
//! A trace file is JSON lines: one header object
//! `{"kind":"blockhmm-trace","n":..,"t":..,"s_max":..,"burnin":..,"thin":..,"seed":..}`
//! followed by one object per retained sample with the full model state
//! flattened in. Monitoring scalars are recorded every sweep in memory and
//! written separately as CSV; they are not part of the trace file and come
//! back empty from [`read_trace_jsonl`].

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::ModelState;
use crate::error::{Error, Result};

/// One retained posterior draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub iteration: u64,
    pub loglik: f64,
    #[serde(flatten)]
    pub state: ModelState,
}

/// Per-sweep monitoring scalars. Acceptance rates are cumulative over the
/// chain so far; the regime summaries average the sojourning state's
/// assortativity and transitivity indices over periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarRecord {
    pub iteration: u64,
    pub loglik: f64,
    pub s_star: usize,
    pub acc_gamma: f64,
    pub acc_ab_diag: f64,
    pub acc_ab_off: f64,
    pub acc_py: f64,
    pub upsilon_mean: f64,
    pub upsilon_var: f64,
    pub chi_mean: f64,
    pub chi_var: f64,
}

/// Full output of one chain run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub n: usize,
    pub t: usize,
    pub s_max: usize,
    pub burnin: u64,
    pub thin: u64,
    pub seed: u64,
    pub samples: Vec<Sample>,
    pub scalars: Vec<ScalarRecord>,
}

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    kind: String,
    n: usize,
    t: usize,
    s_max: usize,
    burnin: u64,
    thin: u64,
    seed: u64,
}

const TRACE_KIND: &str = "blockhmm-trace";

pub fn write_trace_jsonl(trace: &ChainTrace, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    let header = TraceHeader {
        kind: TRACE_KIND.to_string(),
        n: trace.n,
        t: trace.t,
        s_max: trace.s_max,
        burnin: trace.burnin,
        thin: trace.thin,
        seed: trace.seed,
    };
    writeln!(f, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for sample in &trace.samples {
        writeln!(f, "{}", serde_json::to_string(sample).expect("sample serializes"))?;
    }
    Ok(())
}

pub fn read_trace_jsonl(path: &Path) -> Result<ChainTrace> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::format("empty trace file".to_string()))??;
    let header: TraceHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::format(format!("trace header: {e}")))?;
    if header.kind != TRACE_KIND {
        return Err(Error::format(format!("unknown trace kind {:?}", header.kind)));
    }
    let mut samples = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Sample =
            serde_json::from_str(&line).map_err(|e| Error::format(format!("trace sample: {e}")))?;
        samples.push(s);
    }
    Ok(ChainTrace {
        n: header.n,
        t: header.t,
        s_max: header.s_max,
        burnin: header.burnin,
        thin: header.thin,
        seed: header.seed,
        samples,
        scalars: Vec::new(),
    })
}

pub const DIAGNOSTICS_CSV_HEADER: &str =
    "iteration,loglik,S_star,acc_gamma,acc_ab_diag,acc_ab_off,acc_py";

/// Writes the per-sweep monitoring scalars as CSV.
pub fn write_diagnostics_csv(trace: &ChainTrace, path: &Path) -> Result<()> {
    let mut buf = String::from(DIAGNOSTICS_CSV_HEADER);
    buf.push('\n');
    for r in &trace.scalars {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.iteration, r.loglik, r.s_star, r.acc_gamma, r.acc_ab_diag, r.acc_ab_off, r.acc_py
        ));
    }
    std::fs::write(path, buf)?;
    Ok(())
}
