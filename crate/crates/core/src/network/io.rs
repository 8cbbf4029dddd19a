//! On-disk formats for network series and related CSV inputs.
//!
//! Two serializations are supported:
//! * a directory with `roster.txt` (one identifier per line), `periods.txt`
//!   (one label per line) and dense 0/1 matrices `week_<k>.csv`;
//! * a packed single-file JSON-lines format, one header line followed by one
//!   line per week carrying a run-length encoding of the row-major bit
//!   string (run lengths of alternating values starting with zeros).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{EdgeRecord, NetworkSeries, NetworkSummary, Roster, Sociomatrix};

/// Reads `date,seller,buyer` transaction records.
pub fn read_edge_csv(path: &Path) -> Result<Vec<EdgeRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    {
        let headers = rdr.headers().map_err(|e| Error::format(e.to_string()))?;
        let want = ["date", "seller", "buyer"];
        let got: Vec<&str> = headers.iter().collect();
        if got != want {
            return Err(Error::format(format!(
                "edge list header must be 'date,seller,buyer', got '{}'",
                got.join(",")
            )));
        }
    }
    let mut out = Vec::new();
    for (lineno, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::format(e.to_string()))?;
        if row.len() != 3 {
            return Err(Error::format(format!("record {}: expected 3 fields", lineno + 2)));
        }
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d").map_err(|_| {
            Error::format(format!("record {}: unparseable date '{}'", lineno + 2, &row[0]))
        })?;
        out.push(EdgeRecord { date, seller: row[1].to_string(), buyer: row[2].to_string() });
    }
    Ok(out)
}

/// Reads a roster file: one identifier per line, blanks ignored.
pub fn read_roster(path: &Path) -> Result<Roster> {
    let content = fs::read_to_string(path)?;
    let ids: Vec<String> =
        content.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    Roster::new(ids)
}

pub fn write_roster(roster: &Roster, path: &Path) -> Result<()> {
    let mut buf = String::new();
    for id in roster.ids() {
        buf.push_str(id);
        buf.push('\n');
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Writes the directory format under `dir` (created if missing).
pub fn write_series_dir(series: &NetworkSeries, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_roster(&series.roster, &dir.join("roster.txt"))?;
    fs::write(dir.join("periods.txt"), series.periods.join("\n") + "\n")?;
    for (k, week) in series.weeks.iter().enumerate() {
        let mut buf = String::new();
        let n = week.n();
        for i in 0..n {
            let row: Vec<&str> = (0..n).map(|j| if week.get(i, j) { "1" } else { "0" }).collect();
            buf.push_str(&row.join(","));
            buf.push('\n');
        }
        fs::write(dir.join(format!("week_{k}.csv")), buf)?;
    }
    Ok(())
}

pub fn read_series_dir(dir: &Path) -> Result<NetworkSeries> {
    let roster = read_roster(&dir.join("roster.txt"))?;
    let periods_raw = fs::read_to_string(dir.join("periods.txt"))?;
    let periods: Vec<String> =
        periods_raw.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    let mut weeks = Vec::with_capacity(periods.len());
    for k in 0..periods.len() {
        let path = dir.join(format!("week_{k}.csv"));
        let content = fs::read_to_string(&path)
            .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
        let mut rows = Vec::new();
        for line in content.lines().filter(|l| !l.trim().is_empty()) {
            let row: Result<Vec<u8>> = line
                .split(',')
                .map(|c| match c.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => {
                        Err(Error::format(format!("{}: bad cell '{other}'", path.display())))
                    }
                })
                .collect();
            rows.push(row?);
        }
        weeks.push(Sociomatrix::from_rows(&rows)?);
    }
    NetworkSeries::new(roster, periods, weeks)
}

#[derive(Serialize, Deserialize)]
struct PackedHeader {
    n: usize,
    t: usize,
    roster: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct PackedWeek {
    period: String,
    runs: String,
}

fn encode_runs(m: &Sociomatrix) -> String {
    let n = m.n();
    let mut runs: Vec<usize> = Vec::new();
    let mut cur = false;
    let mut len = 0usize;
    for i in 0..n {
        for j in 0..n {
            let b = m.get(i, j);
            if b == cur {
                len += 1;
            } else {
                runs.push(len);
                cur = b;
                len = 1;
            }
        }
    }
    runs.push(len);
    runs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
}

fn decode_runs(runs: &str, n: usize) -> Result<Sociomatrix> {
    let mut bits = Vec::with_capacity(n * n);
    let mut cur = 0u8;
    for piece in runs.split_whitespace() {
        let len: usize =
            piece.parse().map_err(|_| Error::format(format!("bad run length '{piece}'")))?;
        bits.extend(std::iter::repeat_n(cur, len));
        cur ^= 1;
    }
    if bits.len() != n * n {
        return Err(Error::format(format!(
            "run-length payload decodes to {} bits, expected {}",
            bits.len(),
            n * n
        )));
    }
    let rows: Vec<Vec<u8>> = bits.chunks(n).map(|c| c.to_vec()).collect();
    Sociomatrix::from_rows(&rows)
}

/// Writes the packed JSON-lines format.
pub fn write_series_jsonl(series: &NetworkSeries, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    let header = PackedHeader {
        n: series.n(),
        t: series.t_len(),
        roster: series.roster.ids().to_vec(),
    };
    writeln!(f, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for (period, week) in series.periods.iter().zip(&series.weeks) {
        let line = PackedWeek { period: period.clone(), runs: encode_runs(week) };
        writeln!(f, "{}", serde_json::to_string(&line).expect("week serializes"))?;
    }
    Ok(())
}

pub fn read_series_jsonl(path: &Path) -> Result<NetworkSeries> {
    let f = fs::File::open(path)?;
    let mut lines = BufReader::new(f).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::format("empty packed series file".to_string()))??;
    let header: PackedHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::format(format!("packed header: {e}")))?;
    let roster = Roster::new(header.roster)?;
    let mut periods = Vec::with_capacity(header.t);
    let mut weeks = Vec::with_capacity(header.t);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let w: PackedWeek =
            serde_json::from_str(&line).map_err(|e| Error::format(format!("packed week: {e}")))?;
        periods.push(w.period);
        weeks.push(decode_runs(&w.runs, header.n)?);
    }
    if weeks.len() != header.t {
        return Err(Error::format(format!(
            "packed series declares {} weeks but contains {}",
            header.t,
            weeks.len()
        )));
    }
    NetworkSeries::new(roster, periods, weeks)
}

/// Detects the on-disk format by path kind: directory or packed file.
pub fn read_series_auto(path: &Path) -> Result<NetworkSeries> {
    if path.is_dir() {
        read_series_dir(path)
    } else {
        read_series_jsonl(path)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "NaN".to_string(),
    }
}

pub const SUMMARY_CSV_HEADER: &str = "period,active_traders,mean_degree,max_in_degree,\
max_out_degree,degree_correlation,clustering_coefficient,link_probability,\
assortativity_by_degree";

/// Writes per-week summary statistics as CSV (undefined values as NaN).
pub fn write_summary_csv(
    periods: &[String],
    summaries: &[NetworkSummary],
    path: &Path,
) -> Result<()> {
    assert_eq!(periods.len(), summaries.len());
    let mut buf = String::from(SUMMARY_CSV_HEADER);
    buf.push('\n');
    for (p, s) in periods.iter().zip(summaries) {
        buf.push_str(&format!(
            "{p},{},{},{},{},{},{},{},{}\n",
            s.active_traders,
            s.mean_degree,
            s.max_in_degree,
            s.max_out_degree,
            fmt_opt(s.degree_correlation),
            s.clustering_coefficient,
            s.link_probability,
            fmt_opt(s.assortativity_by_degree),
        ));
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Reads a CSV file into (header, string rows). Used for column selection on
/// summary tables.
pub fn read_csv_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::format(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::format(e.to_string()))?;
        rows.push(row.iter().map(String::from).collect());
    }
    Ok((header, rows))
}
