//! File-based inputs: candidate tables, snapshot traces and interrupt events.
//!
//! Candidate table (comma-separated, header row required, columns in this
//! exact order):
//!
//! ```text
//! id,instance_type,region,az,vcpu,mem_gib,spot_price,ondemand_price,base_ondemand_price,coremark_single,t3,network_optimized,disk_optimized,sps_single,interrupt_freq
//! ```
//!
//! `base_ondemand_price`, `sps_single` and `interrupt_freq` may be blank. A
//! blank `id` is filled in as `{instance_type}/{region}/{az}`; a non-blank one
//! must equal that composition. Booleans are `true` / `false`.
//!
//! A trace is a directory of candidate tables named `<epoch-seconds>.csv`.
//! Interrupt events are JSON lines:
//! `{"t": <epoch-seconds>, "kind": "interrupt", "candidate_id": "<id>"}`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ensure_unique_ids, CandidateId, InstanceCandidate};
use crate::resilience::InterruptEvent;

pub const CANDIDATE_COLUMNS: [&str; 15] = [
    "id",
    "instance_type",
    "region",
    "az",
    "vcpu",
    "mem_gib",
    "spot_price",
    "ondemand_price",
    "base_ondemand_price",
    "coremark_single",
    "t3",
    "network_optimized",
    "disk_optimized",
    "sps_single",
    "interrupt_freq",
];

/// Candidate set observed at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketSnapshot {
    pub timestamp: i64,
    pub candidates: Vec<InstanceCandidate>,
}

pub fn load_candidates(path: impl AsRef<Path>) -> Result<Vec<InstanceCandidate>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_candidates(file).map_err(|e| match e {
        Error::Io { .. } => e,
        other => Error::InFile {
            path: path.to_path_buf(),
            source: Box::new(other),
        },
    })
}

pub fn read_candidates(reader: impl Read) -> Result<Vec<InstanceCandidate>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(Error::parse(1, "header", "missing header row")),
        Some(r) => r.map_err(|e| csv_error(&e))?,
    };
    if header.len() != CANDIDATE_COLUMNS.len()
        || header.iter().zip(CANDIDATE_COLUMNS).any(|(h, c)| h != c)
    {
        return Err(Error::parse(
            1,
            "header",
            format!("expected `{}`", CANDIDATE_COLUMNS.join(",")),
        ));
    }

    let mut out = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != CANDIDATE_COLUMNS.len() {
            return Err(Error::parse(
                line,
                "row",
                format!(
                    "expected {} fields, found {}",
                    CANDIDATE_COLUMNS.len(),
                    record.len()
                ),
            ));
        }
        out.push(parse_row(line, &record)?);
    }
    ensure_unique_ids(out.iter().map(|c| &c.id))?;
    Ok(out)
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::parse(line, "row", e.to_string())
}

struct Row<'a> {
    line: u64,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn raw(&self, col: usize) -> &str {
        self.record.get(col).unwrap_or("")
    }

    fn err(&self, col: usize, reason: impl Into<String>) -> Error {
        Error::parse(self.line, CANDIDATE_COLUMNS[col], reason)
    }

    fn text(&self, col: usize) -> Result<String> {
        let v = self.raw(col);
        if v.is_empty() {
            return Err(self.err(col, "must not be blank"));
        }
        if v.contains('/') {
            return Err(self.err(col, "must not contain `/`"));
        }
        Ok(v.to_string())
    }

    fn positive(&self, col: usize) -> Result<f64> {
        let v = self.raw(col);
        let x: f64 = v
            .parse()
            .map_err(|_| self.err(col, format!("`{v}` is not a number")))?;
        if !(x.is_finite() && x > 0.0) {
            return Err(self.err(col, format!("must be positive, got {v}")));
        }
        Ok(x)
    }

    fn opt_positive(&self, col: usize) -> Result<Option<f64>> {
        if self.raw(col).is_empty() {
            Ok(None)
        } else {
            self.positive(col).map(Some)
        }
    }

    fn uint<T: std::str::FromStr>(&self, col: usize) -> Result<T> {
        let v = self.raw(col);
        v.parse()
            .map_err(|_| self.err(col, format!("`{v}` is not a nonnegative integer")))
    }

    fn boolean(&self, col: usize) -> Result<bool> {
        match self.raw(col) {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(self.err(col, format!("`{v}` is not `true` or `false`"))),
        }
    }
}

fn parse_row(line: u64, record: &csv::StringRecord) -> Result<InstanceCandidate> {
    let row = Row { line, record };
    let instance_type = row.text(1)?;
    let region = row.text(2)?;
    let az = row.text(3)?;
    let composed = CandidateId::compose(&instance_type, &region, &az);
    let id = match row.raw(0) {
        "" => composed,
        given if given == composed.as_str() => composed,
        given => {
            return Err(row.err(0, format!("`{given}` does not match `{composed}`")));
        }
    };
    let sps_single = if row.raw(13).is_empty() {
        None
    } else {
        let s: u8 = row.uint(13)?;
        if !(1..=3).contains(&s) {
            return Err(row.err(13, format!("must be 1, 2 or 3, got {s}")));
        }
        Some(s)
    };
    let interrupt_freq = if row.raw(14).is_empty() {
        None
    } else {
        Some(row.uint(14)?)
    };
    Ok(InstanceCandidate {
        id,
        instance_type,
        region,
        az,
        cpu: row.positive(4)?,
        mem: row.positive(5)?,
        spot_price: row.positive(6)?,
        ondemand_price: row.positive(7)?,
        base_ondemand_price: row.opt_positive(8)?,
        benchmark: row.positive(9)?,
        t3: row.uint(10)?,
        network_optimized: row.boolean(11)?,
        disk_optimized: row.boolean(12)?,
        sps_single,
        interrupt_freq,
    })
}

/// Writes candidates in the canonical table format. Numbers use the shortest
/// representation that parses back to the same value.
pub fn write_candidates(writer: impl Write, candidates: &[InstanceCandidate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::parse(0, "row", e.to_string());
    w.write_record(CANDIDATE_COLUMNS).map_err(io_err)?;
    for c in candidates {
        let opt = |x: Option<String>| x.unwrap_or_default();
        w.write_record([
            c.id.to_string(),
            c.instance_type.clone(),
            c.region.clone(),
            c.az.clone(),
            c.cpu.to_string(),
            c.mem.to_string(),
            c.spot_price.to_string(),
            c.ondemand_price.to_string(),
            opt(c.base_ondemand_price.map(|x| x.to_string())),
            c.benchmark.to_string(),
            c.t3.to_string(),
            c.network_optimized.to_string(),
            c.disk_optimized.to_string(),
            opt(c.sps_single.map(|x| x.to_string())),
            opt(c.interrupt_freq.map(|x| x.to_string())),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Loads every `<epoch>.csv` in `dir`, sorted by timestamp. Other files are ignored.
pub fn load_trace(dir: impl AsRef<Path>) -> Result<Vec<MarketSnapshot>> {
    let dir = dir.as_ref();
    let mut stamped = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let timestamp: i64 = stem.parse().map_err(|_| Error::InFile {
            path: path.clone(),
            source: Box::new(Error::parse(
                0,
                "filename",
                format!("`{stem}` is not an epoch timestamp"),
            )),
        })?;
        stamped.push((timestamp, path));
    }
    stamped.sort();
    for pair in stamped.windows(2) {
        if pair[0].0 >= pair[1].0 {
            return Err(Error::NonMonotonicTimestamps {
                previous: pair[0].0,
                next: pair[1].0,
            });
        }
    }
    stamped
        .into_iter()
        .map(|(timestamp, path)| {
            Ok(MarketSnapshot {
                timestamp,
                candidates: load_candidates(&path)?,
            })
        })
        .collect()
}

/// Checks that snapshot timestamps strictly increase.
pub fn ensure_monotonic(trace: &[MarketSnapshot]) -> Result<()> {
    for pair in trace.windows(2) {
        if pair[0].timestamp >= pair[1].timestamp {
            return Err(Error::NonMonotonicTimestamps {
                previous: pair[0].timestamp,
                next: pair[1].timestamp,
            });
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawEvent {
    t: i64,
    kind: String,
    candidate_id: String,
}

pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<InterruptEvent>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_events(BufReader::new(file)).map_err(|e| match e {
        Error::Io { .. } => e,
        other => Error::InFile {
            path: path.to_path_buf(),
            source: Box::new(other),
        },
    })
}

/// Parses JSON-lines interrupt events and returns them sorted by time
/// (stable for equal timestamps). Blank lines are skipped.
pub fn read_events(reader: impl BufRead) -> Result<Vec<InterruptEvent>> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx as u64 + 1;
        let line = line.map_err(|e| Error::parse(lineno, "line", e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEvent = serde_json::from_str(&line)
            .map_err(|e| Error::parse(lineno, format!("column {}", e.column()), e.to_string()))?;
        if raw.kind != "interrupt" {
            return Err(Error::parse(
                lineno,
                "kind",
                format!("unsupported event kind `{}`", raw.kind),
            ));
        }
        events.push(InterruptEvent {
            t: raw.t,
            candidate_id: CandidateId::new(raw.candidate_id),
        });
    }
    events.sort_by_key(|e| e.t);
    Ok(events)
}
