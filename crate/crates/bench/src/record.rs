//! Result records and their CSV and JSON-lines encodings.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// One run of one algorithm on one instance with one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance_id: String,
    pub algorithm: String,
    pub params: String,
    pub seed: u64,
    pub value: f64,
    pub value_queries: u64,
    pub value_rounds: u64,
    pub indep_queries: u64,
    pub indep_rounds: u64,
    pub wall_time_ms: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    schema_version: u32,
    #[serde(flatten)]
    record: BenchRecord,
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record([
            "instance_id",
            "algorithm",
            "params",
            "seed",
            "value",
            "value_queries",
            "value_rounds",
            "indep_queries",
            "indep_rounds",
            "wall_time_ms",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(Into::into)
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[BenchRecord]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(&JsonRecord {
            schema_version: SCHEMA_VERSION,
            record: r.clone(),
        })?;
        writeln!(out, "{line}").map_err(|e| BenchError::io("<jsonl>", e))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| BenchError::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line)?;
        if rec.schema_version != SCHEMA_VERSION {
            return Err(BenchError::config(
                format!("line {}", i + 1),
                format!("schema_version {} is not {SCHEMA_VERSION}", rec.schema_version),
            ));
        }
        out.push(rec.record);
    }
    Ok(out)
}
