// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub tx_id: String,
    pub gas_limit: u64,
    pub gas_used: u64,
    pub price: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("trace file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("cannot read trace: {0}")]
    Read(String),
}

/// Parsed rows plus everything that was skipped.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TraceLoad {
    pub rows: Vec<TraceRow>,
    /// Rows that failed to parse.
    pub malformed: usize,
    /// Rows with `gas_used > gas_limit`, excluded.
    pub over_limit: usize,
    pub warnings: Vec<String>,
}

struct Columns {
    tx_id: usize,
    gas_limit: usize,
    gas_used: usize,
    price: Option<usize>,
}

fn columns(headers: &csv::StringRecord) -> Result<Columns, IngestError> {
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let need = |name: &str| {
        find(name).ok_or_else(|| IngestError::MalformedHeader(format!("missing column {name:?}")))
    };
    Ok(Columns {
        tx_id: need("tx_id")?,
        gas_limit: need("gas_limit")?,
        gas_used: need("gas_used")?,
        price: find("price"),
    })
}

fn field(rec: &csv::StringRecord, i: usize) -> Option<&str> {
    rec.get(i).map(str::trim)
}

/// Reads CSV with a header naming `tx_id`, `gas_limit`, `gas_used` and
/// optionally `price`, in any order.
pub fn ingest_reader<R: Read>(reader: R) -> Result<TraceLoad, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::MalformedHeader(e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(IngestError::MalformedHeader("empty header".into()));
    }
    let cols = columns(&headers)?;
    let mut load = TraceLoad::default();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                load.malformed += 1;
                load.warnings.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let parsed = (|| {
            let tx_id = field(&rec, cols.tx_id)?.to_string();
            let gas_limit = field(&rec, cols.gas_limit)?.parse().ok()?;
            let gas_used = field(&rec, cols.gas_used)?.parse().ok()?;
            let price = match cols.price.and_then(|p| field(&rec, p)) {
                None | Some("") => None,
                Some(s) => Some(s.parse().ok()?),
            };
            Some(TraceRow {
                tx_id,
                gas_limit,
                gas_used,
                price,
            })
        })();
        match parsed {
            None => {
                load.malformed += 1;
                load.warnings.push(format!("line {line}: unparseable row"));
            }
            Some(row) if row.gas_used > row.gas_limit => {
                load.over_limit += 1;
                load.warnings.push(format!(
                    "line {line}: {} used {} above its limit {}, excluded",
                    row.tx_id, row.gas_used, row.gas_limit
                ));
            }
            Some(row) => load.rows.push(row),
        }
    }
    Ok(load)
}

pub fn ingest_trace(path: &Path, format: TraceFormat) -> Result<TraceLoad, IngestError> {
    let TraceFormat::Csv = format;
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::FileNotFound(path.to_path_buf()),
        _ => IngestError::Read(e.to_string()),
    })?;
    ingest_reader(std::io::BufReader::new(file))
}
