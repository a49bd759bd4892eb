//! CSV ingestion into observation records.

use std::collections::BTreeMap;
use std::path::Path;

use rdd_core::{ObservationRecord, ThresholdSpec};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {message}")]
    File { path: String, message: String },
    #[error("{0}")]
    Schema(String),
    #[error("line {line}: z = {found} but assignment {assignment} gives z = {expected} at threshold {x0}")]
    ZMismatch {
        line: u64,
        found: u8,
        expected: u8,
        assignment: f64,
        x0: f64,
    },
}

impl IngestError {
    pub fn name(&self) -> &'static str {
        match self {
            IngestError::File { .. } => "FileError",
            IngestError::Schema(_) => "SchemaError",
            IngestError::ZMismatch { .. } => "ZMismatch",
        }
    }
}

/// Column mapping. Without a header row, columns are given as 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestionSchema {
    pub outcome: String,
    pub assignment: String,
    pub treatment: String,
    pub covariates: Vec<String>,
    /// Optional indicator column, cross-checked against the threshold when present.
    pub z: String,
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for IngestionSchema {
    fn default() -> Self {
        Self {
            outcome: "outcome".into(),
            assignment: "assignment".into(),
            treatment: "treatment".into(),
            covariates: Vec::new(),
            z: "z".into(),
            delimiter: b',',
            has_header: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub input: String,
    pub input_sha256: String,
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub dropped: Vec<DroppedRow>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<ObservationRecord>,
    pub report: IngestReport,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn locate(headers: Option<&csv::StringRecord>, spec: &str, role: &str) -> Result<usize, IngestError> {
    match headers {
        Some(h) => h.iter().position(|c| c.trim() == spec).ok_or_else(|| {
            IngestError::Schema(format!("{role} column '{spec}' not found in header"))
        }),
        None => match spec.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => Err(IngestError::Schema(format!(
                "without a header, the {role} column must be a 1-based index, got '{spec}'"
            ))),
        },
    }
}

fn parse_real(field: Option<&str>, what: &str) -> Result<f64, String> {
    let raw = field.map(str::trim).unwrap_or("");
    if raw.is_empty() {
        return Err(format!("missing {what}"));
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{what} '{raw}' is not a finite number")),
    }
}

fn parse_binary(field: Option<&str>, what: &str) -> Result<u8, String> {
    let v = parse_real(field, what)?;
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(format!("{what} '{}' is not 0 or 1", field.unwrap_or("").trim()))
    }
}

/// Parses CSV bytes. Rows with unparseable or missing fields are dropped
/// and reported by line number; a `z` value that disagrees with the
/// threshold is a hard error. Lines starting with `#` are comments.
pub fn ingest_bytes(
    bytes: &[u8],
    label: &str,
    schema: &IngestionSchema,
    threshold: &ThresholdSpec,
) -> Result<Dataset, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(bytes);
    let headers = if schema.has_header {
        let h = reader
            .headers()
            .map_err(|e| IngestError::Schema(format!("cannot read header: {e}")))?
            .clone();
        if h.is_empty() {
            return Err(IngestError::Schema("empty header row".into()));
        }
        Some(h)
    } else {
        None
    };
    let h = headers.as_ref();
    let y_col = locate(h, &schema.outcome, "outcome")?;
    let x_col = locate(h, &schema.assignment, "assignment")?;
    let t_col = locate(h, &schema.treatment, "treatment")?;
    let z_col = match h {
        Some(h) => h.iter().position(|c| c.trim() == schema.z),
        None => None,
    };
    let cov_cols = schema
        .covariates
        .iter()
        .map(|c| locate(h, c, "covariate"))
        .collect::<Result<Vec<_>, _>>()?;

    let mut records = Vec::new();
    let mut dropped = Vec::new();
    let mut rows_read = 0;
    for row in reader.records() {
        let row = row.map_err(|e| IngestError::Schema(format!("malformed CSV: {e}")))?;
        rows_read += 1;
        // physical line; the reader's own counter skips blank lines
        let line = row.position().map_or(0, |p| {
            let mut start = p.byte() as usize;
            while start < bytes.len() && matches!(bytes[start], b'\n' | b'\r') {
                start += 1;
            }
            bytes[..start].iter().filter(|&&b| b == b'\n').count() as u64 + 1
        });
        let parsed = (|| -> Result<ObservationRecord, String> {
            let y = parse_real(row.get(y_col), "outcome")?;
            let x = parse_real(row.get(x_col), "assignment")?;
            let t = parse_binary(row.get(t_col), "treatment")?;
            let mut covariates = BTreeMap::new();
            for (name, &col) in schema.covariates.iter().zip(&cov_cols) {
                covariates.insert(name.clone(), parse_real(row.get(col), name)?);
            }
            ObservationRecord::with_covariates(y, x, t, covariates).map_err(|e| e.to_string())
        })();
        let record = match parsed {
            Ok(r) => r,
            Err(reason) => {
                dropped.push(DroppedRow { line, reason });
                continue;
            }
        };
        if let Some(col) = z_col {
            let z = match parse_binary(row.get(col), "z") {
                Ok(z) => z,
                Err(reason) => {
                    dropped.push(DroppedRow { line, reason });
                    continue;
                }
            };
            let expected = threshold.indicator(record.assignment);
            if z != expected {
                return Err(IngestError::ZMismatch {
                    line,
                    found: z,
                    expected,
                    assignment: record.assignment,
                    x0: threshold.x0(),
                });
            }
        }
        records.push(record);
    }
    Ok(Dataset {
        records,
        report: IngestReport {
            input: label.to_string(),
            input_sha256: sha256_hex(bytes),
            rows_read,
            rows_dropped: dropped.len(),
            dropped,
        },
    })
}

pub fn ingest_csv(
    path: &Path,
    schema: &IngestionSchema,
    threshold: &ThresholdSpec,
) -> Result<Dataset, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ingest_bytes(&bytes, &path.display().to_string(), schema, threshold)
}
