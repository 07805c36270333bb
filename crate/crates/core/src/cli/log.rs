//! Append-only JSONL screening log.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{IndicatorVector, ScreeningResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRecord {
    /// UTC, RFC 3339.
    pub timestamp: String,
    pub subject_id: String,
    pub indicators: IndexMap<String, u8>,
    pub modes_used: Vec<String>,
    pub score: f64,
    pub percent: f64,
    pub weights_digest: String,
    pub renormalized: bool,
}

impl ScreeningRecord {
    pub fn new(subject_id: &str, indicators: &IndicatorVector, result: &ScreeningResult) -> Self {
        ScreeningRecord {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            subject_id: subject_id.to_string(),
            indicators: indicators
                .labels()
                .iter()
                .map(|(m, l)| (m.to_string(), u8::from(*l)))
                .collect(),
            modes_used: result.modes_used.iter().map(|m| m.to_string()).collect(),
            score: result.score,
            percent: result.percent,
            weights_digest: result.weights_used.digest(),
            renormalized: result.renormalized,
        }
    }
}

/// Appends one record as a single line.
pub fn append_record(path: &Path, record: &ScreeningRecord) -> Result<()> {
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(line.as_bytes())?;
    Ok(())
}

/// Reads every record back, failing on the first malformed line.
pub fn read_log(path: &Path) -> Result<Vec<ScreeningRecord>> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let record: ScreeningRecord = serde_json::from_str(&line)
            .map_err(|e| Error::data(format!("log line {}: {e}", i + 1)))?;
        chrono::DateTime::parse_from_rfc3339(&record.timestamp)
            .map_err(|e| Error::data(format!("log line {}: bad timestamp: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}
