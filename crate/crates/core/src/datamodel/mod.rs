//! File-backed data records, CSV data lists, sigsets, run configuration and
//! image buffers.
//!
//! The unit of work is a [`DataRecord`]: an ordered string key/value table
//! that keeps file *paths* in memory, never file contents. Data lists are
//! CSV files whose first line carries the tag (key) names.

mod config;
mod image;
mod sigset;

pub use config::{
    parse_config, DatasetInfo, EvalMetric, EvaluationSpec, InputLists, OutputDirs, PipelineConfig,
    PipelineSpec, REGISTERED_MODULES,
};
pub use image::{normalize_resolution, ImageBuffer};
pub use sigset::{read_sigset, write_sigset, Sigset, SigsetEntry};

use indexmap::IndexMap;
use std::fmt;
use std::fs;
use std::path::Path;
use thiserror::Error;

/// Errors produced by record, list, config and image handling.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("format error at line {line}: {message}")]
    Format { line: u64, message: String },
    #[error("malformed JSON: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("image error: {0}")]
    Image(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// An ordered map of string keys to string values.
///
/// Values are paths or scalar strings; binary payloads stay on disk and are
/// referenced by path. Conventional keys include `path`, `subject`, `pose`
/// and `signature_path`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataRecord {
    entries: IndexMap<String, String>,
}

impl DataRecord {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a value; insertion order of new keys is kept.
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for DataRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in self.iter() {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
            first = false;
        }
        Ok(())
    }
}

/// Reads a CSV data list: first line is the comma-separated header of keys,
/// each following row becomes one record with exactly those keys.
pub fn read_data_list(path: &Path) -> Result<Vec<DataRecord>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    parse_data_list(&text)
}

/// Parses data-list text. See [`read_data_list`].
pub fn parse_data_list(text: &str) -> Result<Vec<DataRecord>, DataError> {
    if text.trim().is_empty() {
        return Err(DataError::Format {
            line: 1,
            message: "empty data list (missing header line)".into(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let mut record = DataRecord::new();
        for (tag, value) in headers.iter().zip(row.iter()) {
            record.set(tag.clone(), value);
        }
        out.push(record);
    }
    Ok(out)
}

fn csv_error(err: csv::Error) -> DataError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    DataError::Format {
        line,
        message: err.to_string(),
    }
}

/// Writes records as a CSV data list. All records must share the first
/// record's keys in the same order; values must not contain newlines.
pub fn write_data_list(records: &[DataRecord], path: &Path) -> Result<(), DataError> {
    let text = format_data_list(records)?;
    fs::write(path, text).map_err(|e| DataError::io(path, e))
}

/// Serializes records to data-list text. See [`write_data_list`].
pub fn format_data_list(records: &[DataRecord]) -> Result<String, DataError> {
    let Some(first) = records.first() else {
        return Err(DataError::Format {
            line: 0,
            message: "cannot write an empty record list".into(),
        });
    };
    let keys: Vec<&str> = first.keys().collect();
    let mut out = String::new();
    write_csv_row(&mut out, &keys);
    for (i, record) in records.iter().enumerate() {
        let line = i as u64 + 2;
        let record_keys: Vec<&str> = record.keys().collect();
        if record_keys != keys {
            return Err(DataError::Format {
                line,
                message: format!(
                    "heterogeneous record keys: expected [{}], found [{}]",
                    keys.join(","),
                    record_keys.join(",")
                ),
            });
        }
        let values: Vec<&str> = record.iter().map(|(_, v)| v).collect();
        if values.iter().any(|v| v.contains('\n') || v.contains('\r')) {
            return Err(DataError::Format {
                line,
                message: "embedded newlines are not supported in data lists".into(),
            });
        }
        write_csv_row(&mut out, &values);
    }
    Ok(out)
}

// Quotes a field when it contains a comma or quote, or when leaving it bare
// would make the whole row an empty line (which CSV readers skip).
fn write_csv_row(out: &mut String, fields: &[&str]) {
    let lone_empty = fields.len() == 1 && fields[0].is_empty();
    for (i, field) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if field.contains(',') || field.contains('"') || lone_empty {
            out.push('"');
            out.push_str(&field.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(field);
        }
    }
    out.push('\n');
}
