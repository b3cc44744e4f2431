//! Sigsets: CSV-listed gallery/probe sets of (id, subject, path) entries.

use super::{format_data_list, parse_data_list, DataError, DataRecord};
use std::fs;
use std::path::Path;

/// One sigset entry. The full [`DataRecord`] is kept alongside the three
/// required fields so provider columns (mesh/landmark paths, pose tags, ...)
/// survive a read/write cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigsetEntry {
    pub id: String,
    pub subject: String,
    pub path: String,
    pub record: DataRecord,
}

/// A named list of gallery or probe entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sigset {
    pub name: String,
    pub entries: Vec<SigsetEntry>,
}

impl Sigset {
    /// Validates entry-id uniqueness and nonempty file paths.
    pub fn new(name: impl Into<String>, entries: Vec<SigsetEntry>) -> Result<Self, DataError> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if e.path.is_empty() {
                return Err(DataError::Config(format!(
                    "sigset entry '{}' has an empty file path",
                    e.id
                )));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(DataError::Config(format!(
                    "duplicate sigset entry id '{}'",
                    e.id
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads a sigset from a CSV data list with at least the tags
/// `id,subject,path`; the sigset name is the file stem.
pub fn read_sigset(path: &Path) -> Result<Sigset, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sigset".into());
    sigset_from_text(&name, &text)
}

fn sigset_from_text(name: &str, text: &str) -> Result<Sigset, DataError> {
    let records = parse_data_list(text)?;
    let mut entries = Vec::with_capacity(records.len());
    for (i, record) in records.into_iter().enumerate() {
        let line = i as u64 + 2;
        let field = |key: &str| -> Result<String, DataError> {
            record
                .get(key)
                .map(str::to_owned)
                .ok_or_else(|| DataError::Format {
                    line,
                    message: format!("sigset row missing required tag '{key}'"),
                })
        };
        entries.push(SigsetEntry {
            id: field("id")?,
            subject: field("subject")?,
            path: field("path")?,
            record,
        });
    }
    Sigset::new(name, entries)
}

/// Writes a sigset back to a CSV data list, preserving extra columns.
pub fn write_sigset(sigset: &Sigset, path: &Path) -> Result<(), DataError> {
    let records: Vec<DataRecord> = sigset.entries.iter().map(|e| e.record.clone()).collect();
    let text = format_data_list(&records)?;
    fs::write(path, text).map_err(|e| DataError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_required_and_extra_columns() {
        let s = sigset_from_text(
            "probe_03",
            "id,subject,path,mesh\np1,alice,img/a.png,m/a.obj\np2,bob,img/b.png,m/b.obj\n",
        )
        .unwrap();
        assert_eq!(s.name, "probe_03");
        assert_eq!(s.len(), 2);
        assert_eq!(s.entries[0].subject, "alice");
        assert_eq!(s.entries[1].record.get("mesh"), Some("m/b.obj"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = sigset_from_text("s", "id,subject,path\np1,a,x\np1,b,y\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn empty_path_rejected() {
        assert!(sigset_from_text("s", "id,subject,path\np1,a,\n").is_err());
    }

    #[test]
    fn missing_tag_rejected() {
        let err = sigset_from_text("s", "id,subject\np1,a\n").unwrap_err();
        assert!(err.to_string().contains("path"));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gallery.csv");
        let s = sigset_from_text("gallery", "id,subject,path\ng1,a,x.png\ng2,b,y.png\n").unwrap();
        write_sigset(&s, &path).unwrap();
        let back = read_sigset(&path).unwrap();
        assert_eq!(back, s);
    }
}
