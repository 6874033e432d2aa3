//! Line-oriented JSON helpers with line-number-bearing errors.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

/// Parses one JSONL file. `required` lists field names validated before
/// deserialization so errors can name the missing field and line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_record(&line, lineno, required)?);
    }
    Ok(out)
}

/// Parses a single JSONL record; `lineno` is 1-based for error messages.
pub fn parse_record<T: DeserializeOwned>(
    line: &str,
    lineno: usize,
    required: &[&str],
) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Malformed {
        line: lineno,
        msg: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Malformed {
        line: lineno,
        msg: "record is not a JSON object".into(),
    })?;
    for field in required {
        if !obj.contains_key(*field) {
            return Err(Error::MissingField {
                field: (*field).to_string(),
                line: lineno,
            });
        }
    }
    serde_json::from_value(value).map_err(|e| Error::Malformed {
        line: lineno,
        msg: e.to_string(),
    })
}

/// Writes records as one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Internal(e.to_string()))?;
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Deserialize, Serialize, PartialEq)]
    struct Rec {
        id: String,
        n: i64,
    }

    #[test]
    fn round_trip_and_missing_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let recs = vec![
            Rec { id: "a".into(), n: 1 },
            Rec { id: "b".into(), n: 2 },
        ];
        write_jsonl(&path, &recs).unwrap();
        let back: Vec<Rec> = read_jsonl(&path, &["id", "n"]).unwrap();
        assert_eq!(back, recs);

        std::fs::write(&path, "{\"id\":\"a\",\"n\":1}\n{\"id\":\"b\"}\n").unwrap();
        let err = read_jsonl::<Rec>(&path, &["id", "n"]).unwrap_err();
        assert_eq!(err.to_string(), "missing field n at line 2");
    }

    #[test]
    fn malformed_line_names_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        std::fs::write(&path, "{\"id\":\"a\",\"n\":1}\nnot json\n").unwrap();
        let err = read_jsonl::<Rec>(&path, &["id", "n"]).unwrap_err();
        assert!(err.to_string().starts_with("malformed record at line 2"));
    }

    #[test]
    fn empty_file_is_empty_vec() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        std::fs::write(&path, "").unwrap();
        let recs: Vec<Rec> = read_jsonl(&path, &["id", "n"]).unwrap();
        assert!(recs.is_empty());
    }
}
