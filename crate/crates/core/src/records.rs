//! Line-delimited JSON files: event streams, label side-files, detection output.
//!
//! Stream line: the [`EtlEvent`] fields plus `event_id`, and optionally `label`
//! and `anomaly_class`. Lines that fail to parse are kept as [`ErrorRecord`]s so
//! that downstream stages can report them in order instead of aborting.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::EtlEvent;
use crate::streamgen::{AnomalyClass, LabeledEvent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamLine {
    pub event_id: u64,
    #[serde(flatten)]
    pub event: EtlEvent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly_class: Option<AnomalyClass>,
}

impl StreamLine {
    pub fn labeled(e: &LabeledEvent) -> Self {
        StreamLine {
            event_id: e.event_id,
            event: e.event.clone(),
            label: Some(e.label),
            anomaly_class: e.anomaly_class,
        }
    }

    pub fn blind(e: &LabeledEvent) -> Self {
        StreamLine {
            event_id: e.event_id,
            event: e.event.clone(),
            label: None,
            anomaly_class: None,
        }
    }
}

/// Entry of a `--holdout` label side-file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelLine {
    pub event_id: u64,
    pub label: bool,
    pub anomaly_class: Option<AnomalyClass>,
}

/// A record that could not be parsed or encoded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub event_id: u64,
    pub error: String,
}

/// Reads a stream file. Unparsable lines become errors; blank lines are skipped.
///
/// An unparsable line keeps its own `event_id` when one can be recovered,
/// otherwise it gets its 0-based line number.
pub fn read_stream(path: &Path) -> Result<Vec<std::result::Result<StreamLine, ErrorRecord>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str::<StreamLine>(&line).map_err(|e| {
            let event_id = serde_json::from_str::<serde_json::Value>(&line)
                .ok()
                .and_then(|v| v.get("event_id").and_then(|id| id.as_u64()))
                .unwrap_or(line_no as u64);
            ErrorRecord {
                event_id,
                error: format!("line {}: {e}", line_no + 1),
            }
        }));
    }
    Ok(out)
}

/// Reads a stream file and fails on the first bad line.
pub fn read_stream_strict(path: &Path) -> Result<Vec<StreamLine>> {
    read_stream(path)?
        .into_iter()
        .map(|r| {
            r.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.error,
            })
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<HashMap<u64, LabelLine>> {
    read_jsonl::<LabelLine>(path)?
        .into_iter()
        .map(|l| Ok((l.event_id, l)))
        .collect()
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streamgen::{generate, StreamConfig};

    #[test]
    fn stream_lines_round_trip() {
        let cfg = StreamConfig {
            n_events: 200,
            anomaly_rate: 0.2,
            ..StreamConfig::default()
        };
        let events = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        write_jsonl(&path, events.iter().map(StreamLine::labeled)).unwrap();
        let back = read_stream_strict(&path).unwrap();
        assert_eq!(back.len(), 200);
        for (a, b) in events.iter().zip(&back) {
            assert_eq!(&a.event, &b.event);
            assert_eq!(Some(a.label), b.label);
            assert_eq!(a.anomaly_class, b.anomaly_class);
        }
    }

    #[test]
    fn blind_lines_omit_labels() {
        let cfg = StreamConfig {
            n_events: 3,
            ..StreamConfig::default()
        };
        let e = &generate(&cfg).unwrap()[0];
        let text = serde_json::to_string(&StreamLine::blind(e)).unwrap();
        assert!(
            !text.contains("label") && !text.contains("anomaly_class"),
            "{text}"
        );
        assert!(text.contains("\"event_id\":0"));
    }

    #[test]
    fn bad_lines_become_error_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let cfg = StreamConfig {
            n_events: 2,
            ..StreamConfig::default()
        };
        let events = generate(&cfg).unwrap();
        let good = serde_json::to_string(&StreamLine::labeled(&events[0])).unwrap();
        let text = format!("{good}\n{{\"event_id\": 41, \"amount\": \"lots\"}}\nnot json\n\n");
        std::fs::write(&path, text).unwrap();
        let r = read_stream(&path).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r[0].is_ok());
        assert_eq!(r[1].as_ref().unwrap_err().event_id, 41);
        assert_eq!(r[2].as_ref().unwrap_err().event_id, 2);
        assert!(read_stream_strict(&path).is_err());
    }
}
