//! Append-only event log, one JSON record per line.
//!
//! Records carry a sequence number starting at 1 with no gaps. A final line
//! without its newline is the remainder of an interrupted write; it is
//! dropped on open and the file truncated to the last complete record.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord<E> {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub event: E,
}

#[derive(Debug)]
pub struct EventLog<E> {
    file: File,
    next_seq: u64,
    _event: PhantomData<fn(E)>,
}

impl<E: Serialize + DeserializeOwned> EventLog<E> {
    /// Parses complete log lines. Used for replay and by the fuzzer.
    pub fn parse(input: &str) -> Result<Vec<LogRecord<E>>> {
        let mut out = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            if line.is_empty() {
                return Err(Error::Log {
                    line: line_no,
                    reason: "empty line".into(),
                });
            }
            let rec: LogRecord<E> = serde_json::from_str(line).map_err(|e| Error::Log {
                line: line_no,
                reason: e.to_string(),
            })?;
            let expected = out.len() as u64 + 1;
            if rec.seq != expected {
                return Err(Error::Log {
                    line: line_no,
                    reason: format!("sequence {} where {expected} was expected", rec.seq),
                });
            }
            out.push(rec);
        }
        Ok(out)
    }

    /// Opens or creates the log and returns its records for replay.
    pub fn open(path: &Path) -> Result<(Self, Vec<LogRecord<E>>)> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)?;
        let mut raw = Vec::new();
        file.read_to_end(&mut raw)?;
        let complete = raw.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        if complete < raw.len() {
            file.set_len(complete as u64)?;
            file.seek(SeekFrom::End(0))?;
        }
        let text = std::str::from_utf8(&raw[..complete]).map_err(|e| Error::Log {
            line: 0,
            reason: e.to_string(),
        })?;
        let records = Self::parse(text)?;
        let next_seq = records.len() as u64 + 1;
        Ok((
            EventLog {
                file,
                next_seq,
                _event: PhantomData,
            },
            records,
        ))
    }

    /// Writes one record and syncs it to disk before returning its sequence
    /// number.
    pub fn append(&mut self, at: DateTime<Utc>, event: &E) -> Result<u64> {
        #[derive(Serialize)]
        struct Out<'a, E> {
            seq: u64,
            at: DateTime<Utc>,
            event: &'a E,
        }
        let seq = self.next_seq;
        let mut line = serde_json::to_vec(&Out { seq, at, event })?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.next_seq += 1;
        Ok(seq)
    }

    pub fn len(&self) -> u64 {
        self.next_seq - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> DateTime<Utc> {
        "2024-01-01T00:00:00Z".parse().unwrap()
    }

    #[test]
    fn append_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        {
            let (mut log, recs) = EventLog::<String>::open(&path).unwrap();
            assert!(recs.is_empty());
            assert_eq!(log.append(t(), &"a".to_string()).unwrap(), 1);
            assert_eq!(log.append(t(), &"b".to_string()).unwrap(), 2);
        }
        let (log, recs) = EventLog::<String>::open(&path).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(
            recs.iter().map(|r| r.event.as_str()).collect::<Vec<_>>(),
            ["a", "b"]
        );
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        std::fs::write(
            &path,
            "{\"seq\":1,\"at\":\"2024-01-01T00:00:00Z\",\"event\":\"a\"}\n{\"seq\":2,\"at",
        )
        .unwrap();
        let (mut log, recs) = EventLog::<String>::open(&path).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(log.append(t(), &"c".to_string()).unwrap(), 2);
        drop(log);
        let (_, recs) = EventLog::<String>::open(&path).unwrap();
        assert_eq!(recs[1].event, "c");
    }

    #[test]
    fn gap_is_reported_with_line() {
        let src = "{\"seq\":1,\"at\":\"2024-01-01T00:00:00Z\",\"event\":\"a\"}\n{\"seq\":3,\"at\":\"2024-01-01T00:00:00Z\",\"event\":\"b\"}\n";
        assert!(matches!(
            EventLog::<String>::parse(src),
            Err(Error::Log { line: 2, .. })
        ));
        assert!(matches!(
            EventLog::<String>::parse("nope\n"),
            Err(Error::Log { line: 1, .. })
        ));
    }
}
