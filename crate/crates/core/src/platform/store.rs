use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

use super::{Event, Platform};
use crate::corpusstore::EventLog;
use crate::error::{Error, Result};

pub const LOG_FILE: &str = "events.jsonl";

/// Platform state backed by its event log. The single writer applies each
/// event in memory first and logs it only when it applied cleanly. If the
/// log write then fails, the store refuses further writes.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    log: EventLog<Event>,
    state: Platform,
    poisoned: bool,
}

impl Store {
    /// Opens the store in `dir`, creating it if needed, and replays the log.
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let (log, records) = EventLog::<Event>::open(&dir.join(LOG_FILE))?;
        let mut state = Platform::new();
        for r in records {
            state.apply(&r.event, r.at).map_err(|e| Error::Log {
                line: r.seq as usize,
                reason: format!("replay failed: {e}"),
            })?;
        }
        Ok(Store {
            dir: dir.to_path_buf(),
            log,
            state,
            poisoned: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn state(&self) -> &Platform {
        &self.state
    }

    /// Applies and logs an event. Returns false when the event carried a
    /// request id that was already applied; nothing changes in that case.
    pub fn commit(&mut self, event: Event, at: DateTime<Utc>) -> Result<bool> {
        if self.poisoned {
            return Err(Error::State(
                "store is out of sync with its log; reopen it".into(),
            ));
        }
        if event
            .request_key()
            .is_some_and(|k| self.state.receipt(&k).is_some())
        {
            return Ok(false);
        }
        self.state.apply(&event, at)?;
        if let Err(e) = self.log.append(at, &event) {
            self.poisoned = true;
            return Err(e);
        }
        Ok(true)
    }
}
