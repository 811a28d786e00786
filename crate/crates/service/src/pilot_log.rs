//! Append-only log of verified answers.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spatial_captcha::difficulty::PilotRecord;

pub const PILOT_LOG_FILE: &str = "pilot.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedRecord {
    /// Unix seconds at verification.
    pub at: f64,
    #[serde(flatten)]
    pub record: PilotRecord,
}

struct Inner {
    rows: Vec<LoggedRecord>,
    file: Option<BufWriter<File>>,
}

pub struct PilotLog {
    inner: Mutex<Inner>,
    path: Option<PathBuf>,
}

/// Salted, truncated SHA-256 of a client-supplied respondent id.
pub fn respondent_hash(salt: &str, respondent: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update([0u8]);
    h.update(respondent.as_bytes());
    hex::encode(&h.finalize()[..8])
}

impl PilotLog {
    pub fn in_memory() -> Self {
        Self {
            inner: Mutex::new(Inner {
                rows: Vec::new(),
                file: None,
            }),
            path: None,
        }
    }

    /// Open `dir/pilot.jsonl`, loading any earlier rows.
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(PILOT_LOG_FILE);
        let mut rows = Vec::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let row = serde_json::from_str(&line).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
                rows.push(row);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            inner: Mutex::new(Inner {
                rows,
                file: Some(BufWriter::new(file)),
            }),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn append(&self, row: LoggedRecord) -> std::io::Result<()> {
        let mut inner = self.inner.lock().expect("pilot lock");
        if let Some(f) = inner.file.as_mut() {
            serde_json::to_writer(&mut *f, &row)?;
            f.write_all(b"\n")?;
            f.flush()?;
        }
        inner.rows.push(row);
        Ok(())
    }

    pub fn flush(&self) -> std::io::Result<()> {
        match self.inner.lock().expect("pilot lock").file.as_mut() {
            Some(f) => f.flush(),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("pilot lock").rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records verified at or after `since`.
    pub fn since(&self, since: f64) -> Vec<PilotRecord> {
        let inner = self.inner.lock().expect("pilot lock");
        inner.rows.iter().filter(|r| r.at >= since).map(|r| r.record.clone()).collect()
    }

    pub fn rows(&self) -> Vec<LoggedRecord> {
        self.inner.lock().expect("pilot lock").rows.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(at: f64, id: &str) -> LoggedRecord {
        LoggedRecord {
            at,
            record: PilotRecord {
                instance_id: id.into(),
                respondent_id: "r".into(),
                response_time_s: 2.5,
                correct: true,
            },
        }
    }

    #[test]
    fn reopens_with_earlier_rows() {
        let dir = tempfile::tempdir().unwrap();
        let log = PilotLog::open(dir.path()).unwrap();
        log.append(row(10.0, "a")).unwrap();
        log.append(row(20.0, "b")).unwrap();
        drop(log);
        let again = PilotLog::open(dir.path()).unwrap();
        assert_eq!(again.len(), 2);
        assert_eq!(again.since(15.0).len(), 1);
        assert!(again.since(99.0).is_empty());
    }

    #[test]
    fn respondent_hash_depends_on_salt() {
        assert_eq!(respondent_hash("s", "alice"), respondent_hash("s", "alice"));
        assert_ne!(respondent_hash("s", "alice"), respondent_hash("t", "alice"));
        assert_eq!(respondent_hash("s", "alice").len(), 16);
    }
}
