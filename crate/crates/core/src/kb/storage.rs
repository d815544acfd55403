//! Persistence backends.
//!
//! A backend keeps two things: an append-only log of external belief
//! operations, and an image of the last committed store. The log is the
//! source of truth; the image only saves a replay on startup.
//!
//! [`DirectoryBackend`] layout:
//!
//! ```text
//! <dir>/beliefs.ndjson   one LogRecord per line, appended
//! <dir>/snapshot.json    committed store image, replaced atomically
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::store::{BeliefStore, StoreImage};
use super::{Belief, BeliefId};
use crate::model::Timestamp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum LogRecord<P> {
    Assert { belief: Belief<P> },
    Retract { id: BeliefId, at: Timestamp },
}

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("storage I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt record in {path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub trait StorageBackend<P>: Send {
    fn read_log(&self) -> Result<Vec<LogRecord<P>>, StorageError>;

    fn append_log(&mut self, records: &[LogRecord<P>]) -> Result<(), StorageError>;

    fn load_snapshot(&self) -> Result<Option<BeliefStore<P>>, StorageError>;

    fn write_snapshot(&mut self, store: &BeliefStore<P>) -> Result<(), StorageError>;
}

/// Keeps the log in memory and never snapshots.
#[derive(Debug)]
pub struct MemoryBackend<P> {
    log: Vec<LogRecord<P>>,
}

impl<P> Default for MemoryBackend<P> {
    fn default() -> Self {
        Self { log: Vec::new() }
    }
}

impl<P: Clone + Send> StorageBackend<P> for MemoryBackend<P> {
    fn read_log(&self) -> Result<Vec<LogRecord<P>>, StorageError> {
        Ok(self.log.clone())
    }

    fn append_log(&mut self, records: &[LogRecord<P>]) -> Result<(), StorageError> {
        self.log.extend_from_slice(records);
        Ok(())
    }

    fn load_snapshot(&self) -> Result<Option<BeliefStore<P>>, StorageError> {
        Ok(None)
    }

    fn write_snapshot(&mut self, _store: &BeliefStore<P>) -> Result<(), StorageError> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DirectoryBackend {
    dir: PathBuf,
}

impl DirectoryBackend {
    pub const LOG_FILE: &'static str = "beliefs.ndjson";
    pub const SNAPSHOT_FILE: &'static str = "snapshot.json";

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join(Self::LOG_FILE)
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.dir.join(Self::SNAPSHOT_FILE)
    }
}

impl<P> StorageBackend<P> for DirectoryBackend
where
    P: Clone + Serialize + DeserializeOwned + Send,
{
    fn read_log(&self) -> Result<Vec<LogRecord<P>>, StorageError> {
        let path = self.log_path();
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(&path))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| StorageError::Corrupt {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push(rec);
        }
        Ok(out)
    }

    fn append_log(&mut self, records: &[LogRecord<P>]) -> Result<(), StorageError> {
        let path = self.log_path();
        let mut buf = Vec::new();
        for rec in records {
            serde_json::to_writer(&mut buf, rec).map_err(|e| StorageError::Serialize(e.to_string()))?;
            buf.push(b'\n');
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        file.write_all(&buf).map_err(io_err(&path))?;
        file.sync_data().map_err(io_err(&path))
    }

    fn load_snapshot(&self) -> Result<Option<BeliefStore<P>>, StorageError> {
        let path = self.snapshot_path();
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        match serde_json::from_slice::<StoreImage<P>>(&bytes) {
            Ok(image) => Ok(Some(BeliefStore::from_image(image))),
            Err(e) => {
                tracing::warn!(path = %path.display(), error = %e, "ignoring unreadable snapshot");
                Ok(None)
            }
        }
    }

    fn write_snapshot(&mut self, store: &BeliefStore<P>) -> Result<(), StorageError> {
        let path = self.snapshot_path();
        let tmp = self.dir.join(format!("{}.tmp", Self::SNAPSHOT_FILE));
        let bytes = serde_json::to_vec(&store.to_image()).map_err(|e| StorageError::Serialize(e.to_string()))?;
        {
            let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(&bytes).map_err(io_err(&tmp))?;
            f.sync_data().map_err(io_err(&tmp))?;
        }
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}
