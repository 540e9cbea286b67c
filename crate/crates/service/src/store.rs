//! Append-only session logs, one JSON-lines file per session.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use thiserror::Error;
use uuid::Uuid;

use crate::session::{Record, Session};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        ManualClock(Mutex::new(start))
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.0.lock().expect("clock lock") = t;
    }

    pub fn advance(&self, by: chrono::Duration) {
        *self.0.lock().expect("clock lock") += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().expect("clock lock")
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("session log {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("session log {path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

/// A loaded session. Holding its lock serialises every operation on it.
pub type SessionHandle = Arc<tokio::sync::Mutex<Session>>;

pub struct Store {
    dir: PathBuf,
    clock: Arc<dyn Clock>,
    loaded: Mutex<HashMap<String, SessionHandle>>,
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Store {
            dir,
            clock,
            loaded: Mutex::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    /// Creates and persists an empty session.
    pub fn create(&self) -> Result<String, StoreError> {
        loop {
            let id = Uuid::new_v4().simple().to_string();
            let path = self.path(&id);
            // `create_new` makes a (vanishingly unlikely) id collision visible.
            let file = match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(f) => f,
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
                Err(source) => return Err(StoreError::Io { path, source }),
            };
            let created_at = self.now();
            write_record(file, &path, &Record::Created {
                id: id.clone(),
                created_at,
            })?;
            let session = Session::new(id.clone(), created_at);
            self.loaded
                .lock()
                .expect("store lock")
                .insert(id.clone(), Arc::new(tokio::sync::Mutex::new(session)));
            return Ok(id);
        }
    }

    /// The session with `id`, read from disk on first use.
    pub fn session(&self, id: &str) -> Result<SessionHandle, StoreError> {
        // Ids are generated here; anything else cannot name a log file.
        if Uuid::try_parse(id).is_err() || id.len() != 32 {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let mut loaded = self.loaded.lock().expect("store lock");
        if let Some(h) = loaded.get(id) {
            return Ok(h.clone());
        }
        let session = self.load(id)?;
        let handle = Arc::new(tokio::sync::Mutex::new(session));
        loaded.insert(id.to_string(), handle.clone());
        Ok(handle)
    }

    fn load(&self, id: &str) -> Result<Session, StoreError> {
        let path = self.path(id);
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.to_string())),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|source| StoreError::Io {
                path: path.clone(),
                source,
            })?;
        let corrupt = |line: usize, message: String| StoreError::Corrupt {
            path: path.clone(),
            line,
            message,
        };

        let mut session: Option<Session> = None;
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = match serde_json::from_str(line) {
                Ok(r) => r,
                // A torn final write from a crash: everything before it stands.
                Err(e) if i + 1 == lines.len() && i > 0 => {
                    tracing::warn!(path = %path.display(), error = %e, "ignoring incomplete last record");
                    break;
                }
                Err(e) => return Err(corrupt(i + 1, e.to_string())),
            };
            match (&mut session, record) {
                (None, Record::Created { id, created_at }) => session = Some(Session::new(id, created_at)),
                (None, _) => return Err(corrupt(i + 1, "log does not start with a creation record".into())),
                (Some(s), r) => s.apply(r).map_err(|m| corrupt(i + 1, m))?,
            }
        }
        session.ok_or_else(|| corrupt(1, "empty log".into()))
    }

    /// Persists `record`, then folds it into `session`. Nothing is applied
    /// in memory unless the write succeeded.
    pub fn append(&self, session: &mut Session, record: Record) -> Result<(), StoreError> {
        let path = self.path(&session.id);
        let mut probe = session.clone();
        probe.apply(record.clone()).map_err(|message| StoreError::Corrupt {
            path: path.clone(),
            line: 0,
            message,
        })?;
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|source| StoreError::Io {
                path: path.clone(),
                source,
            })?;
        write_record(file, &path, &record)?;
        *session = probe;
        Ok(())
    }

    /// Ids of every session on disk, sorted.
    pub fn ids(&self) -> Result<Vec<String>, StoreError> {
        let entries = fs::read_dir(&self.dir).map_err(|source| StoreError::Io {
            path: self.dir.clone(),
            source,
        })?;
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".jsonl").map(str::to_string))
            .collect();
        ids.sort();
        Ok(ids)
    }
}

fn write_record(mut file: File, path: &Path, record: &Record) -> Result<(), StoreError> {
    let mut line = serde_json::to_string(record).expect("records serialise");
    line.push('\n');
    // One write per record, then sync, so a crash leaves at most one torn line.
    file.write_all(line.as_bytes())
        .and_then(|_| file.sync_data())
        .map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })
}
