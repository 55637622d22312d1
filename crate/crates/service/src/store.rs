//! One JSON-lines file per session: the seed on the first line, then one
//! event per accepted mutation. Each append is synced before the mutation
//! is acknowledged, so a killed server loses nothing it has confirmed.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use policy_compass::elicitation::{Session, SessionEvent, SessionSeed};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("state directory {path} is not writable: {source}")]
    Unwritable { path: PathBuf, source: std::io::Error },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("session log {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

/// Session ids double as file names.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Store {
    /// Opens (creating if needed) a state directory and checks it accepts writes.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into().join("sessions");
        let unwritable = |source| StoreError::Unwritable { path: dir.clone(), source };
        fs::create_dir_all(&dir).map_err(unwritable)?;
        let probe = dir.join(".probe");
        File::create(&probe).and_then(|mut f| f.write_all(b"ok")).map_err(unwritable)?;
        fs::remove_file(&probe).map_err(unwritable)?;
        Ok(Self { dir })
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).exists()
    }

    pub fn create(&self, seed: &SessionSeed) -> Result<(), StoreError> {
        let path = self.path(&seed.id);
        let tmp = self.dir.join(format!(".{}.tmp", seed.id));
        let io = |source| StoreError::Io { path: path.clone(), source };
        let mut line = serde_json::to_vec(seed).expect("seed serializes");
        line.push(b'\n');
        let mut f = File::create(&tmp).map_err(io)?;
        f.write_all(&line).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }

    pub fn append(&self, id: &str, event: &SessionEvent) -> Result<(), StoreError> {
        let path = self.path(id);
        let io = |source| StoreError::Io { path: path.clone(), source };
        let mut line = serde_json::to_vec(event).expect("event serializes");
        line.push(b'\n');
        let mut f = OpenOptions::new().append(true).open(&path).map_err(io)?;
        f.write_all(&line).map_err(io)?;
        f.sync_data().map_err(io)
    }

    /// Replays every session log. Logs that cannot be replayed are returned
    /// as errors alongside the sessions that could.
    pub fn recover(&self) -> (Vec<Session>, Vec<StoreError>) {
        let mut sessions = Vec::new();
        let mut problems = Vec::new();
        let mut paths: Vec<PathBuf> = match fs::read_dir(&self.dir) {
            Ok(entries) => entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect(),
            Err(source) => return (sessions, vec![StoreError::Io { path: self.dir.clone(), source }]),
        };
        paths.sort();
        for path in paths {
            match load(&path) {
                Ok(s) => sessions.push(s),
                Err(e) => problems.push(e),
            }
        }
        (sessions, problems)
    }
}

fn load(path: &Path) -> Result<Session, StoreError> {
    let corrupt = |message: String| StoreError::Corrupt { path: path.to_path_buf(), message };
    let bytes = fs::read(path).map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
    let mut lines: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    // Whatever follows the last newline was never acknowledged.
    lines.pop();
    let mut lines = lines.into_iter().filter(|l| !l.is_empty());
    let seed: SessionSeed = match lines.next() {
        Some(l) => serde_json::from_slice(l).map_err(|e| corrupt(format!("seed: {e}")))?,
        None => return Err(corrupt("empty log".into())),
    };
    let events = lines
        .enumerate()
        .map(|(i, l)| serde_json::from_slice(l).map_err(|e| corrupt(format!("event {}: {e}", i + 1))))
        .collect::<Result<Vec<SessionEvent>, _>>()?;
    Session::replay(seed, events).map_err(|e| corrupt(e.to_string()))
}
