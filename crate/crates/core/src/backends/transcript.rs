//! Record/replay transcripts.
//!
//! A transcript is a JSON-Lines file of `{key, endpoint, payload, response}`
//! records. The same key may appear several times: replay serves a key's
//! entries in file order and keeps repeating the last one once they run
//! out, which lets a fixture script a transient failure followed by a
//! recovery.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::cache::write_atomic;
use super::{BackendError, BackendRequest, Endpoint};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub key: String,
    pub endpoint: Endpoint,
    pub payload: String,
    pub response: String,
}

impl TranscriptEntry {
    pub fn for_request(request: &BackendRequest, response: impl Into<String>) -> Self {
        Self {
            key: request.digest(),
            endpoint: request.endpoint,
            payload: request.payload.clone(),
            response: response.into(),
        }
    }
}

#[derive(Debug, Default)]
struct State {
    entries: Vec<TranscriptEntry>,
    by_key: HashMap<String, Vec<usize>>,
    served: HashMap<String, usize>,
}

impl State {
    fn push(&mut self, entry: TranscriptEntry) {
        self.by_key
            .entry(entry.key.clone())
            .or_default()
            .push(self.entries.len());
        self.entries.push(entry);
    }
}

#[derive(Debug, Default)]
pub struct Transcript {
    path: Option<PathBuf>,
    state: Mutex<State>,
}

impl Transcript {
    /// An empty in-memory transcript.
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        let mut state = State::default();
        for e in entries {
            state.push(e);
        }
        Self {
            path: None,
            state: Mutex::new(state),
        }
    }

    /// Loads `path`; a missing file yields an empty transcript that will be
    /// created on the first recorded entry.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, BackendError> {
        let path = path.into();
        let mut state = State::default();
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                for (n, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let entry: TranscriptEntry = serde_json::from_str(line).map_err(|e| {
                        BackendError::Io(format!("{}:{}: {e}", path.display(), n + 1))
                    })?;
                    state.push(entry);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(BackendError::Io(format!("{}: {e}", path.display()))),
        }
        Ok(Self {
            path: Some(path),
            state: Mutex::new(state),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("transcript lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.state.lock().expect("transcript lock").entries.clone()
    }

    /// Next recorded response for `key`.
    pub fn next_response(&self, key: &str) -> Result<String, BackendError> {
        let mut state = self.state.lock().expect("transcript lock");
        let positions = state
            .by_key
            .get(key)
            .cloned()
            .ok_or_else(|| BackendError::TranscriptMiss(key.to_string()))?;
        let served = state.served.entry(key.to_string()).or_insert(0);
        let pick = positions[(*served).min(positions.len() - 1)];
        *served += 1;
        Ok(state.entries[pick].response.clone())
    }

    /// Rewinds every key to its first entry.
    pub fn rewind(&self) {
        self.state.lock().expect("transcript lock").served.clear();
    }

    /// Appends an entry and, for file-backed transcripts, atomically
    /// rewrites the file.
    pub fn record(&self, entry: TranscriptEntry) -> Result<(), BackendError> {
        let mut state = self.state.lock().expect("transcript lock");
        state.push(entry);
        if let Some(path) = &self.path {
            let mut body = String::new();
            for e in &state.entries {
                body.push_str(&serde_json::to_string(e).expect("entries serialize"));
                body.push('\n');
            }
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            std::fs::create_dir_all(&dir)
                .map_err(|e| BackendError::Io(format!("{}: {e}", dir.display())))?;
            write_atomic(&dir, path, body.as_bytes())?;
        }
        Ok(())
    }
}
