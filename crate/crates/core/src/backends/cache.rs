//! Content-addressed response cache.
//!
//! Layout: `<dir>/<key[0..2]>/<key[2..4]>/<key>.json`. Writes go to a temp
//! file in the target directory and are renamed into place, so readers see
//! either the old entry, the new one, or nothing.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::BackendError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub response: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

impl CacheEntry {
    pub fn now(key: impl Into<String>, response: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            response: response.into(),
            created_at: unix_now(),
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
    ttl: Option<Duration>,
}

impl Cache {
    /// `ttl = None` keeps entries forever.
    pub fn new(dir: impl Into<PathBuf>, ttl: Option<Duration>) -> Self {
        Self {
            dir: dir.into(),
            ttl,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        let a = key.get(0..2).unwrap_or("__");
        let b = key.get(2..4).unwrap_or("__");
        self.dir.join(a).join(b).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>, BackendError> {
        let path = self.path_for(key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(BackendError::Io(format!("{}: {e}", path.display()))),
        };
        let entry: CacheEntry = match serde_json::from_slice(&bytes) {
            Ok(e) => e,
            Err(e) => {
                tracing::warn!("ignoring unreadable cache file {}: {e}", path.display());
                return Ok(None);
            }
        };
        if entry.key != key {
            return Ok(None);
        }
        if let Some(ttl) = self.ttl {
            if unix_now().saturating_sub(entry.created_at) > ttl.as_secs() {
                return Ok(None);
            }
        }
        Ok(Some(entry))
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<(), BackendError> {
        let path = self.path_for(&entry.key);
        let parent = path.parent().expect("cache paths always have a parent");
        std::fs::create_dir_all(parent)
            .map_err(|e| BackendError::Io(format!("{}: {e}", parent.display())))?;
        let body = serde_json::to_vec(entry).expect("cache entries always serialize");
        write_atomic(parent, &path, &body)
    }
}

/// Writes `body` to `path` via a temp file in `dir` and a rename.
pub(crate) fn write_atomic(dir: &Path, path: &Path, body: &[u8]) -> Result<(), BackendError> {
    let io = |e: std::io::Error| BackendError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(body).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
