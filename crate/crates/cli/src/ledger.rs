//! Append-only JSON-lines results ledger.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

static APPEND_LOCK: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultRecord {
    pub command: String,
    pub config_hash: String,
    pub timestamp: String,
    /// Set when an earlier record carries the same hash.
    pub duplicate: bool,
    pub results: Map<String, Value>,
    pub artifacts: Vec<String>,
}

/// SHA-256 over the command name and a canonical rendering of its inputs.
pub fn config_hash(command: &str, canonical: &str) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(canonical.as_bytes());
    format!("{:x}", h.finalize())
}

pub struct Ledger {
    path: PathBuf,
}

impl Ledger {
    pub fn new(path: impl AsRef<Path>) -> Self {
        Self {
            path: path.as_ref().to_path_buf(),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> std::io::Result<Vec<ResultRecord>> {
        let file = match std::fs::File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        BufReader::new(file)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| {
                let l = l?;
                serde_json::from_str(&l)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
            })
            .collect()
    }

    /// Appends one record as a single write, flagging duplicates of earlier hashes.
    pub fn append(
        &self,
        command: &str,
        config_hash: String,
        results: Map<String, Value>,
        artifacts: Vec<String>,
    ) -> std::io::Result<ResultRecord> {
        let _guard = APPEND_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let duplicate = self.records()?.iter().any(|r| r.config_hash == config_hash);
        let record = ResultRecord {
            command: command.to_string(),
            config_hash,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            duplicate,
            results,
            artifacts,
        };
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        Ok(record)
    }
}
