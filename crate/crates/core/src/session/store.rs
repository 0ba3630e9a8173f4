use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};

use super::SessionRecord;

/// Append-only JSONL log of session snapshots. The latest line per id wins on
/// replay. Only completions are fsynced.
#[derive(Debug)]
pub struct SessionStore {
    path: Option<PathBuf>,
    file: Option<BufWriter<File>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore { path: None, file: None }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| LabError::Persistence(format!("{}: {e}", path.display())))?;
        let mut file = BufWriter::new(file);
        // Terminate a torn last line so later appends start clean.
        let text = std::fs::read(&path).map_err(|e| LabError::Persistence(e.to_string()))?;
        if text.last().is_some_and(|&b| b != b'\n') {
            file.write_all(b"\n").and_then(|_| file.flush()).map_err(|e| LabError::Persistence(e.to_string()))?;
        }
        Ok(SessionStore { path: Some(path), file: Some(file) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Every session in the log, latest snapshot each, in first-seen order.
    pub fn replay(&self) -> Result<Vec<SessionRecord>> {
        let Some(path) = &self.path else { return Ok(Vec::new()) };
        let reader = BufReader::new(File::open(path).map_err(|e| LabError::Persistence(e.to_string()))?);
        let mut order = Vec::new();
        let mut latest: HashMap<String, SessionRecord> = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| LabError::Persistence(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SessionRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    // A torn final line from a crash mid-write.
                    log::warn!("skipping unreadable store line {}: {e}", n + 1);
                    continue;
                }
            };
            if !latest.contains_key(&rec.session_id) {
                order.push(rec.session_id.clone());
            }
            latest.insert(rec.session_id.clone(), rec);
        }
        Ok(order.into_iter().filter_map(|id| latest.remove(&id)).collect())
    }

    pub fn append(&mut self, record: &SessionRecord, durable: bool) -> Result<()> {
        let Some(file) = self.file.as_mut() else { return Ok(()) };
        let io = |e: std::io::Error| LabError::Persistence(e.to_string());
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        file.write_all(&line).map_err(io)?;
        file.flush().map_err(io)?;
        if durable {
            file.get_ref().sync_data().map_err(io)?;
        }
        Ok(())
    }
}
