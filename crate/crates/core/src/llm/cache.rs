use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};

use super::{prompt_hash, LlmError, PromptKind, Result};

/// Identity of one cached LLM interaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey {
    pub key: String,
    pub sample_id: String,
    pub kind: PromptKind,
    pub prompt: String,
    pub model: String,
}

pub type CacheKind = PromptKind;

impl CacheKey {
    /// Key = SHA-256 over (sample id, SHA-256 of the rendered prompt, model id).
    pub fn new(sample_id: &str, kind: PromptKind, prompt: &str, model: &str) -> Self {
        let mut h = Sha256::new();
        h.update(sample_id.as_bytes());
        h.update([0]);
        h.update(prompt_hash(prompt).as_bytes());
        h.update([0]);
        h.update(model.as_bytes());
        Self {
            key: hex::encode(h.finalize()),
            sample_id: sample_id.to_string(),
            kind,
            prompt: prompt.to_string(),
            model: model.to_string(),
        }
    }
}

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub sample_id: String,
    pub kind: PromptKind,
    pub prompt: String,
    pub model: String,
    pub response: String,
    pub ts: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

struct State {
    entries: HashMap<String, String>,
    in_flight: HashSet<String>,
    writer: Option<BufWriter<File>>,
}

/// Response cache backed by an append-only JSONL file.
///
/// Later records for the same key win on reload. Writes are serialized
/// under one lock and flushed per record. At most one fetch per key is in
/// flight: concurrent callers for the same key wait for the first.
pub struct ResponseCache {
    path: Option<PathBuf>,
    state: Mutex<State>,
    done: Condvar,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::with_state(None, HashMap::new(), None)
    }

    /// Open (or create) a cache file and replay its records.
    pub fn open(path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| LlmError::Cache(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(r) => {
                        entries.insert(r.key, r.response);
                    }
                    // A torn final write from an interrupted run.
                    Err(e) => log::warn!("{}:{}: skipping unreadable cache record: {e}", path.display(), i + 1),
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        Ok(Self::with_state(
            Some(path.to_path_buf()),
            entries,
            Some(BufWriter::new(file)),
        ))
    }

    fn with_state(path: Option<PathBuf>, entries: HashMap<String, String>, writer: Option<BufWriter<File>>) -> Self {
        Self {
            path,
            state: Mutex::new(State {
                entries,
                in_flight: HashSet::new(),
                writer,
            }),
            done: Condvar::new(),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<String> {
        self.state.lock().unwrap().entries.get(&key.key).cloned()
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    /// Cached response for `key`, or the result of `fetch` (stored on success).
    pub fn get_or_fetch(&self, key: &CacheKey, fetch: impl FnOnce() -> Result<String>) -> Result<String> {
        let mut state = self.state.lock().unwrap();
        loop {
            if let Some(r) = state.entries.get(&key.key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(r.clone());
            }
            if !state.in_flight.contains(&key.key) {
                break;
            }
            state = self.done.wait(state).unwrap();
        }
        state.in_flight.insert(key.key.clone());
        self.misses.fetch_add(1, Ordering::Relaxed);
        drop(state);
        self.finish(key, fetch())
    }

    /// Fetch unconditionally and overwrite any cached response.
    pub fn refresh(&self, key: &CacheKey, fetch: impl FnOnce() -> Result<String>) -> Result<String> {
        let mut state = self.state.lock().unwrap();
        while state.in_flight.contains(&key.key) {
            state = self.done.wait(state).unwrap();
        }
        state.in_flight.insert(key.key.clone());
        self.misses.fetch_add(1, Ordering::Relaxed);
        drop(state);
        self.finish(key, fetch())
    }

    fn finish(&self, key: &CacheKey, result: Result<String>) -> Result<String> {
        let mut state = self.state.lock().unwrap();
        state.in_flight.remove(&key.key);
        let out = match result {
            Ok(response) => {
                let write = match state.writer.as_mut() {
                    Some(w) => append(w, key, &response),
                    None => Ok(()),
                };
                state.entries.insert(key.key.clone(), response.clone());
                write.map(|_| response)
            }
            Err(e) => Err(e),
        };
        drop(state);
        self.done.notify_all();
        out
    }
}

fn append(w: &mut BufWriter<File>, key: &CacheKey, response: &str) -> Result<()> {
    let record = CacheRecord {
        key: key.key.clone(),
        sample_id: key.sample_id.clone(),
        kind: key.kind,
        prompt: key.prompt.clone(),
        model: key.model.clone(),
        response: response.to_string(),
        ts: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    let io = |e: std::io::Error| LlmError::Cache(e.to_string());
    serde_json::to_writer(&mut *w, &record).map_err(|e| LlmError::Cache(e.to_string()))?;
    w.write_all(b"\n").map_err(io)?;
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;
    use std::sync::Arc;

    fn key(id: &str) -> CacheKey {
        CacheKey::new(id, PromptKind::Eval, "system: s\nuser: u", "m")
    }

    #[test]
    fn key_depends_on_all_parts() {
        let a = CacheKey::new("a", PromptKind::Eval, "p", "m");
        assert_ne!(a.key, CacheKey::new("b", PromptKind::Eval, "p", "m").key);
        assert_ne!(a.key, CacheKey::new("a", PromptKind::Eval, "q", "m").key);
        assert_ne!(a.key, CacheKey::new("a", PromptKind::Eval, "p", "n").key);
    }

    #[test]
    fn persists_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let c = ResponseCache::open(&path).unwrap();
            assert_eq!(c.get_or_fetch(&key("a"), || Ok("Yes".into())).unwrap(), "Yes");
            assert!(c
                .get_or_fetch(&key("b"), || Err(LlmError::Transport("down".into())))
                .is_err());
        }
        let c = ResponseCache::open(&path).unwrap();
        assert_eq!(c.len(), 1);
        let r = c.get_or_fetch(&key("a"), || panic!("should be cached")).unwrap();
        assert_eq!(r, "Yes");
        assert_eq!(c.stats(), CacheStats { hits: 1, misses: 0 });

        let line = std::fs::read_to_string(&path).unwrap();
        let rec: CacheRecord = serde_json::from_str(line.lines().next().unwrap()).unwrap();
        assert_eq!(rec.kind, PromptKind::Eval);
        assert_eq!(rec.sample_id, "a");
        assert_eq!(rec.model, "m");
    }

    #[test]
    fn refresh_overwrites_and_last_record_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let c = ResponseCache::open(&path).unwrap();
            c.get_or_fetch(&key("a"), || Ok("No".into())).unwrap();
            c.refresh(&key("a"), || Ok("Yes".into())).unwrap();
        }
        let c = ResponseCache::open(&path).unwrap();
        assert_eq!(c.get(&key("a")).unwrap(), "Yes");
    }

    #[test]
    fn torn_tail_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let c = ResponseCache::open(&path).unwrap();
            c.get_or_fetch(&key("a"), || Ok("No".into())).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"key\":\"trunc").unwrap();
        drop(f);
        assert_eq!(ResponseCache::open(&path).unwrap().len(), 1);
    }

    #[test]
    fn no_duplicate_fetch_in_flight() {
        let cache = Arc::new(ResponseCache::in_memory());
        let calls = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let cache = cache.clone();
                let calls = calls.clone();
                std::thread::spawn(move || {
                    cache
                        .get_or_fetch(&key("same"), || {
                            calls.fetch_add(1, Ordering::SeqCst);
                            std::thread::sleep(std::time::Duration::from_millis(20));
                            Ok("Yes".into())
                        })
                        .unwrap()
                })
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), "Yes");
        }
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }
}
