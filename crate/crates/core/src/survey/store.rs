use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::bank::{ItemBank, SurveyItem};
use super::{Result, SurveyError};
use crate::rng::keyed_hash;
use crate::stats::{RatingRecord, RatingVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyConfig {
    pub batch_size: usize,
    /// Batches per participant; `None` for no limit.
    pub max_batches: Option<usize>,
    /// Tie-break seed for item selection.
    pub seed: u64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            batch_size: 20,
            max_batches: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub assignment_id: String,
    pub participant_id: String,
    pub items: Vec<(String, RatingVariant)>,
    pub issued_at: String,
    /// Derived on read; always false in the log.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub completed: bool,
}

/// One line of the survey log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Session {
        participant_id: String,
        ts: String,
    },
    Assignment(Assignment),
    Response {
        participant_id: String,
        item_id: String,
        variant: RatingVariant,
        rating: u8,
        ts: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Stored,
    /// Same rating submitted again; nothing changed.
    Duplicate,
}

#[derive(Default)]
struct Participant {
    /// item_id -> (variant, assignment index)
    assigned: HashMap<String, (RatingVariant, usize)>,
    answered: HashMap<String, u8>,
    assignments: Vec<Assignment>,
}

impl Participant {
    fn open_assignment(&self) -> Option<&Assignment> {
        self.assignments
            .last()
            .filter(|a| a.items.iter().any(|(id, _)| !self.answered.contains_key(id)))
    }
}

#[derive(Default)]
struct State {
    participants: HashMap<String, Participant>,
    /// (item_id, variant) -> responses so far
    answers: HashMap<(String, RatingVariant), usize>,
    /// (item_id, variant) -> assignments so far
    issued: HashMap<(String, RatingVariant), usize>,
    responses: Vec<RatingRecord>,
    assignment_count: usize,
}

impl State {
    fn apply(&mut self, event: &Event, bank: &ItemBank) -> std::result::Result<(), String> {
        match event {
            Event::Session { participant_id, .. } => {
                self.participants.entry(participant_id.clone()).or_default();
            }
            Event::Assignment(a) => {
                let p = self
                    .participants
                    .get_mut(&a.participant_id)
                    .ok_or_else(|| format!("assignment for unknown participant {:?}", a.participant_id))?;
                let index = p.assignments.len();
                for (item_id, variant) in &a.items {
                    if bank.get(item_id, *variant).is_none() {
                        return Err(format!("assignment references unknown item {item_id:?}"));
                    }
                    if p.assigned.insert(item_id.clone(), (*variant, index)).is_some() {
                        return Err(format!("item {item_id:?} assigned twice to {:?}", a.participant_id));
                    }
                    *self.issued.entry((item_id.clone(), *variant)).or_insert(0) += 1;
                }
                p.assignments.push(a.clone());
                self.assignment_count += 1;
            }
            Event::Response {
                participant_id,
                item_id,
                variant,
                rating,
                ts,
            } => {
                let p = self
                    .participants
                    .get_mut(participant_id)
                    .ok_or_else(|| format!("response from unknown participant {participant_id:?}"))?;
                match p.assigned.get(item_id) {
                    Some((v, _)) if v == variant => {}
                    _ => return Err(format!("response to unassigned item {item_id:?}")),
                }
                if p.answered.insert(item_id.clone(), *rating).is_some() {
                    return Err(format!("second response to {item_id:?}"));
                }
                *self.answers.entry((item_id.clone(), *variant)).or_insert(0) += 1;
                let item = bank.get(item_id, *variant).expect("checked at assignment");
                self.responses.push(RatingRecord {
                    participant_id: participant_id.clone(),
                    item_id: item_id.clone(),
                    variant: *variant,
                    emotion: item.emotion.clone(),
                    rating: *rating,
                    timestamp: ts.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Survey state backed by `events.jsonl` in a directory. Every mutation is
/// written and flushed to the log before it takes effect, under one lock.
pub struct Survey {
    dir: PathBuf,
    bank: ItemBank,
    config: SurveyConfig,
    inner: Mutex<(State, File)>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn read_events(path: &Path) -> Result<Vec<Event>> {
    let mut events = Vec::new();
    if !path.exists() {
        return Ok(events);
    }
    let file = File::open(path).map_err(|source| SurveyError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|source| SurveyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    let last = lines.len();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(e) => events.push(e),
            // Only the final line can be torn by a crash mid-write.
            Err(e) if i + 1 == last => log::warn!("{}:{}: dropping torn event: {e}", path.display(), i + 1),
            Err(e) => {
                return Err(SurveyError::Log {
                    path: path.to_path_buf(),
                    message: format!("line {}: {e}", i + 1),
                })
            }
        }
    }
    Ok(events)
}

/// Replay a log against a bank and check every invariant: no participant
/// holds two variants (or two copies) of an item, and every response has a
/// prior assignment. Returns the number of events checked.
pub fn audit_log(path: &Path, bank: &ItemBank) -> Result<usize> {
    let events = read_events(path)?;
    let mut state = State::default();
    for (i, e) in events.iter().enumerate() {
        state.apply(e, bank).map_err(|message| SurveyError::Log {
            path: path.to_path_buf(),
            message: format!("event {}: {message}", i + 1),
        })?;
    }
    Ok(events.len())
}

impl Survey {
    /// Open or create a survey directory. The bank is stored as `bank.json`
    /// on first use and must match on every later open.
    pub fn open(dir: &Path, bank: ItemBank, config: SurveyConfig) -> Result<Self> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| SurveyError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let bank_path = dir.join("bank.json");
        let bank_json = serde_json::to_string_pretty(&bank).expect("bank serializes") + "\n";
        if bank_path.exists() {
            let stored = std::fs::read_to_string(&bank_path).map_err(io(&bank_path))?;
            if stored != bank_json {
                return Err(SurveyError::BankMismatch);
            }
        } else {
            std::fs::write(&bank_path, &bank_json).map_err(io(&bank_path))?;
        }
        let log_path = dir.join("events.jsonl");
        let mut state = State::default();
        for (i, e) in read_events(&log_path)?.iter().enumerate() {
            state.apply(e, &bank).map_err(|message| SurveyError::Log {
                path: log_path.clone(),
                message: format!("event {}: {message}", i + 1),
            })?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(io(&log_path))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            bank,
            config,
            inner: Mutex::new((state, file)),
        })
    }

    pub fn bank(&self) -> &ItemBank {
        &self.bank
    }

    pub fn config(&self) -> &SurveyConfig {
        &self.config
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join("events.jsonl")
    }

    fn commit(&self, state: &mut State, file: &mut File, event: Event) -> Result<()> {
        let mut line = serde_json::to_string(&event).expect("event serializes");
        line.push('\n');
        let path = self.log_path();
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .and_then(|_| file.sync_data())
            .map_err(|source| SurveyError::Io {
                path: path.clone(),
                source,
            })?;
        state
            .apply(&event, &self.bank)
            .map_err(|message| SurveyError::Log { path, message })
    }

    /// Issue a fresh opaque participant id.
    pub fn create_session(&self) -> Result<String> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.register(&id)?;
        Ok(id)
    }

    /// Register a participant under a caller-chosen id.
    pub fn register(&self, participant_id: &str) -> Result<()> {
        let mut guard = self.inner.lock().unwrap();
        let (state, file) = &mut *guard;
        if state.participants.contains_key(participant_id) {
            return Ok(());
        }
        self.commit(
            state,
            file,
            Event::Session {
                participant_id: participant_id.to_string(),
                ts: now(),
            },
        )
    }

    /// The participant's unfinished batch, or a new one of least-answered
    /// items. A participant never sees both variants of an item.
    pub fn next_batch(&self, participant_id: &str) -> Result<Assignment> {
        let mut guard = self.inner.lock().unwrap();
        let (state, file) = &mut *guard;
        let p = state
            .participants
            .get(participant_id)
            .ok_or_else(|| SurveyError::UnknownParticipant(participant_id.to_string()))?;
        if let Some(open) = p.open_assignment() {
            return Ok(open.clone());
        }
        if let Some(cap) = self.config.max_batches {
            if p.assignments.len() >= cap {
                return Err(SurveyError::BatchLimit(cap));
            }
        }
        let seed = self.config.seed;
        let mut item_issued: HashMap<&str, usize> = HashMap::new();
        for ((id, _), n) in &state.issued {
            *item_issued.entry(id.as_str()).or_insert(0) += n;
        }
        // Least-answered variant first, then the least-used item id, so
        // unanswered variants stay spread over as many ids as possible.
        let key = |item: &SurveyItem| {
            let k = (item.item_id.clone(), item.variant);
            (
                state.answers.get(&k).copied().unwrap_or(0),
                item_issued.get(item.item_id.as_str()).copied().unwrap_or(0),
                state.issued.get(&k).copied().unwrap_or(0),
                keyed_hash(
                    seed,
                    &format!("{participant_id}\u{1f}{}\u{1f}{}", item.item_id, item.variant),
                ),
            )
        };
        // best variant per eligible item id
        let mut best: HashMap<&str, (&SurveyItem, (usize, usize, usize, u64))> = HashMap::new();
        for item in &self.bank.items {
            if p.assigned.contains_key(&item.item_id) {
                continue;
            }
            let k = key(item);
            match best.get(item.item_id.as_str()) {
                Some((_, bk)) if *bk <= k => {}
                _ => {
                    best.insert(&item.item_id, (item, k));
                }
            }
        }
        let needed = self.config.batch_size;
        if best.len() < needed {
            return Err(SurveyError::InsufficientItems {
                available: best.len(),
                needed,
            });
        }
        let mut ranked: Vec<_> = best.into_values().collect();
        ranked.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.item_id.cmp(&b.0.item_id)));
        let items: Vec<(String, RatingVariant)> = ranked[..needed]
            .iter()
            .map(|(i, _)| (i.item_id.clone(), i.variant))
            .collect();
        let assignment = Assignment {
            assignment_id: format!("a{:06}", state.assignment_count + 1),
            participant_id: participant_id.to_string(),
            items,
            issued_at: now(),
            completed: false,
        };
        self.commit(state, file, Event::Assignment(assignment.clone()))?;
        Ok(assignment)
    }

    pub fn submit_response(&self, participant_id: &str, item_id: &str, rating: i64) -> Result<ResponseStatus> {
        if !(1..=5).contains(&rating) {
            return Err(SurveyError::RatingRange(rating));
        }
        let rating = rating as u8;
        let mut guard = self.inner.lock().unwrap();
        let (state, file) = &mut *guard;
        let p = state
            .participants
            .get(participant_id)
            .ok_or_else(|| SurveyError::UnknownParticipant(participant_id.to_string()))?;
        let (variant, _) = *p
            .assigned
            .get(item_id)
            .ok_or_else(|| SurveyError::NotAssigned(item_id.to_string()))?;
        if let Some(&existing) = p.answered.get(item_id) {
            return if existing == rating {
                Ok(ResponseStatus::Duplicate)
            } else {
                Err(SurveyError::Conflict {
                    item_id: item_id.to_string(),
                    existing,
                })
            };
        }
        self.commit(
            state,
            file,
            Event::Response {
                participant_id: participant_id.to_string(),
                item_id: item_id.to_string(),
                variant,
                rating,
                ts: now(),
            },
        )?;
        Ok(ResponseStatus::Stored)
    }

    /// Stored ratings in log order.
    pub fn export_records(&self) -> Vec<RatingRecord> {
        self.inner.lock().unwrap().0.responses.clone()
    }

    pub fn item(&self, item_id: &str, variant: RatingVariant) -> Option<&SurveyItem> {
        self.bank.get(item_id, variant)
    }

    /// Every batch issued to a participant, with completion filled in.
    pub fn assignments(&self, participant_id: &str) -> Result<Vec<Assignment>> {
        let guard = self.inner.lock().unwrap();
        let p = guard
            .0
            .participants
            .get(participant_id)
            .ok_or_else(|| SurveyError::UnknownParticipant(participant_id.to_string()))?;
        Ok(p.assignments
            .iter()
            .map(|a| Assignment {
                completed: a.items.iter().all(|(id, _)| p.answered.contains_key(id)),
                ..a.clone()
            })
            .collect())
    }

    pub fn participant_count(&self) -> usize {
        self.inner.lock().unwrap().0.participants.len()
    }

    /// Re-scan the log on disk for the between-subjects invariants.
    pub fn audit(&self) -> Result<usize> {
        let _guard = self.inner.lock().unwrap();
        audit_log(&self.log_path(), &self.bank)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Sample, Split};
    use crate::stats::GroupSpec;
    use crate::survey::create_survey;
    use crate::EmotionTaxonomy;

    fn bank(n: usize) -> ItemBank {
        let tax = EmotionTaxonomy::goemotions();
        let emotions = ["admiration", "love", "anger"];
        let mk = |suffix: &str| -> Vec<Sample> {
            (0..n)
                .map(|i| {
                    Sample::with_label_names(
                        format!("s{i:03}"),
                        format!("Post {i}.{suffix}"),
                        &[emotions[i % 3]],
                        Split::Train,
                        &tax,
                    )
                    .unwrap()
                })
                .collect()
        };
        create_survey(&mk(""), &mk(" Context."), &tax, &GroupSpec::default()).unwrap()
    }

    fn open(dir: &Path, n: usize) -> Survey {
        Survey::open(dir, bank(n), SurveyConfig::default()).unwrap()
    }

    #[test]
    fn batches_never_mix_versions() {
        let dir = tempfile::tempdir().unwrap();
        let s = open(dir.path(), 60);
        s.register("p").unwrap();
        let mut seen: HashMap<String, RatingVariant> = HashMap::new();
        for _ in 0..3 {
            let a = s.next_batch("p").unwrap();
            assert_eq!(a.items.len(), 20);
            for (id, v) in &a.items {
                assert!(seen.insert(id.clone(), *v).is_none(), "{id} twice");
                s.submit_response("p", id, 3).unwrap();
            }
        }
        assert!(matches!(
            s.next_batch("p"),
            Err(SurveyError::InsufficientItems { available: 0, .. })
        ));
        assert_eq!(s.audit().unwrap(), 1 + 3 + 60);
    }

    #[test]
    fn batch_mixes_variants_and_balances_coverage() {
        let dir = tempfile::tempdir().unwrap();
        let s = open(dir.path(), 40);
        let mut counts: HashMap<(String, RatingVariant), usize> = HashMap::new();
        for i in 0..8 {
            let p = format!("p{i}");
            s.register(&p).unwrap();
            let a = s.next_batch(&p).unwrap();
            let cam = a.items.iter().filter(|(_, v)| *v == RatingVariant::Cam).count();
            assert!(cam > 0 && cam < 20, "batch {i} is all one variant");
            for (id, v) in &a.items {
                *counts.entry((id.clone(), *v)).or_insert(0) += 1;
                s.submit_response(&p, id, 4).unwrap();
            }
        }
        // 160 answers over 80 (item, variant) pairs
        assert_eq!(counts.len(), 80);
        let (lo, hi) = (counts.values().min().unwrap(), counts.values().max().unwrap());
        assert!(hi - lo <= 1, "{counts:?}");
    }

    #[test]
    fn open_batch_is_reissued() {
        let dir = tempfile::tempdir().unwrap();
        let s = open(dir.path(), 30);
        let p = s.create_session().unwrap();
        let a = s.next_batch(&p).unwrap();
        assert_eq!(s.next_batch(&p).unwrap(), a);
        for (id, _) in &a.items {
            s.submit_response(&p, id, 5).unwrap();
        }
        assert!(s.assignments(&p).unwrap()[0].completed);
    }

    #[test]
    fn response_rules() {
        let dir = tempfile::tempdir().unwrap();
        let s = open(dir.path(), 30);
        s.register("p").unwrap();
        let a = s.next_batch("p").unwrap();
        let id = &a.items[0].0;
        assert!(matches!(
            s.submit_response("p", id, 6),
            Err(SurveyError::RatingRange(6))
        ));
        assert_eq!(s.submit_response("p", id, 3).unwrap(), ResponseStatus::Stored);
        assert_eq!(s.submit_response("p", id, 3).unwrap(), ResponseStatus::Duplicate);
        assert!(matches!(
            s.submit_response("p", id, 5),
            Err(SurveyError::Conflict { existing: 3, .. })
        ));
        assert!(matches!(
            s.submit_response("p", "nope#love", 3),
            Err(SurveyError::NotAssigned(_))
        ));
        assert!(matches!(
            s.submit_response("q", id, 3),
            Err(SurveyError::UnknownParticipant(_))
        ));
        let records = s.export_records();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].rating, 3);
        assert_eq!(records[0].emotion, s.item(id, a.items[0].1).unwrap().emotion);
    }

    #[test]
    fn small_bank_cannot_fill_a_batch() {
        let dir = tempfile::tempdir().unwrap();
        let s = open(dir.path(), 19);
        s.register("p").unwrap();
        assert!(matches!(
            s.next_batch("p"),
            Err(SurveyError::InsufficientItems {
                available: 19,
                needed: 20
            })
        ));
    }

    #[test]
    fn restart_replays_log() {
        let dir = tempfile::tempdir().unwrap();
        let (a, export) = {
            let s = open(dir.path(), 30);
            s.register("p").unwrap();
            let a = s.next_batch("p").unwrap();
            for (id, _) in &a.items[..5] {
                s.submit_response("p", id, 2).unwrap();
            }
            (a, s.export_records())
        };
        let s = open(dir.path(), 30);
        assert_eq!(s.next_batch("p").unwrap(), a);
        assert_eq!(s.export_records(), export);
        assert!(matches!(
            Survey::open(dir.path(), bank(31), SurveyConfig::default()),
            Err(SurveyError::BankMismatch)
        ));
    }

    #[test]
    fn torn_final_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        {
            let s = open(dir.path(), 30);
            s.register("p").unwrap();
        }
        let mut f = OpenOptions::new()
            .append(true)
            .open(dir.path().join("events.jsonl"))
            .unwrap();
        f.write_all(b"{\"type\":\"sess").unwrap();
        let s = open(dir.path(), 30);
        assert_eq!(s.participant_count(), 1);
    }

    #[test]
    fn batch_limit() {
        let dir = tempfile::tempdir().unwrap();
        let s = Survey::open(
            dir.path(),
            bank(60),
            SurveyConfig {
                max_batches: Some(1),
                ..SurveyConfig::default()
            },
        )
        .unwrap();
        s.register("p").unwrap();
        for (id, _) in s.next_batch("p").unwrap().items {
            s.submit_response("p", &id, 1).unwrap();
        }
        assert!(matches!(s.next_batch("p"), Err(SurveyError::BatchLimit(1))));
    }

    #[test]
    fn concurrent_requests_share_one_batch() {
        let dir = tempfile::tempdir().unwrap();
        let s = open(dir.path(), 60);
        s.register("p").unwrap();
        let batches: Vec<Assignment> = std::thread::scope(|scope| {
            let hs: Vec<_> = (0..8).map(|_| scope.spawn(|| s.next_batch("p").unwrap())).collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(batches.windows(2).all(|w| w[0] == w[1]));
        s.audit().unwrap();
    }

    #[test]
    fn audit_catches_both_versions() {
        let dir = tempfile::tempdir().unwrap();
        let b = bank(30);
        let path = dir.path().join("events.jsonl");
        let id = b.items[0].item_id.clone();
        let events = [
            Event::Session {
                participant_id: "p".into(),
                ts: now(),
            },
            Event::Assignment(Assignment {
                assignment_id: "a1".into(),
                participant_id: "p".into(),
                items: vec![(id.clone(), RatingVariant::Ca)],
                issued_at: now(),
                completed: false,
            }),
            Event::Assignment(Assignment {
                assignment_id: "a2".into(),
                participant_id: "p".into(),
                items: vec![(id, RatingVariant::Cam)],
                issued_at: now(),
                completed: false,
            }),
        ];
        let text: String = events
            .iter()
            .map(|e| serde_json::to_string(e).unwrap() + "\n")
            .collect();
        std::fs::write(&path, text).unwrap();
        assert!(audit_log(&path, &b).is_err());
    }
}
