use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Manifest, StoreError};
use crate::ingest::SnippetRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelState {
    Proposed,
    Accepted,
    Rejected,
}

impl std::fmt::Display for LabelState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LabelState::Proposed => "proposed",
            LabelState::Accepted => "accepted",
            LabelState::Rejected => "rejected",
        })
    }
}

impl std::str::FromStr for LabelState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(LabelState::Proposed),
            "accepted" => Ok(LabelState::Accepted),
            "rejected" => Ok(LabelState::Rejected),
            other => Err(format!("unknown label state {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    MatchedFilter,
    Human,
    Import,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub clip_id: String,
    pub snippet_index: u32,
    pub class: String,
    pub state: LabelState,
    pub provenance: Provenance,
    pub annotator: String,
    pub timestamp: String,
}

impl LabelRecord {
    pub fn snippet_ref(&self) -> SnippetRef {
        SnippetRef::new(self.clip_id.clone(), self.snippet_index)
    }

    fn key(&self) -> (SnippetRef, String) {
        (self.snippet_ref(), self.class.clone())
    }
}

/// Current UTC time as RFC 3339 / ISO-8601 with second precision.
pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Upsert {
    /// A new log entry was appended.
    Created(LabelRecord),
    /// The label already had this state; nothing was written.
    Unchanged(LabelRecord),
}

impl Upsert {
    pub fn record(&self) -> &LabelRecord {
        match self {
            Upsert::Created(r) | Upsert::Unchanged(r) => r,
        }
    }
}

fn allowed(from: Option<LabelState>, to: LabelState) -> bool {
    use LabelState::*;
    matches!(
        (from, to),
        (None, Proposed)
            | (Some(Proposed), Proposed | Accepted | Rejected)
            | (Some(Accepted), Accepted | Rejected)
            | (Some(Rejected), Proposed)
    )
}

fn valid_class(class: &str) -> bool {
    !class.is_empty() && !class.chars().any(char::is_whitespace)
}

/// Append-only label log. The latest record per `(snippet, class)` is the
/// current state. One owner writes; readers take snapshots.
#[derive(Debug, Default)]
pub struct LabelStore {
    path: Option<PathBuf>,
    known: HashSet<SnippetRef>,
    log: Vec<LabelRecord>,
    current: BTreeMap<(SnippetRef, String), usize>,
}

impl LabelStore {
    pub fn in_memory(manifest: &Manifest) -> Self {
        Self {
            known: manifest.entries().iter().map(|e| e.snippet_ref()).collect(),
            ..Self::default()
        }
    }

    /// Opens (creating if needed) a `labels.jsonl` log and replays it.
    pub fn open(path: impl AsRef<Path>, manifest: &Manifest) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let mut store = Self::in_memory(manifest);
        if path.exists() {
            store.log = read_log(path)?;
            store.current = replay(&store.log, store.log.len());
        }
        store.path = Some(path.to_path_buf());
        Ok(store)
    }

    pub fn upsert(&mut self, rec: LabelRecord) -> Result<Upsert, StoreError> {
        let snippet = rec.snippet_ref();
        if !self.known.contains(&snippet) {
            return Err(StoreError::UnknownSnippet(snippet));
        }
        if !valid_class(&rec.class) {
            return Err(StoreError::InvalidClass(rec.class));
        }
        let key = rec.key();
        let prev = self.current.get(&key).map(|&i| &self.log[i]);
        let from = prev.map(|r| r.state);
        if from == Some(rec.state) && from != Some(LabelState::Rejected) {
            return Ok(Upsert::Unchanged(prev.expect("state present").clone()));
        }
        if !allowed(from, rec.state) {
            return Err(StoreError::IllegalTransition {
                snippet,
                class: rec.class,
                from: from.map_or_else(|| "none".to_string(), |s| s.to_string()),
                to: rec.state.to_string(),
            });
        }
        if let Some(path) = &self.path {
            let mut line = serde_json::to_vec(&rec).map_err(std::io::Error::other)?;
            line.push(b'\n');
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            // a single write of one full line keeps appends atomic
            f.write_all(&line)?;
            f.sync_data()?;
        }
        self.log.push(rec.clone());
        self.current.insert(key, self.log.len() - 1);
        Ok(Upsert::Created(rec))
    }

    pub fn log(&self) -> &[LabelRecord] {
        &self.log
    }

    pub fn get(&self, snippet: &SnippetRef, class: &str) -> Option<&LabelRecord> {
        self.current
            .get(&(snippet.clone(), class.to_string()))
            .map(|&i| &self.log[i])
    }

    /// In-memory copy that never writes to the log file. Long readers work
    /// on one of these instead of holding the writer.
    pub fn detached(&self) -> Self {
        Self { path: None, known: self.known.clone(), log: self.log.clone(), current: self.current.clone() }
    }

    /// Current record for every `(snippet, class)`, ordered by key.
    pub fn current(&self) -> impl Iterator<Item = &LabelRecord> {
        self.current.values().map(|&i| &self.log[i])
    }

    /// State as of the first `offset` log entries.
    pub fn snapshot(&self, offset: usize) -> Vec<LabelRecord> {
        replay(&self.log, offset.min(self.log.len()))
            .into_values()
            .map(|i| self.log[i].clone())
            .collect()
    }

    /// Accepted class of each snippet (first class in key order when a
    /// snippet has several).
    pub fn accepted_by_snippet(&self) -> BTreeMap<SnippetRef, String> {
        let mut out = BTreeMap::new();
        for r in self.current().filter(|r| r.state == LabelState::Accepted) {
            out.entry(r.snippet_ref()).or_insert_with(|| r.class.clone());
        }
        out
    }

    /// Count of accepted labels per class.
    pub fn class_inventory(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in self.current().filter(|r| r.state == LabelState::Accepted) {
            *out.entry(r.class.clone()).or_insert(0) += 1;
        }
        out
    }
}

fn replay(log: &[LabelRecord], upto: usize) -> BTreeMap<(SnippetRef, String), usize> {
    let mut cur = BTreeMap::new();
    for (i, r) in log[..upto].iter().enumerate() {
        cur.insert(r.key(), i);
    }
    cur
}

fn read_log(path: &Path) -> Result<Vec<LabelRecord>, StoreError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}
