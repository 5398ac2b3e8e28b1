use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::ingest::SnippetRef;

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub index: u32,
    pub offset_s: f64,
    pub sample_count: usize,
    #[serde(default)]
    pub source_path: String,
    #[serde(default)]
    pub rate: u32,
    #[serde(default = "one_second")]
    pub duration_s: f64,
}

fn one_second() -> f64 {
    1.0
}

impl ManifestEntry {
    pub fn snippet_ref(&self) -> SnippetRef {
        SnippetRef::new(self.clip_id.clone(), self.index)
    }
}

/// Indexed list of snippets with unique `(clip_id, index)` pairs.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
    lookup: HashMap<SnippetRef, usize>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, StoreError> {
        let mut lookup = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if lookup.insert(e.snippet_ref(), i).is_some() {
                return Err(StoreError::DuplicateSnippet(e.snippet_ref()));
            }
        }
        Ok(Self { entries, lookup })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, snippet: &SnippetRef) -> Option<&ManifestEntry> {
        self.lookup.get(snippet).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, snippet: &SnippetRef) -> bool {
        self.lookup.contains_key(snippet)
    }

    /// Snippet count and source path of every clip, by clip id.
    pub fn clips(&self) -> BTreeMap<&str, (usize, &str)> {
        let mut out: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for e in &self.entries {
            let slot = out.entry(e.clip_id.as_str()).or_insert((0, e.source_path.as_str()));
            slot.0 += 1;
        }
        out
    }
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<(), StoreError> {
    let path = path.as_ref();
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        for e in entries {
            serde_json::to_writer(&mut w, e).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    std::fs::rename(tmp, path)?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest, StoreError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(&line).map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Manifest::new(entries)
}
