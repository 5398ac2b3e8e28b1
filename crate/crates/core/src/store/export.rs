use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabelState, LabelStore, Manifest, StoreError};

#[derive(Debug, Clone)]
pub struct ExportConfig {
    pub classes: Vec<String>,
    pub min_count: usize,
    pub background_class: String,
    /// Background snippets drawn per snippet of the largest kept class.
    pub background_ratio: f64,
    pub seed: u64,
    pub feature_config_hash: String,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            classes: Vec::new(),
            min_count: 100,
            background_class: "background".into(),
            background_ratio: 10.0,
            seed: 7,
            feature_config_hash: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub clip_id: String,
    pub index: u32,
    pub offset_s: f64,
    pub source_path: String,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub snippets: Vec<DatasetEntry>,
    pub feature_config_hash: String,
    pub counts: BTreeMap<String, usize>,
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
}

impl DatasetManifest {
    /// Class list for training: kept classes in request order, then background.
    pub fn class_names(&self, background: &str) -> Vec<String> {
        let mut names = self.kept.clone();
        if self.counts.get(background).copied().unwrap_or(0) > 0 {
            names.push(background.to_string());
        }
        names
    }
}

/// Keeps requested classes with at least `min_count` accepted labels and fills
/// the background class from snippets that carry no accepted or proposed label.
pub fn export_training_set(
    store: &LabelStore,
    manifest: &Manifest,
    cfg: &ExportConfig,
) -> Result<DatasetManifest, StoreError> {
    if cfg.min_count == 0 {
        return Err(StoreError::InvalidConfig("min_count must be at least 1".into()));
    }
    let inventory = store.class_inventory();
    let (kept, dropped): (Vec<String>, Vec<String>) = cfg
        .classes
        .iter()
        .cloned()
        .partition(|c| inventory.get(c).copied().unwrap_or(0) >= cfg.min_count);
    if kept.is_empty() {
        return Err(StoreError::NoClassSurvives { min_count: cfg.min_count });
    }

    let mut assigned: BTreeMap<_, String> = BTreeMap::new();
    let mut busy = std::collections::HashSet::new();
    for r in store.current() {
        if matches!(r.state, LabelState::Accepted | LabelState::Proposed) {
            busy.insert(r.snippet_ref());
        }
    }
    // a snippet accepted for several kept classes goes to the first in request order
    for class in &kept {
        for r in store.current() {
            if r.state == LabelState::Accepted && &r.class == class {
                assigned.entry(r.snippet_ref()).or_insert_with(|| class.clone());
            }
        }
    }

    let mut counts: BTreeMap<String, usize> = kept.iter().map(|c| (c.clone(), 0)).collect();
    for class in assigned.values() {
        *counts.get_mut(class).expect("kept class") += 1;
    }
    let largest = counts.values().copied().max().unwrap_or(0);

    let pool: Vec<_> = manifest
        .entries()
        .iter()
        .filter(|e| !busy.contains(&e.snippet_ref()))
        .collect();
    let wanted = ((largest as f64) * cfg.background_ratio).round().max(0.0) as usize;
    let take = wanted.min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut picked: Vec<usize> = sample(&mut rng, pool.len(), take).into_vec();
    picked.sort_unstable();

    let mut snippets = Vec::with_capacity(assigned.len() + take);
    for e in manifest.entries() {
        if let Some(class) = assigned.get(&e.snippet_ref()) {
            snippets.push(DatasetEntry {
                clip_id: e.clip_id.clone(),
                index: e.index,
                offset_s: e.offset_s,
                source_path: e.source_path.clone(),
                class: class.clone(),
            });
        }
    }
    for i in picked {
        let e = pool[i];
        snippets.push(DatasetEntry {
            clip_id: e.clip_id.clone(),
            index: e.index,
            offset_s: e.offset_s,
            source_path: e.source_path.clone(),
            class: cfg.background_class.clone(),
        });
    }
    snippets.sort_by(|a, b| (&a.clip_id, a.index).cmp(&(&b.clip_id, b.index)));
    if take > 0 {
        counts.insert(cfg.background_class.clone(), take);
    }
    for c in &dropped {
        tracing::info!(class = %c, count = inventory.get(c).copied().unwrap_or(0), "dropped small class");
    }
    Ok(DatasetManifest {
        snippets,
        feature_config_hash: cfg.feature_config_hash.clone(),
        counts,
        kept,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{LabelRecord, ManifestEntry, Provenance};

    const TABLE: [(&str, u32); 6] = [
        ("bearded_seal", 1033),
        ("walrus", 9),
        ("airgun", 275),
        ("sea_ice", 1),
        ("whales", 12),
        ("mammal", 7),
    ];

    fn inventory_store(extra_unlabeled: u32) -> (LabelStore, Manifest) {
        let total: u32 = TABLE.iter().map(|t| t.1).sum::<u32>() + extra_unlabeled;
        let manifest = Manifest::new(
            (0..total)
                .map(|i| ManifestEntry {
                    clip_id: format!("clip{:02}", i / 600),
                    index: i % 600,
                    offset_s: f64::from(i % 600),
                    sample_count: 22_050,
                    source_path: String::new(),
                    rate: 22_050,
                    duration_s: 1.0,
                })
                .collect(),
        )
        .unwrap();
        let mut store = LabelStore::in_memory(&manifest);
        let mut i = 0;
        for (class, n) in TABLE {
            for _ in 0..n {
                let e = &manifest.entries()[i];
                for state in [LabelState::Proposed, LabelState::Accepted] {
                    store
                        .upsert(LabelRecord {
                            clip_id: e.clip_id.clone(),
                            snippet_index: e.index,
                            class: class.into(),
                            state,
                            provenance: Provenance::Human,
                            annotator: "expert".into(),
                            timestamp: "2017-09-01T00:00:00Z".into(),
                        })
                        .unwrap();
                }
                i += 1;
            }
        }
        (store, manifest)
    }

    fn all_classes() -> Vec<String> {
        TABLE.iter().map(|t| t.0.to_string()).collect()
    }

    #[test]
    fn table_inventory_with_min_count_100() {
        let (store, manifest) = inventory_store(500);
        let inv = store.class_inventory();
        assert_eq!(inv["bearded_seal"], 1033);
        assert_eq!(inv["airgun"], 275);
        let cfg = ExportConfig { classes: all_classes(), min_count: 100, ..Default::default() };
        let ds = export_training_set(&store, &manifest, &cfg).unwrap();
        assert_eq!(ds.kept, vec!["bearded_seal", "airgun"]);
        assert_eq!(ds.dropped, vec!["walrus", "sea_ice", "whales", "mammal"]);
        // 10x the largest class exceeds the 500 free snippets
        assert_eq!(ds.counts["background"], 500);
        assert_eq!(ds.snippets.len(), 1033 + 275 + 500);
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let (store, manifest) = inventory_store(0);
        let cfg = ExportConfig { classes: all_classes(), min_count: 1, ..Default::default() };
        let ds = export_training_set(&store, &manifest, &cfg).unwrap();
        assert_eq!(ds.kept.len(), 6);
        assert!(ds.dropped.is_empty());
        assert!(!ds.counts.contains_key("background"));
    }

    #[test]
    fn huge_min_count_leaves_nothing() {
        let (store, manifest) = inventory_store(0);
        let cfg = ExportConfig { classes: all_classes(), min_count: 10_000, ..Default::default() };
        assert!(matches!(
            export_training_set(&store, &manifest, &cfg),
            Err(StoreError::NoClassSurvives { min_count: 10_000 })
        ));
    }

    #[test]
    fn deterministic_per_seed_and_ratio_respected() {
        let (store, manifest) = inventory_store(3000);
        let cfg = ExportConfig {
            classes: vec!["airgun".into()],
            min_count: 100,
            background_ratio: 2.0,
            ..Default::default()
        };
        let a = export_training_set(&store, &manifest, &cfg).unwrap();
        let b = export_training_set(&store, &manifest, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts["background"], 550);
        // background never overlaps labeled snippets
        let labeled = store.accepted_by_snippet();
        for s in a.snippets.iter().filter(|s| s.class == "background") {
            assert!(!labeled.contains_key(&crate::ingest::SnippetRef::new(s.clip_id.clone(), s.index)));
        }
        let other = ExportConfig { seed: 8, ..cfg };
        assert_ne!(export_training_set(&store, &manifest, &other).unwrap(), a);
    }
}
