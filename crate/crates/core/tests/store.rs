use std::collections::BTreeMap;

use proptest::prelude::*;
use triage_core::store::{
    export_training_set, ExportConfig, LabelRecord, LabelState, LabelStore, Manifest, ManifestEntry, Provenance,
    StoreError, Upsert,
};

fn manifest(n: u32) -> Manifest {
    Manifest::new(
        (0..n)
            .map(|i| ManifestEntry {
                clip_id: "reel".into(),
                index: i,
                offset_s: f64::from(i),
                sample_count: 22_050,
                source_path: "reel.wav".into(),
                rate: 22_050,
                duration_s: 1.0,
            })
            .collect(),
    )
    .unwrap()
}

fn rec(index: u32, class: &str, state: LabelState) -> LabelRecord {
    LabelRecord {
        clip_id: "reel".into(),
        snippet_index: index,
        class: class.into(),
        state,
        provenance: Provenance::Human,
        annotator: "tester".into(),
        timestamp: "2017-09-01T00:00:00Z".into(),
    }
}

#[derive(Debug, PartialEq)]
enum Outcome {
    Created,
    Unchanged,
    Illegal,
}

/// Written-out transition table: what a label may become next.
fn oracle(from: Option<LabelState>, to: LabelState) -> Outcome {
    use LabelState::*;
    match (from, to) {
        (Some(Proposed), Proposed) | (Some(Accepted), Accepted) => Outcome::Unchanged,
        (None, Proposed) => Outcome::Created,
        (None, _) => Outcome::Illegal,
        (Some(Proposed), Accepted | Rejected) => Outcome::Created,
        (Some(Accepted), Rejected) => Outcome::Created,
        (Some(Accepted), Proposed) => Outcome::Illegal,
        (Some(Rejected), Proposed) => Outcome::Created,
        (Some(Rejected), _) => Outcome::Illegal,
    }
}

fn state_strategy() -> impl Strategy<Value = LabelState> {
    prop_oneof![Just(LabelState::Proposed), Just(LabelState::Accepted), Just(LabelState::Rejected)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn store_follows_transition_table_and_survives_reopen(
        ops in prop::collection::vec((0u32..3, prop_oneof![Just("seal"), Just("airgun")], state_strategy()), 0..40)
    ) {
        let m = manifest(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let mut store = LabelStore::open(&path, &m).unwrap();
        let mut model: BTreeMap<(u32, &str), LabelState> = BTreeMap::new();
        let mut appended = 0;
        for (idx, class, state) in ops {
            let want = oracle(model.get(&(idx, class)).copied(), state);
            let got = match store.upsert(rec(idx, class, state)) {
                Ok(Upsert::Created(_)) => Outcome::Created,
                Ok(Upsert::Unchanged(_)) => Outcome::Unchanged,
                Err(StoreError::IllegalTransition { .. }) => Outcome::Illegal,
                Err(e) => panic!("unexpected error {e}"),
            };
            prop_assert_eq!(&got, &want);
            if got == Outcome::Created {
                model.insert((idx, class), state);
                appended += 1;
            }
        }
        prop_assert_eq!(store.log().len(), appended);
        let reopened = LabelStore::open(&path, &m).unwrap();
        let now: Vec<_> = reopened.current().map(|r| (r.snippet_index, r.class.clone(), r.state)).collect();
        let expected: Vec<_> = model.iter().map(|(&(i, c), &s)| (i, c.to_string(), s)).collect();
        let mut now_sorted = now.clone();
        now_sorted.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        prop_assert_eq!(now_sorted, expected);
    }
}

#[test]
fn bad_labels_are_refused_without_touching_the_log() {
    let m = manifest(2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.jsonl");
    let mut store = LabelStore::open(&path, &m).unwrap();
    assert!(matches!(store.upsert(rec(9, "seal", LabelState::Proposed)), Err(StoreError::UnknownSnippet(_))));
    assert!(matches!(store.upsert(rec(0, "bearded seal", LabelState::Proposed)), Err(StoreError::InvalidClass(_))));
    assert!(matches!(store.upsert(rec(0, "", LabelState::Proposed)), Err(StoreError::InvalidClass(_))));
    assert!(store.log().is_empty());
    assert!(!path.exists() || std::fs::read_to_string(&path).unwrap().is_empty());
}

#[test]
fn export_assigns_overlaps_in_request_order_and_excludes_busy_snippets() {
    // 0: airgun+seal accepted, 1: seal accepted, 2: seal proposed,
    // 3: airgun rejected, 4..10 untouched
    let m = manifest(10);
    let mut store = LabelStore::in_memory(&m);
    for (i, class, states) in [
        (0, "airgun", &[LabelState::Proposed, LabelState::Accepted][..]),
        (0, "seal", &[LabelState::Proposed, LabelState::Accepted]),
        (1, "seal", &[LabelState::Proposed, LabelState::Accepted]),
        (2, "seal", &[LabelState::Proposed]),
        (3, "airgun", &[LabelState::Proposed, LabelState::Rejected]),
    ] {
        for &s in states {
            store.upsert(rec(i, class, s)).unwrap();
        }
    }
    let cfg = ExportConfig {
        classes: vec!["airgun".into(), "seal".into()],
        min_count: 1,
        background_ratio: 2.0,
        ..ExportConfig::default()
    };
    let ds = export_training_set(&store, &m, &cfg).unwrap();
    let class_of: BTreeMap<u32, &str> = ds.snippets.iter().map(|s| (s.index, s.class.as_str())).collect();
    assert_eq!(class_of[&0], "airgun");
    assert_eq!(class_of[&1], "seal");
    assert!(!class_of.contains_key(&2));
    // both kept classes hold 1 snippet, so 2 background snippets from {3..9}
    assert_eq!(ds.counts["background"], 2);
    let bg: Vec<u32> = ds.snippets.iter().filter(|s| s.class == "background").map(|s| s.index).collect();
    assert!(bg.iter().all(|i| (3..10).contains(i)));
    let order: Vec<u32> = ds.snippets.iter().map(|s| s.index).collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));

    // reversing the request order flips the overlap
    let cfg = ExportConfig { classes: vec!["seal".into(), "airgun".into()], ..cfg };
    let ds = export_training_set(&store, &m, &cfg).unwrap();
    assert_eq!(ds.snippets.iter().find(|s| s.index == 0).unwrap().class, "seal");
}

#[test]
fn class_exactly_at_min_count_is_kept() {
    let m = manifest(12);
    let mut store = LabelStore::in_memory(&m);
    for i in 0..5 {
        store.upsert(rec(i, "walrus", LabelState::Proposed)).unwrap();
        store.upsert(rec(i, "walrus", LabelState::Accepted)).unwrap();
    }
    for i in 5..9 {
        store.upsert(rec(i, "whales", LabelState::Proposed)).unwrap();
        store.upsert(rec(i, "whales", LabelState::Accepted)).unwrap();
    }
    let cfg = ExportConfig { classes: vec!["walrus".into(), "whales".into()], min_count: 5, ..ExportConfig::default() };
    let ds = export_training_set(&store, &m, &cfg).unwrap();
    assert_eq!(ds.kept, vec!["walrus"]);
    assert_eq!(ds.dropped, vec!["whales"]);
    // background capped at the 3 free snippets
    assert_eq!(ds.counts["background"], 3);
    let cfg = ExportConfig { min_count: 6, ..cfg };
    assert!(matches!(export_training_set(&store, &m, &cfg), Err(StoreError::NoClassSurvives { min_count: 6 })));
}
