//! Matched-filter (zero-normalised cross-correlation) transient detection.

mod ncc;
mod peaks;
mod template;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{AudioClip, SnippetRef};
use crate::scalar::Scalar;
use crate::store::{now_timestamp, LabelRecord, LabelState, Manifest, Provenance};

pub use ncc::{ncc, ncc_direct};
pub use peaks::pick_peaks;
pub use template::{airgun_template, AirgunShape, Template, MIN_TEMPLATE_LEN};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("clip rate {clip} Hz differs from template rate {template} Hz")]
    RateMismatch { clip: u32, template: u32 },
    #[error("template of {template} samples is longer than the {clip}-sample clip")]
    TemplateTooLong { template: usize, clip: usize },
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("event references unknown clip {0:?}")]
    UnknownClip(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub clip_id: String,
    pub offset_s: f64,
    pub score: f64,
    pub template_name: String,
}

/// Correlates `tpl` over `clip` and returns the thresholded peaks.
pub fn detect<T: Scalar>(
    clip: &AudioClip<T>,
    tpl: &Template<T>,
    threshold: f64,
    min_separation_s: f64,
) -> Result<Vec<DetectionEvent>, DetectError> {
    let scores = ncc(clip, tpl)?;
    let mut events = pick_peaks(&scores, clip.sample_rate, threshold, min_separation_s)?;
    for e in &mut events {
        e.clip_id = clip.id.clone();
        e.template_name = tpl.name.clone();
    }
    Ok(events)
}

/// Maps each event onto the snippet containing its offset and emits one
/// `proposed` record per distinct snippet. Events past the last full snippet
/// of a clip are dropped.
pub fn propose_labels(
    events: &[DetectionEvent],
    class: &str,
    manifest: &Manifest,
) -> Result<Vec<LabelRecord>, DetectError> {
    let clips = manifest.clips();
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    let timestamp = now_timestamp();
    for e in events {
        if !clips.contains_key(e.clip_id.as_str()) {
            return Err(DetectError::UnknownClip(e.clip_id.clone()));
        }
        let duration = manifest
            .get(&SnippetRef::new(e.clip_id.clone(), 0))
            .map_or(1.0, |m| m.duration_s);
        let index = (e.offset_s / duration).floor();
        if index < 0.0 || index > f64::from(u32::MAX) {
            continue;
        }
        let snippet = SnippetRef::new(e.clip_id.clone(), index as u32);
        if !manifest.contains(&snippet) {
            tracing::debug!(clip = %e.clip_id, offset = e.offset_s, "event outside segmented range");
            continue;
        }
        if seen.insert(snippet.clone()) {
            out.push(LabelRecord {
                clip_id: snippet.clip_id,
                snippet_index: snippet.index,
                class: class.to_string(),
                state: LabelState::Proposed,
                provenance: Provenance::MatchedFilter,
                annotator: e.template_name.clone(),
                timestamp: timestamp.clone(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ManifestEntry;

    fn manifest() -> Manifest {
        Manifest::new(
            (0..5)
                .map(|i| ManifestEntry {
                    clip_id: "c".into(),
                    index: i,
                    offset_s: f64::from(i),
                    sample_count: 100,
                    source_path: String::new(),
                    rate: 100,
                    duration_s: 1.0,
                })
                .collect(),
        )
        .unwrap()
    }

    fn event(clip: &str, offset_s: f64) -> DetectionEvent {
        DetectionEvent { clip_id: clip.into(), offset_s, score: 0.9, template_name: "t".into() }
    }

    #[test]
    fn offset_maps_to_containing_snippet() {
        let recs = propose_labels(&[event("c", 2.3)], "airgun", &manifest()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].snippet_index, 2);
        assert_eq!(recs[0].state, LabelState::Proposed);
        assert_eq!(recs[0].provenance, Provenance::MatchedFilter);
    }

    #[test]
    fn empty_and_duplicates() {
        assert!(propose_labels(&[], "airgun", &manifest()).unwrap().is_empty());
        let recs = propose_labels(&[event("c", 1.1), event("c", 1.7), event("c", 9.0)], "airgun", &manifest()).unwrap();
        assert_eq!(recs.len(), 1);
    }

    #[test]
    fn unknown_clip() {
        assert!(matches!(
            propose_labels(&[event("zz", 0.5)], "airgun", &manifest()),
            Err(DetectError::UnknownClip(_))
        ));
    }
}
