use std::collections::BTreeSet;

use super::{DetectError, DetectionEvent};
use crate::scalar::Scalar;

/// Local maxima at or above `threshold`, kept greedily by descending score
/// (earlier lag first on ties) while suppressing any candidate closer than
/// `min_separation_s` to an already kept peak. Returned in time order with
/// empty clip and template fields.
pub fn pick_peaks<T: Scalar>(
    scores: &[T],
    rate: u32,
    threshold: f64,
    min_separation_s: f64,
) -> Result<Vec<DetectionEvent>, DetectError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(DetectError::InvalidThreshold(threshold));
    }
    let sep = (min_separation_s.max(0.0) * f64::from(rate)).round() as usize;
    let s: Vec<f64> = scores.iter().map(|v| v.as_f64()).collect();
    let n = s.len();
    let mut cand: Vec<usize> = (0..n)
        .filter(|&i| {
            s[i] >= threshold && (i == 0 || s[i] >= s[i - 1]) && (i + 1 == n || s[i] >= s[i + 1])
        })
        .collect();
    cand.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let mut kept = BTreeSet::new();
    for i in cand {
        let lo = i.saturating_sub(sep.saturating_sub(1));
        let blocked = sep > 0 && kept.range(lo..i.saturating_add(sep)).next().is_some();
        if !blocked {
            kept.insert(i);
        }
    }
    Ok(kept
        .into_iter()
        .map(|i| DetectionEvent {
            clip_id: String::new(),
            offset_s: i as f64 / f64::from(rate),
            score: s[i],
            template_name: String::new(),
        })
        .collect())
}
