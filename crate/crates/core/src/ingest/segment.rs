use super::{AudioClip, IngestError, Snippet};
use crate::scalar::Scalar;

/// Cuts `clip` into windows of `duration_s` seconds advancing by
/// `duration_s - overlap_s`. A trailing partial window is dropped.
pub fn segment<T: Scalar>(
    clip: &AudioClip<T>,
    duration_s: f64,
    overlap_s: f64,
) -> Result<Vec<Snippet<T>>, IngestError> {
    if !(duration_s > 0.0) {
        return Err(IngestError::InvalidSegmentation(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if !(0.0..duration_s).contains(&overlap_s) {
        return Err(IngestError::InvalidSegmentation(format!(
            "overlap {overlap_s} outside [0, {duration_s})"
        )));
    }
    let rate = f64::from(clip.sample_rate);
    let window = whole_samples(rate * duration_s).ok_or_else(|| {
        IngestError::InvalidSegmentation(format!(
            "{} Hz x {duration_s} s is not a whole number of samples",
            clip.sample_rate
        ))
    })?;
    let hop = whole_samples(rate * (duration_s - overlap_s)).ok_or_else(|| {
        IngestError::InvalidSegmentation(format!(
            "hop of {} s is not a whole number of samples",
            duration_s - overlap_s
        ))
    })?;

    let n = clip.samples.len();
    if n < window {
        return Ok(Vec::new());
    }
    let count = (n - window) / hop + 1;
    Ok((0..count)
        .map(|i| {
            let start = i * hop;
            Snippet {
                clip_id: clip.id.clone(),
                index: i as u32,
                samples: clip.samples[start..start + window].to_vec(),
                rate: clip.sample_rate,
                duration_s,
                offset_s: start as f64 / rate,
            }
        })
        .collect())
}

fn whole_samples(x: f64) -> Option<usize> {
    let r = x.round();
    ((x - r).abs() < 1e-9 && r >= 1.0).then_some(r as usize)
}
