use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DetectError;
use crate::ingest::AudioClip;
use crate::scalar::Scalar;

pub const MIN_TEMPLATE_LEN: usize = 32;

/// Exemplar waveform for the matched filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Template<T = f64> {
    pub samples: Vec<T>,
    pub rate: u32,
    pub name: String,
}

impl<T: Scalar> Template<T> {
    pub fn new(name: impl Into<String>, samples: Vec<T>, rate: u32) -> Result<Self, DetectError> {
        if samples.len() < MIN_TEMPLATE_LEN {
            return Err(DetectError::InvalidTemplate(format!(
                "{} samples, need at least {MIN_TEMPLATE_LEN}",
                samples.len()
            )));
        }
        let mean = samples.iter().map(|v| v.as_f64()).sum::<f64>() / samples.len() as f64;
        let energy: f64 = samples.iter().map(|v| (v.as_f64() - mean).powi(2)).sum();
        if !(energy > 0.0) || !energy.is_finite() {
            return Err(DetectError::InvalidTemplate("zero energy after mean removal".into()));
        }
        Ok(Self { samples, rate, name: name.into() })
    }

    pub fn from_clip(clip: &AudioClip<T>) -> Result<Self, DetectError> {
        Self::new(clip.id.clone(), clip.samples.clone(), clip.sample_rate)
    }
}

/// Airgun-like pulse shape: cosines every 10 Hz from 50 to 500 Hz with seeded
/// phases under a 50 ms exponential decay.
#[derive(Debug, Clone, PartialEq)]
pub struct AirgunShape {
    tones: Vec<(f64, f64)>,
}

impl AirgunShape {
    pub const LENGTH_S: f64 = 0.25;

    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tones = (5..=50)
            .map(|k| (f64::from(k) * 10.0, rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        Self { tones }
    }

    /// Unnormalised value at `t` seconds after onset (zero outside the pulse).
    pub fn value(&self, t: f64) -> f64 {
        if !(0.0..Self::LENGTH_S).contains(&t) {
            return 0.0;
        }
        let s: f64 = self.tones.iter().map(|&(f, ph)| (std::f64::consts::TAU * f * t + ph).cos()).sum();
        s * (-t / 0.05).exp()
    }

    /// The pulse sampled at `rate`, scaled to unit peak.
    pub fn sample(&self, rate: u32) -> Vec<f64> {
        let n = (Self::LENGTH_S * f64::from(rate)).round() as usize;
        let raw: Vec<f64> = (0..n).map(|i| self.value(i as f64 / f64::from(rate))).collect();
        let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        raw.into_iter().map(|v| v / peak).collect()
    }
}

/// Synthetic airgun exemplar of [`AirgunShape`], 0.25 s long, peak 1.
pub fn airgun_template<T: Scalar>(rate: u32, seed: u64) -> Template<T> {
    let samples = AirgunShape::new(seed).sample(rate).into_iter().map(T::lit).collect();
    Template::new("airgun-synthetic", samples, rate).expect("generated template is valid")
}
