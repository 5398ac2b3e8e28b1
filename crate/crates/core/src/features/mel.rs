use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FeatureError;
use crate::ingest::Snippet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sample_rate: 22_050,
            n_fft: 1024,
            hop: 512,
            n_mels: 64,
            fmin: 0.0,
            fmax: 11_025.0,
            log_floor: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.hop == 0 || self.n_fft < self.hop {
            return Err(format!("need n_fft >= hop > 0 (n_fft {}, hop {})", self.n_fft, self.hop));
        }
        if self.fmax > f64::from(self.sample_rate) / 2.0 || self.fmin < 0.0 || self.fmin >= self.fmax {
            return Err(format!("invalid band [{}, {}] Hz", self.fmin, self.fmax));
        }
        if self.n_mels == 0 || !(self.log_floor > 0.0) {
            return Err("n_mels and log_floor must be positive".into());
        }
        Ok(())
    }

    /// Stable short hash of every parameter; caches keyed by it never mix
    /// configurations.
    pub fn config_hash(&self) -> String {
        let canon = format!(
            "mel-v1;hann-symmetric;htk;sr={};n_fft={};hop={};n_mels={};fmin={:e};fmax={:e};floor={:e}",
            self.sample_rate, self.n_fft, self.hop, self.n_mels, self.fmin, self.fmax, self.log_floor
        );
        Sha256::digest(canon.as_bytes())[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.n_fft {
            0
        } else {
            (n_samples - self.n_fft) / self.hop + 1
        }
    }
}

/// Log-power mel spectrogram stored band-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram<T: Scalar = f64> {
    pub values: Vec<T>,
    pub n_mels: usize,
    pub n_frames: usize,
    pub config_hash: String,
}

impl<T: Scalar> MelSpectrogram<T> {
    #[inline]
    pub fn get(&self, band: usize, frame: usize) -> T {
        self.values[band * self.n_frames + frame]
    }

    pub fn band(&self, band: usize) -> &[T] {
        &self.values[band * self.n_frames..(band + 1) * self.n_frames]
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular HTK-mel filterbank, `n_mels` rows of `n_fft / 2 + 1` weights.
pub fn mel_filterbank(cfg: &FeatureConfig) -> Vec<Vec<f64>> {
    let n_bins = cfg.n_fft / 2 + 1;
    let lo = hz_to_mel(cfg.fmin);
    let hi = hz_to_mel(cfg.fmax);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_hz = f64::from(cfg.sample_rate) / cfg.n_fft as f64;
    (0..cfg.n_mels)
        .map(|m| {
            let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let up = (f - left) / (centre - left);
                    let down = (right - f) / (right - centre);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

pub fn mel_spectrogram<T: Scalar>(
    snippet: &Snippet<T>,
    cfg: &FeatureConfig,
) -> Result<MelSpectrogram<T>, FeatureError> {
    if snippet.rate != cfg.sample_rate {
        return Err(FeatureError::RateMismatch {
            expected: cfg.sample_rate,
            found: snippet.rate,
        });
    }
    mel_from_samples(&snippet.samples, cfg)
}

pub(crate) fn mel_from_samples<T: Scalar>(
    samples: &[T],
    cfg: &FeatureConfig,
) -> Result<MelSpectrogram<T>, FeatureError> {
    let n_frames = cfg.n_frames(samples.len());
    if n_frames == 0 {
        return Err(FeatureError::TooShort(samples.len()));
    }
    let n_fft = cfg.n_fft;
    let n_bins = n_fft / 2 + 1;
    // Symmetric Hann: w[n] == w[N-1-n], so a time-reversed frame has the
    // same power spectrum.
    let denom = (n_fft - 1) as f64;
    let window: Vec<T> = (0..n_fft)
        .map(|i| T::lit(0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos()))
        .collect();
    let bank: Vec<Vec<T>> = mel_filterbank(cfg)
        .into_iter()
        .map(|row| row.into_iter().map(T::lit).collect())
        .collect();
    let fft = FftPlanner::<T>::new().plan_fft_forward(n_fft);
    let floor = T::lit(cfg.log_floor);

    let mut values = vec![T::zero(); cfg.n_mels * n_frames];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n_fft];
    let mut power = vec![T::zero(); n_bins];
    for frame in 0..n_frames {
        let start = frame * cfg.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(samples[start + i] * window[i], T::zero());
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        for (m, weights) in bank.iter().enumerate() {
            let e: T = weights.iter().zip(&power).map(|(&w, &p)| w * p).sum();
            values[m * n_frames + frame] = e.max(floor).ln();
        }
    }
    Ok(MelSpectrogram {
        values,
        n_mels: cfg.n_mels,
        n_frames,
        config_hash: cfg.config_hash(),
    })
}
