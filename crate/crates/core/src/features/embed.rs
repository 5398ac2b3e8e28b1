//! Deterministic spectral-summary embedding: 20 statistics for each of the
//! 64 mel bands, laid out band-major (`band * 20 + stat`).

use super::{Embedding, FeatureError, MelSpectrogram, Provider, EMBEDDING_DIM};
use crate::ingest::SnippetRef;
use crate::scalar::Scalar;

pub const STATS_PER_BAND: usize = 20;
const BANDS: usize = EMBEDDING_DIM / STATS_PER_BAND;

/// Position of each statistic within a band's 20-value block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum BandStat {
    Mean,
    Std,
    Min,
    Max,
    Median,
    Q10,
    Q25,
    Q75,
    Q90,
    Range,
    First,
    Last,
    MeanAbsDelta,
    StdDelta,
    MaxAbsDelta,
    Autocorr1,
    EnergyFraction,
    FluxFraction,
    AboveMeanFraction,
    Slope,
}

impl BandStat {
    pub const ALL: [BandStat; STATS_PER_BAND] = [
        BandStat::Mean,
        BandStat::Std,
        BandStat::Min,
        BandStat::Max,
        BandStat::Median,
        BandStat::Q10,
        BandStat::Q25,
        BandStat::Q75,
        BandStat::Q90,
        BandStat::Range,
        BandStat::First,
        BandStat::Last,
        BandStat::MeanAbsDelta,
        BandStat::StdDelta,
        BandStat::MaxAbsDelta,
        BandStat::Autocorr1,
        BandStat::EnergyFraction,
        BandStat::FluxFraction,
        BandStat::AboveMeanFraction,
        BandStat::Slope,
    ];

    pub fn index(self, band: usize) -> usize {
        band * STATS_PER_BAND + self as usize
    }
}

pub fn embed_reference<T: Scalar>(
    mel: &MelSpectrogram<T>,
    snippet: SnippetRef,
) -> Result<Embedding<T>, FeatureError> {
    if mel.n_mels != BANDS {
        return Err(FeatureError::BandCountMismatch {
            expected: BANDS,
            found: mel.n_mels,
        });
    }
    let n = mel.n_frames;
    if n == 0 {
        return Err(FeatureError::TooShort(0));
    }
    let peak = mel.values.iter().copied().fold(T::neg_infinity(), T::max);

    // Linear power relative to the global peak; fractions are invariant to
    // that rescaling.
    let mut energy = vec![T::zero(); BANDS];
    let mut flux = vec![T::zero(); BANDS];
    for b in 0..BANDS {
        let lin: Vec<T> = mel.band(b).iter().map(|&v| (v - peak).exp()).collect();
        energy[b] = lin.iter().copied().sum();
        flux[b] = lin.windows(2).map(|w| (w[1] - w[0]).max(T::zero())).sum();
    }
    let total_energy: T = energy.iter().copied().sum();
    let total_flux: T = flux.iter().copied().sum();

    let mut vector = vec![T::zero(); EMBEDDING_DIM];
    for b in 0..BANDS {
        let out = &mut vector[b * STATS_PER_BAND..(b + 1) * STATS_PER_BAND];
        band_stats(mel.band(b), out);
        out[BandStat::EnergyFraction as usize] = ratio_or_zero(energy[b], total_energy);
        out[BandStat::FluxFraction as usize] = ratio_or_zero(flux[b], total_flux);
    }
    debug_assert!(vector.iter().all(|v| v.is_finite()));
    Ok(Embedding {
        snippet,
        vector,
        provider: Provider::Reference,
    })
}

fn ratio_or_zero<T: Scalar>(num: T, den: T) -> T {
    if den > T::zero() {
        num / den
    } else {
        T::zero()
    }
}

fn band_stats<T: Scalar>(v: &[T], out: &mut [T]) {
    let n = v.len();
    let nt = T::from_usize_lossy(n);
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite mel values"));
    let (min, max) = (sorted[0], sorted[n - 1]);

    out[BandStat::Min as usize] = min;
    out[BandStat::Max as usize] = max;
    out[BandStat::Range as usize] = max - min;
    out[BandStat::First as usize] = v[0];
    out[BandStat::Last as usize] = v[n - 1];

    if min == max {
        // Constant band: every quantile is the value, every spread is zero.
        for s in [
            BandStat::Mean,
            BandStat::Median,
            BandStat::Q10,
            BandStat::Q25,
            BandStat::Q75,
            BandStat::Q90,
        ] {
            out[s as usize] = min;
        }
        return;
    }

    let mean = v.iter().copied().sum::<T>() / nt;
    let centred: Vec<T> = v.iter().map(|&x| x - mean).collect();
    let ss: T = centred.iter().map(|&c| c * c).sum();
    out[BandStat::Mean as usize] = mean;
    out[BandStat::Std as usize] = (ss / nt).sqrt();
    out[BandStat::Median as usize] = quantile(&sorted, 0.5);
    out[BandStat::Q10 as usize] = quantile(&sorted, 0.1);
    out[BandStat::Q25 as usize] = quantile(&sorted, 0.25);
    out[BandStat::Q75 as usize] = quantile(&sorted, 0.75);
    out[BandStat::Q90 as usize] = quantile(&sorted, 0.9);
    out[BandStat::AboveMeanFraction as usize] =
        T::from_usize_lossy(centred.iter().filter(|&&c| c > T::zero()).count()) / nt;

    if n >= 2 {
        let deltas: Vec<T> = v.windows(2).map(|w| w[1] - w[0]).collect();
        let nd = T::from_usize_lossy(deltas.len());
        let dmean = deltas.iter().copied().sum::<T>() / nd;
        out[BandStat::MeanAbsDelta as usize] = deltas.iter().map(|d| d.abs()).sum::<T>() / nd;
        out[BandStat::StdDelta as usize] =
            (deltas.iter().map(|&d| (d - dmean) * (d - dmean)).sum::<T>() / nd).sqrt();
        out[BandStat::MaxAbsDelta as usize] = deltas.iter().map(|d| d.abs()).fold(T::zero(), T::max);

        let lag: T = centred.windows(2).map(|w| w[0] * w[1]).sum();
        out[BandStat::Autocorr1 as usize] = ratio_or_zero(lag, ss);

        let tmean = T::lit((n - 1) as f64 / 2.0);
        let (mut sxy, mut sxx) = (T::zero(), T::zero());
        for (t, &c) in centred.iter().enumerate() {
            let dt = T::from_usize_lossy(t) - tmean;
            sxy += dt * c;
            sxx += dt * dt;
        }
        out[BandStat::Slope as usize] = sxy / sxx;
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile<T: Scalar>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
