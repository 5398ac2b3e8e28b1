//! Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel.
//!
//! For a rational ratio `to / from = up / down` (reduced), output sample `n`
//! sits at input time `n * down / up`. Its integer part picks the input
//! neighbourhood and the remainder `(n * down) % up` picks one of `up`
//! filter phases. Phases are tabulated when the table stays small and
//! evaluated on the fly otherwise.

use rayon::prelude::*;

use super::AudioClip;
use crate::scalar::Scalar;

/// Phase tables beyond this many coefficients are evaluated lazily.
const MAX_TABLE_COEFFS: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    /// Kaiser window shape parameter.
    pub beta: f64,
    /// Zero crossings of the low-pass sinc on each side of the centre tap.
    pub zero_crossings: usize,
    /// Cutoff as a fraction of the lower Nyquist frequency.
    pub rolloff: f64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            beta: 8.6,
            zero_crossings: 64,
            rolloff: 0.95,
        }
    }
}

/// `round(n * to / from)` in exact integer arithmetic (halves round up).
pub fn resampled_len(n: usize, from: u32, to: u32) -> usize {
    let num = n as u128 * u128::from(to);
    let from = u128::from(from);
    ((num + from / 2) / from) as usize
}

pub fn resample<T: Scalar>(clip: &AudioClip<T>, target_rate: u32) -> AudioClip<T> {
    AudioClip {
        id: clip.id.clone(),
        samples: resample_samples(&clip.samples, clip.sample_rate, target_rate),
        sample_rate: target_rate,
        source_path: clip.source_path.clone(),
        start_timestamp: clip.start_timestamp.clone(),
    }
}

pub fn resample_samples<T: Scalar>(input: &[T], from: u32, to: u32) -> Vec<T> {
    resample_with(input, from, to, &ResampleConfig::default())
}

pub fn resample_with<T: Scalar>(input: &[T], from: u32, to: u32, cfg: &ResampleConfig) -> Vec<T> {
    assert!(from > 0 && to > 0, "sample rates must be positive");
    if from == to {
        return input.to_vec();
    }
    let kernel = Kernel::<T>::new(from, to, cfg);
    let n_out = resampled_len(input.len(), from, to);
    let mut out = vec![T::zero(); n_out];
    out.par_chunks_mut(4096).enumerate().for_each(|(c, chunk)| {
        let base = c * 4096;
        let mut scratch = vec![T::zero(); kernel.taps];
        for (k, y) in chunk.iter_mut().enumerate() {
            *y = kernel.output_sample(input, base + k, &mut scratch);
        }
    });
    out
}

struct Kernel<T> {
    up: u64,
    down: u64,
    /// Normalised cutoff in cycles per input sample.
    cutoff: f64,
    /// Half width in input samples.
    half_width: f64,
    beta: f64,
    i0_beta: f64,
    /// Index offset of the first tap relative to the integer input time.
    first: i64,
    taps: usize,
    table: Option<Vec<T>>,
}

impl<T: Scalar> Kernel<T> {
    fn new(from: u32, to: u32, cfg: &ResampleConfig) -> Self {
        let g = gcd(u64::from(from), u64::from(to));
        let up = u64::from(to) / g;
        let down = u64::from(from) / g;
        let ratio = f64::from(to) / f64::from(from);
        let cutoff = 0.5 * cfg.rolloff * ratio.min(1.0);
        let half_width = cfg.zero_crossings as f64 / (2.0 * cutoff);
        let reach = half_width.ceil() as i64;
        let first = -reach;
        let taps = (2 * reach + 2) as usize;
        let mut kernel = Self {
            up,
            down,
            cutoff,
            half_width,
            beta: cfg.beta,
            i0_beta: bessel_i0(cfg.beta),
            first,
            taps,
            table: None,
        };
        if (up as usize).saturating_mul(taps) <= MAX_TABLE_COEFFS {
            let mut table = vec![T::zero(); up as usize * taps];
            table.par_chunks_mut(taps).enumerate().for_each(|(phase, row)| {
                kernel.fill_phase(phase as u64, row);
            });
            kernel.table = Some(table);
        }
        kernel
    }

    fn tap(&self, t: f64) -> f64 {
        if t.abs() > self.half_width {
            return 0.0;
        }
        let u = t / self.half_width;
        let window = bessel_i0(self.beta * (1.0 - u * u).max(0.0).sqrt()) / self.i0_beta;
        2.0 * self.cutoff * sinc(2.0 * self.cutoff * t) * window
    }

    fn fill_phase(&self, phase: u64, row: &mut [T]) {
        let frac = phase as f64 / self.up as f64;
        for (j, c) in row.iter_mut().enumerate() {
            let offset = self.first + j as i64;
            *c = T::lit(self.tap(frac - offset as f64));
        }
    }

    fn output_sample(&self, input: &[T], n: usize, scratch: &mut [T]) -> T {
        let pos = n as u64 * self.down;
        let whole = (pos / self.up) as i64;
        let phase = pos % self.up;
        let coeffs: &[T] = match &self.table {
            Some(t) => &t[phase as usize * self.taps..(phase as usize + 1) * self.taps],
            None => {
                self.fill_phase(phase, scratch);
                scratch
            }
        };
        let start = whole + self.first;
        let mut acc = T::zero();
        for (j, &c) in coeffs.iter().enumerate() {
            let idx = start + j as i64;
            if idx >= 0 && (idx as usize) < input.len() {
                acc += c * input[idx as usize];
            }
        }
        acc
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= (half / k) * (half / k);
        sum += term;
        if term < sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
