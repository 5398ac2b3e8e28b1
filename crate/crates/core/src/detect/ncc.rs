use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{DetectError, Template};
use crate::ingest::AudioClip;
use crate::scalar::Scalar;

fn check<T: Scalar>(clip: &AudioClip<T>, tpl: &Template<T>) -> Result<(), DetectError> {
    if clip.sample_rate != tpl.rate {
        return Err(DetectError::RateMismatch { clip: clip.sample_rate, template: tpl.rate });
    }
    if clip.samples.len() < tpl.samples.len() {
        return Err(DetectError::TemplateTooLong { template: tpl.samples.len(), clip: clip.samples.len() });
    }
    Ok(())
}

fn centred<T: Scalar>(v: &[T]) -> Vec<f64> {
    let mean = v.iter().map(|x| x.as_f64()).sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x.as_f64() - mean).collect()
}

/// Sum of `x[t..t+m]` and of its squares for every lag. Sums restart from
/// scratch every `m` lags so rounding stays local.
fn window_moments(x: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let lags = x.len() - m + 1;
    let mut s1 = vec![0.0; lags];
    let mut s2 = vec![0.0; lags];
    s1.par_chunks_mut(m)
        .zip(s2.par_chunks_mut(m))
        .enumerate()
        .for_each(|(b, (c1, c2))| {
            let t0 = b * m;
            let mut a: f64 = x[t0..t0 + m].iter().sum();
            let mut q: f64 = x[t0..t0 + m].iter().map(|v| v * v).sum();
            for k in 0..c1.len() {
                if k > 0 {
                    let out = x[t0 + k - 1];
                    let inn = x[t0 + k + m - 1];
                    a += inn - out;
                    q += inn * inn - out * out;
                }
                c1[k] = a;
                c2[k] = q;
            }
        });
    (s1, s2)
}

fn normalise(dotp: f64, s1: f64, s2: f64, m: f64, tnorm: f64) -> f64 {
    let var = (s2 - s1 * s1 / m).max(0.0);
    if var <= 1e-10 * s2 || var == 0.0 {
        return 0.0;
    }
    (dotp / (var.sqrt() * tnorm)).clamp(-1.0, 1.0)
}

/// Zero-normalised cross-correlation at every lag `0..=n-m`, FFT overlap-save.
pub fn ncc<T: Scalar>(clip: &AudioClip<T>, tpl: &Template<T>) -> Result<Vec<T>, DetectError> {
    check(clip, tpl)?;
    // NCC ignores a constant offset, so drop the clip mean to keep sums small
    let x = centred(&clip.samples);
    let y = centred(&tpl.samples);
    let (n, m) = (x.len(), y.len());
    let tnorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let lags = n - m + 1;

    let size = (4 * m).max(1 << 16).min((n + m).next_power_of_two()).max((2 * m).next_power_of_two());
    let size = size.next_power_of_two();
    let step = size - m + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut tf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
    tf.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut tf);
    let scale = 1.0 / size as f64;

    let mut corr = vec![0.0; lags];
    corr.par_chunks_mut(step).enumerate().for_each(|(b, out)| {
        let start = b * step;
        let mut buf: Vec<Complex<f64>> = (0..size)
            .map(|k| Complex::new(x.get(start + k).copied().unwrap_or(0.0), 0.0))
            .collect();
        fwd.process(&mut buf);
        for (v, t) in buf.iter_mut().zip(&tf) {
            *v *= t.conj();
        }
        inv.process(&mut buf);
        for (o, v) in out.iter_mut().zip(&buf) {
            *o = v.re * scale;
        }
    });

    let (s1, s2) = window_moments(&x, m);
    let mf = m as f64;
    Ok((0..lags)
        .into_par_iter()
        .map(|t| T::lit(normalise(corr[t], s1[t], s2[t], mf, tnorm)))
        .collect())
}

/// Direct O(n·m) evaluation of the same scores.
pub fn ncc_direct<T: Scalar>(clip: &AudioClip<T>, tpl: &Template<T>) -> Result<Vec<T>, DetectError> {
    check(clip, tpl)?;
    let y = centred(&tpl.samples);
    let x: Vec<f64> = clip.samples.iter().map(|v| v.as_f64()).collect();
    let m = y.len();
    let tnorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((0..=x.len() - m)
        .into_par_iter()
        .map(|t| {
            let w = &x[t..t + m];
            let mean = w.iter().sum::<f64>() / m as f64;
            let mut num = 0.0;
            let mut den = 0.0;
            let mut raw = 0.0;
            for (a, b) in w.iter().zip(&y) {
                num += (a - mean) * b;
                den += (a - mean) * (a - mean);
                raw += a * a;
            }
            if den <= 1e-10 * raw || den == 0.0 {
                T::zero()
            } else {
                T::lit((num / (den.sqrt() * tnorm)).clamp(-1.0, 1.0))
            }
        })
        .collect())
}
