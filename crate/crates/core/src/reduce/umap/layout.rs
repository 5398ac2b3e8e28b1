use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CurveParams, FuzzyGraph, UmapConfig};
use crate::scalar::Scalar;

const CLIP: f64 = 4.0;
const INIT_RANGE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Layout<T> {
    pub coords: Vec<[T; 2]>,
}

#[inline]
fn clip<T: Scalar>(v: T) -> T {
    v.max(T::lit(-CLIP)).min(T::lit(CLIP))
}

/// Sequential SGD over graph edges; bit-deterministic for a given seed.
///
/// Edges are visited with a frequency proportional to their weight; each
/// visit pulls both endpoints together and pushes the head away from
/// `negative_sample_rate` uniformly drawn vertices. The step size decays
/// linearly to zero.
pub fn optimize_layout<T: Scalar>(graph: &FuzzyGraph<T>, n: usize, curve: &CurveParams, cfg: &UmapConfig) -> Layout<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut coords: Vec<[T; 2]> = (0..n)
        .map(|_| {
            [
                T::lit(rng.random_range(-INIT_RANGE..INIT_RANGE)),
                T::lit(rng.random_range(-INIT_RANGE..INIT_RANGE)),
            ]
        })
        .collect();
    if graph.edges.is_empty() {
        return Layout { coords };
    }

    let (a, b) = (T::lit(curve.a), T::lit(curve.b));
    let two = T::lit(2.0);
    let n_epochs = cfg.n_epochs;
    let max_w = graph.edges.iter().map(|e| e.2).fold(T::zero(), T::max);
    let epochs_per_sample: Vec<T> = graph.edges.iter().map(|e| max_w / e.2).collect();
    let neg_rate = T::from_usize_lossy(cfg.negative_sample_rate.max(1));
    let epochs_per_negative: Vec<T> = epochs_per_sample.iter().map(|&e| e / neg_rate).collect();
    let mut next_sample = epochs_per_sample.clone();
    let mut next_negative = epochs_per_negative.clone();
    let horizon = T::from_usize_lossy(n_epochs);

    for epoch in 0..n_epochs {
        let now = T::from_usize_lossy(epoch);
        let alpha = T::lit(cfg.learning_rate) * (T::one() - now / T::from_usize_lossy(n_epochs));
        for (e, &(head, tail, _)) in graph.edges.iter().enumerate() {
            if next_sample[e] > now || epochs_per_sample[e] > horizon {
                continue;
            }
            let dx = coords[head][0] - coords[tail][0];
            let dy = coords[head][1] - coords[tail][1];
            let d2 = dx * dx + dy * dy;
            if d2 > T::zero() {
                let coeff = -two * a * b * d2.powf(b - T::one()) / (a * d2.powf(b) + T::one());
                let gx = clip(coeff * dx) * alpha;
                let gy = clip(coeff * dy) * alpha;
                coords[head][0] += gx;
                coords[head][1] += gy;
                coords[tail][0] -= gx;
                coords[tail][1] -= gy;
            }
            next_sample[e] += epochs_per_sample[e];

            let n_neg = ((now - next_negative[e]) / epochs_per_negative[e])
                .to_usize()
                .unwrap_or(0);
            for _ in 0..n_neg {
                let k = rng.random_range(0..n);
                if k == head {
                    continue;
                }
                let dx = coords[head][0] - coords[k][0];
                let dy = coords[head][1] - coords[k][1];
                let d2 = dx * dx + dy * dy;
                let (gx, gy) = if d2 > T::zero() {
                    let coeff = two * b / ((T::lit(0.001) + d2) * (a * d2.powf(b) + T::one()));
                    (clip(coeff * dx), clip(coeff * dy))
                } else {
                    (T::lit(CLIP), T::lit(CLIP))
                };
                coords[head][0] += gx * alpha;
                coords[head][1] += gy * alpha;
            }
            next_negative[e] += T::from_usize_lossy(n_neg) * epochs_per_negative[e];
        }
    }
    Layout { coords }
}
