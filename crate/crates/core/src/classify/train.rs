use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifierModel, ClassifyError, Labeled};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 100, batch: 64, lr: 0.05, l2: 1e-4, seed: 7 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainMeta {
    pub config: TrainConfig,
    /// Full training objective after each epoch.
    pub train_losses: Vec<f64>,
    /// Mean validation cross-entropy after each epoch (empty without a validation set).
    pub val_losses: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub train_accuracy: f64,
    pub n_train: usize,
    pub n_val: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub loss: T,
    /// Same layout as [`ClassifierModel::weights`].
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Mean cross-entropy over the batch plus `l2/2 * |W|^2`, and its gradient.
/// The bias is not regularised.
pub fn loss_and_gradient<T: Scalar, X: AsRef<[T]>>(
    model: &ClassifierModel<T>,
    xs: &[X],
    ys: &[usize],
    l2: T,
) -> Result<Gradient<T>, ClassifyError> {
    let c = model.classes.len();
    let d = model.dim;
    let mut gw = vec![T::zero(); c * d];
    let mut gb = vec![T::zero(); c];
    let mut loss = T::zero();
    for (x, &y) in xs.iter().zip(ys) {
        let x = x.as_ref();
        let logits = model.logits(x)?;
        let max = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let total: T = logits.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + total.ln();
        loss += lse - logits[y];
        for k in 0..c {
            let delta = (logits[k] - lse).exp() - if k == y { T::one() } else { T::zero() };
            gb[k] += delta;
            for (g, &v) in gw[k * d..(k + 1) * d].iter_mut().zip(x) {
                *g += delta * v;
            }
        }
    }
    let inv = T::one() / T::from_usize_lossy(xs.len().max(1));
    let reg: T = model.weights.iter().map(|&w| w * w).sum();
    for (g, &w) in gw.iter_mut().zip(&model.weights) {
        *g = *g * inv + l2 * w;
    }
    gb.iter_mut().for_each(|g| *g *= inv);
    Ok(Gradient { loss: loss * inv + l2 * T::lit(0.5) * reg, weights: gw, bias: gb })
}

fn mean_cross_entropy<T: Scalar>(model: &ClassifierModel<T>, xs: &[Vec<T>], ys: &[usize]) -> f64 {
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let logits = model.logits(x).expect("dimension checked");
        let max = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let lse = max + logits.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        total += (lse - logits[y]).as_f64();
    }
    total / xs.len().max(1) as f64
}

/// Per-feature mean and standard deviation of the training rows; constant
/// features get a unit scale.
fn standardiser<T: Scalar>(rows: &[Labeled<T>], dim: usize) -> (Vec<T>, Vec<T>) {
    let n = T::from_usize_lossy(rows.len());
    let mut mu = vec![T::zero(); dim];
    for r in rows {
        for (m, &v) in mu.iter_mut().zip(&r.vector) {
            *m += v;
        }
    }
    mu.iter_mut().for_each(|m| *m /= n);
    let mut sd = vec![T::zero(); dim];
    for r in rows {
        for ((s, &v), &m) in sd.iter_mut().zip(&r.vector).zip(&mu) {
            *s += (v - m) * (v - m);
        }
    }
    for (s, &m) in sd.iter_mut().zip(&mu) {
        let v = (*s / n).sqrt();
        *s = if v > T::lit(1e-9) * (T::one() + m.abs()) { v } else { T::one() };
    }
    (mu, sd)
}

/// Mini-batch gradient descent on standardised features, starting from zero
/// weights. The parameters with the lowest validation loss are folded back
/// into raw-feature space and returned.
pub fn train<T: Scalar>(
    train_set: &[Labeled<T>],
    val_set: &[Labeled<T>],
    classes: Vec<String>,
    cfg: &TrainConfig,
) -> Result<ClassifierModel<T>, ClassifyError> {
    let c = classes.len();
    let mut present = vec![false; c];
    for s in train_set {
        if s.class >= c {
            return Err(ClassifyError::UnknownClass(format!("class index {}", s.class)));
        }
        present[s.class] = true;
    }
    if c < 2 || present.iter().filter(|&&p| p).count() < 2 {
        return Err(ClassifyError::SingleClassInput);
    }
    let dim = train_set[0].vector.len();
    for s in train_set.iter().chain(val_set) {
        if s.vector.len() != dim {
            return Err(ClassifyError::DimensionMismatch { expected: dim, found: s.vector.len() });
        }
    }

    let (mu, sd) = standardiser(train_set, dim);
    let scale = |rows: &[Labeled<T>]| -> (Vec<Vec<T>>, Vec<usize>) {
        let xs = rows
            .iter()
            .map(|r| r.vector.iter().zip(&mu).zip(&sd).map(|((&v, &m), &s)| (v - m) / s).collect())
            .collect();
        (xs, rows.iter().map(|r| r.class).collect())
    };
    let (tx, ty) = scale(train_set);
    let (vx, vy) = scale(val_set);

    let lr = T::lit(cfg.lr);
    let l2 = T::lit(cfg.l2);
    let batch = cfg.batch.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = ClassifierModel::<T>::zeros(classes, dim);
    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut meta = TrainMeta { config: *cfg, n_train: tx.len(), n_val: vx.len(), ..TrainMeta::default() };
    let mut order: Vec<usize> = (0..tx.len()).collect();
    let mut last = f64::NAN;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let xs: Vec<&[T]> = chunk.iter().map(|&i| tx[i].as_slice()).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| ty[i]).collect();
            let g = loss_and_gradient(&model, &xs, &ys, l2)?;
            if !g.loss.is_finite() {
                return Err(ClassifyError::NonFiniteLoss { epoch, last });
            }
            for (w, &d) in model.weights.iter_mut().zip(&g.weights) {
                *w -= lr * d;
            }
            for (b, &d) in model.bias.iter_mut().zip(&g.bias) {
                *b -= lr * d;
            }
        }
        let full = loss_and_gradient(&model, &tx, &ty, l2)?.loss.as_f64();
        if !full.is_finite() {
            return Err(ClassifyError::NonFiniteLoss { epoch, last });
        }
        last = full;
        meta.train_losses.push(full);
        let score = if vx.is_empty() {
            // without validation data the latest epoch wins
            -(epoch as f64)
        } else {
            let v = mean_cross_entropy(&model, &vx, &vy);
            meta.val_losses.push(v);
            v
        };
        if score < best_val {
            best_val = score;
            best = model.clone();
            meta.best_epoch = epoch;
        }
    }
    if cfg.epochs == 0 {
        meta.best_epoch = 0;
    }

    let correct = tx
        .iter()
        .zip(&ty)
        .filter(|(x, &y)| {
            let p = best.logits(x).expect("dimension checked");
            let mut arg = 0;
            for (k, v) in p.iter().enumerate() {
                if *v > p[arg] {
                    arg = k;
                }
            }
            arg == y
        })
        .count();
    meta.train_accuracy = correct as f64 / tx.len().max(1) as f64;

    // fold standardisation into the exported parameters
    let mut out = ClassifierModel::<T>::zeros(best.classes.clone(), dim);
    for k in 0..c {
        let row = best.row(k);
        let folded: Vec<T> = row.iter().zip(&sd).map(|(&w, &s)| w / s).collect();
        out.bias[k] = best.bias[k] - dot(&folded, &mu);
        out.weights[k * dim..(k + 1) * dim].copy_from_slice(&folded);
    }
    out.train_meta = meta;
    out.validate()?;
    Ok(out)
}
