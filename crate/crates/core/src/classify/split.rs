use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ClassifyError, Labeled};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_frac: 0.8, val_frac: 0.1, test_frac: 0.1, seed: 7, stratified: true }
    }
}

impl SplitSpec {
    fn fracs(&self) -> Result<[f64; 3], ClassifyError> {
        let f = [self.train_frac, self.val_frac, self.test_frac];
        if f.iter().any(|v| !(*v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ClassifyError::InvalidSplit(f));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<Labeled<T>>,
    pub val: Vec<Labeled<T>>,
    pub test: Vec<Labeled<T>>,
}

/// Largest-remainder apportionment of `n` items; ties go to the earlier part.
fn apportion(n: usize, f: [f64; 3]) -> [usize; 3] {
    let raw = f.map(|v| v * n as f64);
    let mut out = raw.map(|v| (v + 1e-9).floor() as usize);
    let mut left = n - out.iter().sum::<usize>().min(n);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = raw[a] - out[a] as f64;
        let rb = raw[b] - out[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

/// Shuffled train/validation/test partition, per class when stratified.
/// Each part keeps the input order of its members.
pub fn split<T: Clone>(data: &[Labeled<T>], spec: &SplitSpec) -> Result<Split<T>, ClassifyError> {
    let f = spec.fracs()?;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    if spec.stratified {
        let n_classes = data.iter().map(|d| d.class + 1).max().unwrap_or(0);
        groups = vec![Vec::new(); n_classes];
        for (i, d) in data.iter().enumerate() {
            groups[d.class].push(i);
        }
        for (c, g) in groups.iter().enumerate() {
            if !g.is_empty() && g.len() < 3 {
                return Err(ClassifyError::ClassTooSmall { class: c, count: g.len() });
            }
        }
    } else {
        groups.push((0..data.len()).collect());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut part = vec![0u8; data.len()];
    for g in &mut groups {
        g.shuffle(&mut rng);
        let [a, b, _] = apportion(g.len(), f);
        for (k, &i) in g.iter().enumerate() {
            part[i] = if k < a { 0 } else if k < a + b { 1 } else { 2 };
        }
    }
    let pick = |p: u8| -> Vec<Labeled<T>> {
        data.iter().zip(&part).filter(|(_, &q)| q == p).map(|(d, _)| d.clone()).collect()
    };
    Ok(Split { train: pick(0), val: pick(1), test: pick(2) })
}
