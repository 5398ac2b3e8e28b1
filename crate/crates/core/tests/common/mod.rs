//! Independent oracles shared by the integration and acceptance suites.
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Classical cyclic Jacobi eigensolver for a dense symmetric matrix.
/// Returns eigenvalues in descending order with unit eigenvectors.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| (a[j][j], v.iter().map(|row| row[j]).collect()))
        .collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    pairs.into_iter().unzip()
}

/// Explicit sample covariance (divisor n - 1).
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Least-squares fit of `1/(1 + a d^(2b))` to the offset exponential by a
/// coarse grid search followed by plain Gauss-Newton.
pub fn curve_oracle(min_dist: f64) -> (f64, f64) {
    let ds: Vec<f64> = (1..=300).map(|i| 3.0 * i as f64 / 300.0).collect();
    let ys: Vec<f64> = ds
        .iter()
        .map(|&d| if d < min_dist { 1.0 } else { (-(d - min_dist)).exp() })
        .collect();
    let sse = |a: f64, b: f64| -> f64 {
        ds.iter()
            .zip(&ys)
            .map(|(&d, &y)| (1.0 / (1.0 + a * d.powf(2.0 * b)) - y).powi(2))
            .sum()
    };
    let mut best = (f64::INFINITY, 1.0, 1.0);
    for i in 1..=100 {
        for j in 1..=100 {
            let (a, b) = (i as f64 * 0.05, j as f64 * 0.02);
            let c = sse(a, b);
            if c < best.0 {
                best = (c, a, b);
            }
        }
    }
    let (_, mut a, mut b) = best;
    for _ in 0..100 {
        let (mut h11, mut h12, mut h22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&d, &y) in ds.iter().zip(&ys) {
            let p = d.powf(2.0 * b);
            let q = 1.0 + a * p;
            let r = 1.0 / q - y;
            let ja = -p / (q * q);
            let jb = -2.0 * a * p * d.ln() / (q * q);
            h11 += ja * ja;
            h12 += ja * jb;
            h22 += jb * jb;
            g1 += ja * r;
            g2 += jb * r;
        }
        let det = h11 * h22 - h12 * h12;
        a -= (h22 * g1 - h12 * g2) / det;
        b -= (h11 * g2 - h12 * g1) / det;
    }
    (a, b)
}

/// `clusters` isotropic Gaussian blobs with centres on scaled axes, so
/// every pair of centres is `separation` apart.
pub fn gaussian_blobs(seed: u64, clusters: usize, per: usize, dim: usize, sigma: f64, separation: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let scale = separation / 2f64.sqrt();
    let mut rows = Vec::with_capacity(clusters * per);
    let mut labels = Vec::with_capacity(clusters * per);
    for c in 0..clusters {
        for _ in 0..per {
            let mut p: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
            p[c] += scale;
            rows.push(p);
            labels.push(c);
        }
    }
    (rows, labels)
}

/// Lloyd's k-means with k-means++ seeding; returns assignments.
pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d2 = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let mut centres = vec![points[rng.random_range(0..points.len())]];
    while centres.len() < k {
        let w: Vec<f64> = points
            .iter()
            .map(|p| centres.iter().map(|c| d2(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = w.iter().sum();
        let mut r = rng.random_range(0.0..total);
        let mut pick = points.len() - 1;
        for (i, wi) in w.iter().enumerate() {
            if r < *wi {
                pick = i;
                break;
            }
            r -= wi;
        }
        centres.push(points[pick]);
    }
    let mut assign = vec![0; points.len()];
    for _ in 0..100 {
        for (a, p) in assign.iter_mut().zip(points) {
            *a = (0..k)
                .min_by(|&i, &j| d2(p, &centres[i]).partial_cmp(&d2(p, &centres[j])).unwrap())
                .unwrap();
        }
        for (c, centre) in centres.iter_mut().enumerate() {
            let members: Vec<&[f64; 2]> = points.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                let m = members.len() as f64;
                *centre = [
                    members.iter().map(|p| p[0]).sum::<f64>() / m,
                    members.iter().map(|p| p[1]).sum::<f64>() / m,
                ];
            }
        }
    }
    assign
}

/// Fraction of points whose cluster's majority label matches their own.
pub fn purity(assign: &[usize], labels: &[usize], k: usize) -> f64 {
    let n_labels = labels.iter().max().map_or(0, |m| m + 1);
    let mut correct = 0;
    for c in 0..k {
        let mut counts = vec![0usize; n_labels];
        for (&a, &l) in assign.iter().zip(labels) {
            if a == c {
                counts[l] += 1;
            }
        }
        correct += counts.iter().max().copied().unwrap_or(0);
    }
    correct as f64 / assign.len() as f64
}

/// Zero-normalised cross-correlation by the textbook formula, one lag at a
/// time: both windows mean-removed, dot product over the product of norms.
pub fn ncc_oracle(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = y.len();
    let ym = y.iter().sum::<f64>() / m as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - ym).collect();
    let ynorm = yc.iter().map(|v| v * v).sum::<f64>().sqrt();
    (0..=x.len() - m)
        .map(|t| {
            let w = &x[t..t + m];
            let xm = w.iter().sum::<f64>() / m as f64;
            let xn = w.iter().map(|v| (v - xm) * (v - xm)).sum::<f64>().sqrt();
            if xn < 1e-12 {
                return 0.0;
            }
            w.iter().zip(&yc).map(|(a, b)| (a - xm) * b).sum::<f64>() / (xn * ynorm)
        })
        .collect()
}

/// Softmax cross-entropy of a linear model, written out directly:
/// mean of `log(sum_k exp(z_k)) - z_y` plus `l2/2 * |W|^2`.
pub fn softmax_loss(w: &[f64], b: &[f64], dim: usize, xs: &[Vec<f64>], ys: &[usize], l2: f64) -> f64 {
    let c = b.len();
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z: Vec<f64> = (0..c)
            .map(|k| (0..dim).map(|j| w[k * dim + j] * x[j]).sum::<f64>() + b[k])
            .collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - z[y];
    }
    total / xs.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Points around `classes` well separated centres, one cloud per class.
pub fn separable_clouds(seed: u64, classes: usize, per: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for c in 0..classes {
        let mut centre = vec![0.0; dim];
        centre[c % dim] = 6.0;
        for _ in 0..per {
            xs.push(centre.iter().map(|m| m + noise.sample(&mut rng)).collect());
            ys.push(c);
        }
    }
    (xs, ys)
}
