//! One-sided (Hestenes) Jacobi SVD.
//!
//! Only the right singular vectors and singular values are produced, which
//! is all PCA needs. The algorithm orthogonalises whichever side of the data
//! matrix has fewer vectors: the `d` columns when `n >= d`, otherwise the
//! `n` rows (the columns of the transpose).

use crate::scalar::{dot, Scalar};

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct RightSvd<T> {
    /// Non-increasing singular values.
    pub singular_values: Vec<T>,
    /// Unit right singular vectors (length `d`), paired with
    /// `singular_values`. Vectors whose singular value is numerically zero
    /// may be missing when `n < d`.
    pub vectors: Vec<Vec<T>>,
    pub sweeps: usize,
}

/// SVD of the `n x d` matrix given as `n` rows.
pub fn right_svd<T: Scalar>(rows: &[Vec<T>], d: usize) -> RightSvd<T> {
    let n = rows.len();
    if n == 0 || d == 0 {
        return RightSvd {
            singular_values: Vec::new(),
            vectors: Vec::new(),
            sweeps: 0,
        };
    }
    if n >= d {
        let mut cols: Vec<Vec<T>> = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let mut v: Vec<Vec<T>> = (0..d)
            .map(|j| {
                let mut e = vec![T::zero(); d];
                e[j] = T::one();
                e
            })
            .collect();
        let sweeps = orthogonalise(&mut cols, Some(&mut v));
        let mut pairs: Vec<(T, Vec<T>)> = cols
            .iter()
            .map(|c| dot(c, c).sqrt())
            .zip(v)
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));
        let (singular_values, vectors) = pairs.into_iter().unzip();
        RightSvd {
            singular_values,
            vectors,
            sweeps,
        }
    } else {
        let mut cols: Vec<Vec<T>> = rows.to_vec();
        let sweeps = orthogonalise(&mut cols, None);
        let mut pairs: Vec<(T, Vec<T>)> = cols
            .into_iter()
            .map(|c| (dot(&c, &c).sqrt(), c))
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));
        let top = pairs.first().map_or(T::zero(), |p| p.0);
        let cutoff = top * T::epsilon() * T::from_usize_lossy(d.max(n)) * T::lit(16.0);
        let mut singular_values = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n);
        for (s, c) in pairs {
            singular_values.push(s);
            if s > cutoff && s > T::zero() {
                vectors.push(c.into_iter().map(|x| x / s).collect());
            }
        }
        RightSvd {
            singular_values,
            vectors,
            sweeps,
        }
    }
}

/// Rotates pairs of vectors until they are mutually orthogonal, applying
/// the same rotations to `acc` when given. Returns the sweep count.
fn orthogonalise<T: Scalar>(cols: &mut [Vec<T>], mut acc: Option<&mut Vec<Vec<T>>>) -> usize {
    let m = cols.len();
    let len = cols.first().map_or(0, Vec::len);
    let tol = T::epsilon() * T::from_usize_lossy(len.max(1));
    let mut norms: Vec<T> = cols.iter().map(|c| dot(c, c)).collect();
    for sweep in 1..=MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m.saturating_sub(1) {
            for q in p + 1..m {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                rotate(&mut left[p], &mut right[0], c, s);
                if let Some(v) = acc.as_deref_mut() {
                    let (vl, vr) = v.split_at_mut(q);
                    rotate(&mut vl[p], &mut vr[0], c, s);
                }
                norms[p] = alpha - t * gamma;
                norms[q] = beta + t * gamma;
            }
        }
        if !rotated {
            return sweep;
        }
        for (nrm, c) in norms.iter_mut().zip(cols.iter()) {
            *nrm = dot(c, c);
        }
    }
    MAX_SWEEPS
}

#[inline]
fn rotate<T: Scalar>(a: &mut [T], b: &mut [T], c: T, s: T) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// Extends `basis` (orthonormal vectors of length `d`) to `k` vectors by
/// Gram-Schmidt over the canonical basis.
pub fn complete_basis<T: Scalar>(basis: &mut Vec<Vec<T>>, d: usize, k: usize) {
    let mut j = 0;
    while basis.len() < k && j < d {
        let mut e = vec![T::zero(); d];
        e[j] = T::one();
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = dot(&e, b);
                for (x, &y) in e.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let nrm = dot(&e, &e).sqrt();
        if nrm > T::lit(1e-6) {
            basis.push(e.into_iter().map(|x| x / nrm).collect());
        }
        j += 1;
    }
}
