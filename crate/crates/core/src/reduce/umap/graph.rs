use std::collections::BTreeMap;

use super::{Calibration, KnnGraph};
use crate::scalar::Scalar;

/// Probabilistic t-conorm (fuzzy union): `a + b - a*b`, evaluated as
/// `1 - (1-a)(1-b)` so a full-strength side yields exactly 1.
#[inline]
pub fn t_conorm<T: Scalar>(a: T, b: T) -> T {
    T::one() - (T::one() - a) * (T::one() - b)
}

/// Symmetric weighted graph stored as directed edges in both directions,
/// sorted by `(head, tail)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph<T> {
    pub n: usize,
    pub edges: Vec<(usize, usize, T)>,
}

impl<T: Scalar> FuzzyGraph<T> {
    pub fn weight(&self, i: usize, j: usize) -> T {
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&(i, j)))
            .map_or(T::zero(), |pos| self.edges[pos].2)
    }

    /// Dense `n x n` weight matrix; for tests and small inputs.
    pub fn dense(&self) -> Vec<Vec<T>> {
        let mut m = vec![vec![T::zero(); self.n]; self.n];
        for &(i, j, w) in &self.edges {
            m[i][j] = w;
        }
        m
    }
}

pub fn symmetrize<T: Scalar>(knn: &KnnGraph<T>, cal: &Calibration<T>) -> FuzzyGraph<T> {
    let mut pairs: BTreeMap<(usize, usize), (T, T)> = BTreeMap::new();
    for (i, (nbrs, ws)) in knn.indices.iter().zip(&cal.memberships).enumerate() {
        for (&j, &w) in nbrs.iter().zip(ws) {
            if i == j {
                continue;
            }
            let slot = pairs.entry((i.min(j), i.max(j))).or_insert((T::zero(), T::zero()));
            if i < j {
                slot.0 = w;
            } else {
                slot.1 = w;
            }
        }
    }
    let mut edges = Vec::with_capacity(2 * pairs.len());
    for ((i, j), (a, b)) in pairs {
        let w = t_conorm(a, b);
        if w > T::zero() {
            edges.push((i, j, w));
            edges.push((j, i, w));
        }
    }
    edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    FuzzyGraph { n: knn.len(), edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::umap::{knn_graph, smooth_knn};

    #[test]
    fn conorm_identities() {
        assert_eq!(t_conorm(1.0f64, 1.0), 1.0);
        assert_eq!(t_conorm(0.5f64, 0.0), 0.5);
        assert_eq!(t_conorm(0.0f64, 0.0), 0.0);
    }

    #[test]
    fn symmetric_with_unit_interval_weights() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 1.3).sin() * 3.0, (i as f64 * 0.7).cos(), (i % 4) as f64])
            .collect();
        let knn = knn_graph(&rows, 5);
        let cal = smooth_knn(&knn);
        let g = symmetrize(&knn, &cal);
        let m = g.dense();
        for i in 0..30 {
            assert_eq!(m[i][i], 0.0);
            for j in 0..30 {
                assert_eq!(m[i][j], m[j][i]);
                assert!((0.0..=1.0).contains(&m[i][j]));
            }
        }
        // every point keeps its nearest neighbour at full strength
        for i in 0..30 {
            assert_eq!(g.weight(i, knn.indices[i][0]), 1.0);
        }
    }
}
