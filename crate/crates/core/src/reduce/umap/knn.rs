use rayon::prelude::*;

use crate::scalar::{sq_dist, Scalar};

/// Exact neighbour lists, nearest first, excluding the point itself.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph<T> {
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<T>>,
}

impl<T> KnnGraph<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Brute-force Euclidean kNN. Equal distances are ordered by index.
pub fn knn_graph<T: Scalar, R: AsRef<[T]> + Sync>(rows: &[R], k: usize) -> KnnGraph<T> {
    let n = rows.len();
    let k = k.min(n.saturating_sub(1));
    let lists: Vec<(Vec<usize>, Vec<T>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = rows[i].as_ref();
            let mut cand: Vec<(T, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(xi, rows[j].as_ref()), j))
                .collect();
            let by_dist = |a: &(T, usize), b: &(T, usize)| {
                a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1))
            };
            if k < cand.len() {
                cand.select_nth_unstable_by(k, by_dist);
                cand.truncate(k);
            }
            cand.sort_by(by_dist);
            cand.into_iter().map(|(d2, j)| (j, d2.sqrt())).unzip()
        })
        .collect();
    let (indices, distances) = lists.into_iter().unzip();
    KnnGraph { indices, distances }
}
