use serde::{Deserialize, Serialize};

use super::{check_rows, Method, ProjectedPoint, ProjectionSet, ReduceError};
use crate::features::Embedding;
use crate::linalg::{complete_basis, right_svd};
use crate::scalar::{dot, Scalar};

/// Principal axes of a point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel<T> {
    pub mean: Vec<T>,
    /// `k` orthonormal rows, largest-magnitude entry of each positive.
    pub components: Vec<Vec<T>>,
    /// Sample-covariance eigenvalues (divisor `n - 1`), non-increasing.
    pub eigenvalues: Vec<T>,
    pub k: usize,
    /// Set when every input point is identical.
    pub degenerate: bool,
}

/// Fits the top `k` principal components via SVD of the centred data.
pub fn pca_fit<T: Scalar, R: AsRef<[T]>>(rows: &[R], k: usize) -> Result<PcaModel<T>, ReduceError> {
    let n = rows.len();
    if n < 2 {
        return Err(ReduceError::TooFewPoints { needed: 2, got: n });
    }
    let dim = check_rows(rows)?;
    if k == 0 || k > (n - 1).min(dim) {
        return Err(ReduceError::InvalidComponents { k, n, dim });
    }

    let first = rows[0].as_ref();
    let degenerate = rows.iter().all(|r| r.as_ref() == first);
    let mean: Vec<T> = if degenerate {
        first.to_vec()
    } else {
        let nt = T::from_usize_lossy(n);
        (0..dim)
            .map(|j| rows.iter().map(|r| r.as_ref()[j]).sum::<T>() / nt)
            .collect()
    };
    if degenerate {
        let mut components = Vec::with_capacity(k);
        complete_basis(&mut components, dim, k);
        return Ok(PcaModel {
            mean,
            components,
            eigenvalues: vec![T::zero(); k],
            k,
            degenerate,
        });
    }

    let centred: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.as_ref().iter().zip(&mean).map(|(&x, &m)| x - m).collect())
        .collect();
    let svd = right_svd(&centred, dim);
    let denom = T::from_usize_lossy(n - 1);
    let mut components: Vec<Vec<T>> = svd.vectors.into_iter().take(k).collect();
    let have = components.len();
    complete_basis(&mut components, dim, k);
    let eigenvalues = (0..k)
        .map(|i| {
            if i < have {
                (svd.singular_values[i] * svd.singular_values[i] / denom).max(T::zero())
            } else {
                T::zero()
            }
        })
        .collect();
    for c in &mut components {
        orient(c);
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        k,
        degenerate,
    })
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
fn orient<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `(e - mean) . components^T`
pub fn pca_project<T: Scalar>(model: &PcaModel<T>, e: &[T]) -> Result<Vec<T>, ReduceError> {
    if e.len() != model.mean.len() {
        return Err(ReduceError::DimensionMismatch {
            expected: model.mean.len(),
            found: e.len(),
        });
    }
    let centred: Vec<T> = e.iter().zip(&model.mean).map(|(&x, &m)| x - m).collect();
    Ok(model.components.iter().map(|c| dot(&centred, c)).collect())
}

/// Fits a 2-component PCA and projects every embedding.
pub fn pca_projection<T: Scalar>(embeddings: &[Embedding<T>]) -> Result<(PcaModel<T>, ProjectionSet), ReduceError> {
    let model = pca_fit(embeddings, 2)?;
    let points = embeddings
        .iter()
        .map(|e| {
            let p = pca_project(&model, &e.vector)?;
            Ok(ProjectedPoint {
                snippet: e.snippet.clone(),
                x: p[0].as_f64(),
                y: p[1].as_f64(),
            })
        })
        .collect::<Result<Vec<_>, ReduceError>>()?;
    let fit_meta = serde_json::json!({
        "k": 2,
        "eigenvalues": model.eigenvalues.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
        "degenerate": model.degenerate,
    });
    Ok((
        model,
        ProjectionSet {
            method: Method::Pca,
            points,
            fit_meta,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn axis_aligned_points() {
        let rows = vec![vec![1.0f64, 0.0], vec![-1.0, 0.0], vec![2.0, 0.0], vec![-2.0, 0.0]];
        let m = pca_fit(&rows, 2).unwrap();
        assert_eq!(m.components[0], vec![1.0, 0.0]);
        assert!((m.eigenvalues[0] - 10.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.eigenvalues[1], 0.0);
        assert!(!m.degenerate);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let rows = vec![vec![0.1, 0.7, -3.0]; 5];
        let m = pca_fit(&rows, 2).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.eigenvalues, vec![0.0, 0.0]);
        assert_eq!(pca_project(&m, &rows[0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn projection_of_mean_and_unit_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let m = pca_fit(&rows, 2).unwrap();
        let origin = pca_project(&m, &m.mean).unwrap();
        assert!(origin.iter().all(|v: &f64| v.abs() < 1e-15));
        let shifted: Vec<f64> = m.mean.iter().zip(&m.components[0]).map(|(a, b)| a + b).collect();
        let p = pca_project(&m, &shifted).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(pca_fit(&[vec![1.0f64]], 1), Err(ReduceError::TooFewPoints { .. })));
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 7.0]];
        assert!(matches!(pca_fit(&rows, 3), Err(ReduceError::InvalidComponents { .. })));
        let m = pca_fit(&rows, 1).unwrap();
        assert!(matches!(pca_project(&m, &[1.0]), Err(ReduceError::DimensionMismatch { .. })));
        let ragged = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(pca_fit(&ragged, 1).is_err());
    }

    #[test]
    fn rank_deficient_wide_data_gets_completed_basis() {
        // three points on a line in 5-D: one real component, one completed
        let rows = vec![
            vec![0.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0, 0.0, 0.0],
            vec![0.0, 3.0, 0.0, 0.0, 0.0],
        ];
        let m = pca_fit(&rows, 2).unwrap();
        assert_eq!(m.components[0], vec![0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m.eigenvalues[1], 0.0);
        assert!(dot::<f64>(&m.components[0], &m.components[1]).abs() < 1e-12);
        assert!((dot::<f64>(&m.components[1], &m.components[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f32_model() {
        let rows: Vec<Vec<f32>> = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![2.0, 0.1], vec![-2.0, -0.1]];
        let m = pca_fit(&rows, 1).unwrap();
        assert!(m.components[0][0] > 0.99);
    }
}
