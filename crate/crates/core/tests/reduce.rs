mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use triage_core::reduce::umap::{fit_curve, knn_graph, smooth_knn, umap_embed};
use triage_core::reduce::{pca_fit, pca_project, UmapConfig};

#[test]
fn pca_matches_covariance_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows = common::random_matrix(&mut rng, 5, 3);
    let model = pca_fit(&rows, 2).unwrap();
    let (vals, vecs) = common::symmetric_eigen(&common::covariance(&rows));
    for i in 0..2 {
        assert!((model.eigenvalues[i] - vals[i]).abs() < 1e-9);
        let c: f64 = model.components[i].iter().zip(&vecs[i]).map(|(a, b)| a * b).sum();
        assert!((c.abs() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn pca_reconstruction_beats_random_subspaces() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let rows = common::random_matrix(&mut rng, 12, 6);
        let k = 2;
        let model = pca_fit(&rows, k).unwrap();
        let err = |basis: &[Vec<f64>]| -> f64 {
            rows.iter()
                .map(|r| {
                    let c: Vec<f64> = r.iter().zip(&model.mean).map(|(x, m)| x - m).collect();
                    let mut rec = vec![0.0; c.len()];
                    for b in basis {
                        let p: f64 = c.iter().zip(b).map(|(x, y)| x * y).sum();
                        rec.iter_mut().zip(b).for_each(|(r, y)| *r += p * y);
                    }
                    c.iter().zip(&rec).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
                })
                .sum()
        };
        let best = err(&model.components);
        for _ in 0..100 {
            // random orthonormal rank-k basis via Gram-Schmidt
            let mut basis: Vec<Vec<f64>> = Vec::new();
            while basis.len() < k {
                let mut v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
                for b in &basis {
                    let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
                let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                basis.push(v.into_iter().map(|x| x / nrm).collect());
            }
            assert!(best <= err(&basis) + 1e-12);
        }
    }
}

#[test]
fn pca_translation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows = common::random_matrix(&mut rng, 10, 4);
    let shift = [3.0, -7.5, 100.0, 0.25];
    let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
    let (m1, m2) = (pca_fit(&rows, 2).unwrap(), pca_fit(&moved, 2).unwrap());
    for (a, b) in rows.iter().zip(&moved) {
        let (p, q) = (pca_project(&m1, a).unwrap(), pca_project(&m2, b).unwrap());
        for (x, y) in p.iter().zip(&q) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn curve_fit_matches_oracle() {
    for min_dist in [0.1, 0.05, 0.3] {
        let fit = fit_curve(min_dist);
        let (a, b) = common::curve_oracle(min_dist);
        assert!(((fit.a - a) / a).abs() < 1e-3, "a {} vs {a}", fit.a);
        assert!(((fit.b - b) / b).abs() < 1e-3, "b {} vs {b}", fit.b);
    }
}

#[test]
fn calibration_hits_log2_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows = common::random_matrix(&mut rng, 300, 5);
    let cal = smooth_knn(&knn_graph(&rows, 10));
    let target = 10f64.log2();
    for p in &cal.points {
        assert!(p.flagged || (p.achieved - target).abs() < 1e-4);
    }
}

#[test]
fn umap_separates_blobs() {
    let (rows, labels) = common::gaussian_blobs(5, 3, 100, 50, 0.1, 10.0);
    let cfg = UmapConfig::default();
    let out = umap_embed(&rows, &cfg).unwrap();
    let pts: Vec<[f64; 2]> = out.coords.clone();
    let assign = common::kmeans(&pts, 3, 0);
    let purity = common::purity(&assign, &labels, 3);
    assert!(purity >= 0.95, "purity {purity}");
    let again = umap_embed(&rows, &cfg).unwrap();
    assert_eq!(out.coords, again.coords);
}
