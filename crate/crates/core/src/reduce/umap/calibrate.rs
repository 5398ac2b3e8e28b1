use rayon::prelude::*;

use super::KnnGraph;
use crate::scalar::Scalar;

pub const BISECTION_STEPS: usize = 64;
/// Bracket for the bandwidth search, relative to the mean neighbour gap.
const BRACKET: (f64, f64) = (1e-3, 1e3);
const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCalibration<T> {
    /// Distance to the nearest neighbour.
    pub rho: T,
    pub sigma: T,
    /// Achieved `sum_j exp(-max(0, d_ij - rho) / sigma)`.
    pub achieved: T,
    /// The target was not reachable inside the bracket.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct Calibration<T> {
    pub target: T,
    pub points: Vec<PointCalibration<T>>,
    /// Directed membership strengths, aligned with the kNN lists.
    pub memberships: Vec<Vec<T>>,
}

impl<T> Calibration<T> {
    pub fn flagged_count(&self) -> usize {
        self.points.iter().filter(|p| p.flagged).count()
    }
}

fn membership_sum<T: Scalar>(dists: &[T], rho: T, sigma: T) -> T {
    dists.iter().map(|&d| (-(d - rho).max(T::zero()) / sigma).exp()).sum()
}

/// Finds each point's bandwidth so its neighbour memberships sum to
/// `log2(k)`.
pub fn smooth_knn<T: Scalar>(knn: &KnnGraph<T>) -> Calibration<T> {
    let k = knn.indices.first().map_or(0, Vec::len);
    let target = T::from_usize_lossy(k.max(1)).log2();
    let points: Vec<PointCalibration<T>> = knn
        .distances
        .par_iter()
        .map(|dists| calibrate_point(dists, target))
        .collect();
    let memberships = knn
        .distances
        .iter()
        .zip(&points)
        .map(|(dists, p)| {
            dists
                .iter()
                .map(|&d| (-(d - p.rho).max(T::zero()) / p.sigma).exp())
                .collect()
        })
        .collect();
    Calibration {
        target,
        points,
        memberships,
    }
}

fn calibrate_point<T: Scalar>(dists: &[T], target: T) -> PointCalibration<T> {
    let rho = dists.first().copied().unwrap_or_else(T::zero);
    let gaps: T = dists.iter().map(|&d| d - rho).sum();
    let scale = gaps / T::from_usize_lossy(dists.len().max(1));
    if !(scale > T::zero()) {
        // All neighbours sit at rho; memberships are all 1.
        let sigma = T::one();
        let achieved = membership_sum(dists, rho, sigma);
        return PointCalibration {
            rho,
            sigma,
            achieved,
            flagged: (achieved - target).abs() > T::lit(TOLERANCE),
        };
    }
    let mut lo = scale * T::lit(BRACKET.0);
    let mut hi = scale * T::lit(BRACKET.1);
    let f_lo = membership_sum(dists, rho, lo);
    let f_hi = membership_sum(dists, rho, hi);
    if f_lo > target {
        return PointCalibration {
            rho,
            sigma: lo,
            achieved: f_lo,
            flagged: f_lo - target > T::lit(TOLERANCE),
        };
    }
    if f_hi < target {
        return PointCalibration {
            rho,
            sigma: hi,
            achieved: f_hi,
            flagged: target - f_hi > T::lit(TOLERANCE),
        };
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / T::lit(2.0);
        if membership_sum(dists, rho, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = (lo + hi) / T::lit(2.0);
    let achieved = membership_sum(dists, rho, sigma);
    PointCalibration {
        rho,
        sigma,
        achieved,
        flagged: (achieved - target).abs() > T::lit(TOLERANCE),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_neighbour_membership_is_one() {
        let knn = KnnGraph {
            indices: vec![vec![1, 2, 3]],
            distances: vec![vec![0.5f64, 0.9, 1.7]],
        };
        let c = smooth_knn(&knn);
        assert_eq!(c.memberships[0][0], 1.0);
        assert!(!c.points[0].flagged);
        assert!((c.points[0].achieved - 3f64.log2()).abs() < 1e-4);
        assert!(c.memberships[0].windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn all_tied_neighbours_are_flagged() {
        let knn = KnnGraph {
            indices: vec![vec![1, 2, 3, 4]],
            distances: vec![vec![2.0f64; 4]],
        };
        let c = smooth_knn(&knn);
        assert!(c.points[0].flagged);
        assert_eq!(c.points[0].achieved, 4.0);
    }

    #[test]
    fn many_ties_at_rho_exceed_target() {
        // 5 of 10 neighbours at rho: sum >= 5 > log2(10) for any sigma
        let mut d = vec![1.0f64; 5];
        d.extend([2.0, 3.0, 4.0, 5.0, 6.0]);
        let knn = KnnGraph {
            indices: vec![(1..=10).collect()],
            distances: vec![d],
        };
        assert!(smooth_knn(&knn).points[0].flagged);
    }
}
