//! Fits `1 / (1 + a d^(2b))` to the offset exponential that defines how
//! close embedded points may sit.

use serde::{Deserialize, Serialize};

/// Scale of the offset exponential.
pub const SPREAD: f64 = 1.0;
const GRID: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub a: f64,
    pub b: f64,
}

/// 1 below `min_dist`, then `exp(-(d - min_dist) / spread)`.
pub fn curve_target(d: f64, min_dist: f64) -> f64 {
    if d < min_dist {
        1.0
    } else {
        (-(d - min_dist) / SPREAD).exp()
    }
}

/// Levenberg-Marquardt least squares over 300 distances in (0, 3 * spread].
pub fn fit_curve(min_dist: f64) -> CurveParams {
    let ds: Vec<f64> = (1..=GRID).map(|i| 3.0 * SPREAD * i as f64 / GRID as f64).collect();
    let ys: Vec<f64> = ds.iter().map(|&d| curve_target(d, min_dist)).collect();
    let sse = |a: f64, b: f64| -> f64 {
        ds.iter()
            .zip(&ys)
            .map(|(&d, &y)| {
                let r = 1.0 / (1.0 + a * d.powf(2.0 * b)) - y;
                r * r
            })
            .sum()
    };

    let (mut a, mut b) = (1.0, 1.0);
    let mut cost = sse(a, b);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        // normal equations J^T J and J^T r
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&d, &y) in ds.iter().zip(&ys) {
            let p = d.powf(2.0 * b);
            let q = 1.0 + a * p;
            let r = 1.0 / q - y;
            let da = -p / (q * q);
            let db = -a * p * 2.0 * d.ln() / (q * q);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let (maa, mbb) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = maa * mbb - jab * jab;
            let step_a = -(mbb * ga - jab * gb) / det;
            let step_b = -(maa * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            let c = if na > 0.0 && nb > 0.0 { sse(na, nb) } else { f64::INFINITY };
            if c < cost {
                let small = step_a.abs() < 1e-13 * a.abs() && step_b.abs() < 1e-13 * b.abs();
                a = na;
                b = nb;
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if small {
                    return CurveParams { a, b };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    CurveParams { a, b }
}
