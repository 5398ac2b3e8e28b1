//! Farthest-point decimation of 2-D point sets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // largest distance first; the lower index wins ties
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Grid {
    x0: f64,
    y0: f64,
    cell: f64,
    side: usize,
    cells: Vec<Vec<usize>>,
}

impl Grid {
    fn new(points: &[[f64; 2]]) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p[0]);
            y0 = y0.min(p[1]);
            x1 = x1.max(p[0]);
            y1 = y1.max(p[1]);
        }
        let side = ((points.len() as f64).sqrt() / 2.0).ceil().max(1.0) as usize;
        let extent = (x1 - x0).max(y1 - y0);
        let cell = if extent > 0.0 { extent / side as f64 } else { 1.0 };
        let mut grid = Self { x0, y0, cell, side, cells: vec![Vec::new(); side * side] };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = grid.coords(p);
            grid.cells[cy * side + cx].push(i);
        }
        grid
    }

    fn coords(&self, p: &[f64; 2]) -> (usize, usize) {
        let f = |v: f64, o: f64| (((v - o) / self.cell).floor().max(0.0) as usize).min(self.side - 1);
        (f(p[0], self.x0), f(p[1], self.y0))
    }
}

/// Greedy farthest-point subset of size `cap`, returned as ascending indices.
///
/// Starts from index 0, then repeatedly takes the point farthest from
/// everything taken so far (lowest index on ties). Inputs no larger than
/// `cap` are returned whole.
pub fn farthest_point_indices(points: &[[f64; 2]], cap: usize) -> Vec<usize> {
    let n = points.len();
    if n <= cap {
        return (0..n).collect();
    }
    if cap == 0 {
        return Vec::new();
    }
    let grid = Grid::new(points);
    let sq = |a: &[f64; 2], b: &[f64; 2]| {
        let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
        dx * dx + dy * dy
    };
    let mut d2 = vec![f64::INFINITY; n];
    let mut taken = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(n);
    let mut picked = Vec::with_capacity(cap);

    let mut next = 0;
    loop {
        taken[next] = true;
        picked.push(next);
        if picked.len() == cap {
            break;
        }
        let p = points[next];
        if picked.len() == 1 {
            for i in 1..n {
                d2[i] = sq(&p, &points[i]);
                heap.push(Candidate { d2: d2[i], index: i });
            }
        } else {
            // only points closer to `p` than the current radius can change,
            // and every live distance is at most that radius
            let radius = d2[next].sqrt();
            let lo = grid.coords(&[p[0] - radius, p[1] - radius]);
            let hi = grid.coords(&[p[0] + radius, p[1] + radius]);
            for cy in lo.1..=hi.1 {
                for cx in lo.0..=hi.0 {
                    for &i in &grid.cells[cy * grid.side + cx] {
                        if taken[i] {
                            continue;
                        }
                        let d = sq(&p, &points[i]);
                        if d < d2[i] {
                            d2[i] = d;
                            heap.push(Candidate { d2: d, index: i });
                        }
                    }
                }
            }
        }
        next = loop {
            let c = heap.pop().expect("untaken points remain");
            if !taken[c.index] && c.d2 == d2[c.index] {
                break c.index;
            }
        };
    }
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_inputs_pass_through() {
        let pts = [[0.0, 0.0], [1.0, 1.0]];
        assert_eq!(farthest_point_indices(&pts, 5), vec![0, 1]);
        assert!(farthest_point_indices(&pts, 0).is_empty());
    }

    #[test]
    fn picks_extremes_of_a_line() {
        let pts: Vec<[f64; 2]> = (0..11).map(|i| [i as f64, 0.0]).collect();
        // 0, then 10, then 5
        assert_eq!(farthest_point_indices(&pts, 3), vec![0, 5, 10]);
    }

    #[test]
    fn identical_points_fall_back_to_index_order() {
        let pts = vec![[2.0, 2.0]; 6];
        assert_eq!(farthest_point_indices(&pts, 3), vec![0, 1, 2]);
    }
}
