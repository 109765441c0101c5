//! Weighted Lloyd k-means with farthest-point seeding.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Lloyd iteration cap.
pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k_requested: usize,
    /// Centroids of the non-empty clusters.
    pub centroids: Vec<Vec<f64>>,
    /// Index into `centroids` for every input point.
    pub assignments: Vec<usize>,
    /// Weighted within-cluster sum of squares after each assignment pass.
    pub inertia_history: Vec<f64>,
}

impl Clustering {
    pub fn live(&self) -> usize {
        self.centroids.len()
    }

    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = dist2(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Unweighted k-means.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Clustering> {
    kmeans_weighted(points, &vec![1; points.len()], k, seed)
}

/// k-means where point `i` stands for `weights[i]` identical copies.
///
/// The first centroid is a weight-proportional random draw; each further
/// centroid is the point farthest from its nearest chosen centroid (ties go
/// to the lower index). Clusters that end up empty are dropped.
pub fn kmeans_weighted(points: &[Vec<f64>], weights: &[usize], k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1"));
    }
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if weights.len() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    let total: usize = weights.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ticket = rng.gen_range(0..total);
    let first = weights
        .iter()
        .position(|&w| {
            if ticket < w {
                true
            } else {
                ticket -= w;
                false
            }
        })
        .expect("ticket below total weight");
    let mut centroids = vec![points[first].clone()];
    let mut gap: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while centroids.len() < k {
        let mut far = (0, -1.0);
        for (i, &d) in gap.iter().enumerate() {
            if weights[i] > 0 && d > far.1 {
                far = (i, d);
            }
        }
        if far.1 <= 0.0 {
            // fewer distinct points than k; the rest would start empty
            break;
        }
        let c = points[far.0].clone();
        for (g, p) in gap.iter_mut().zip(points) {
            *g = g.min(dist2(p, &c));
        }
        centroids.push(c);
    }

    let mut assignments = vec![usize::MAX; points.len()];
    let mut inertia_history = Vec::new();
    for iteration in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            inertia += weights[i] as f64 * d;
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }
        inertia_history.push(inertia);
        // stopping right after an assignment pass keeps every point at its nearest centroid
        if !changed || iteration + 1 == MAX_ITERATIONS {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; centroids.len()];
        let mut mass = vec![0usize; centroids.len()];
        for (i, p) in points.iter().enumerate() {
            let c = assignments[i];
            mass[c] += weights[i];
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += weights[i] as f64 * x;
            }
        }
        for (c, sum) in sums.into_iter().enumerate() {
            if mass[c] > 0 {
                centroids[c] = sum.into_iter().map(|s| s / mass[c] as f64).collect();
            }
        }
    }

    // drop clusters without weight and renumber the rest in order
    let mut mass = vec![0usize; centroids.len()];
    for (i, &c) in assignments.iter().enumerate() {
        mass[c] += weights[i];
    }
    let mut rename = vec![usize::MAX; centroids.len()];
    let mut live = Vec::new();
    for (c, centroid) in centroids.into_iter().enumerate() {
        if mass[c] > 0 {
            rename[c] = live.len();
            live.push(centroid);
        }
    }
    // zero-weight points may sit nearest to a dropped centroid
    let assignments = assignments
        .iter()
        .zip(points)
        .map(|(&c, p)| if rename[c] != usize::MAX { rename[c] } else { nearest(p, &live).0 })
        .collect();
    Ok(Clustering { k_requested: k, centroids: live, assignments, inertia_history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn k1_gives_the_mean() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3.0]];
        let c = kmeans(&pts, 1, 0).unwrap();
        assert_eq!(c.live(), 1);
        assert!((c.centroids[0][0] - 1.0).abs() < 1e-12);
        assert!((c.centroids[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k_equal_to_distinct_points_gives_zero_inertia() {
        let pts = vec![vec![0.0], vec![5.0], vec![5.0], vec![9.0], vec![0.0]];
        let c = kmeans(&pts, 3, 4).unwrap();
        assert_eq!(c.live(), 3);
        assert_eq!(c.inertia(), 0.0);
    }

    #[test]
    fn surplus_clusters_are_dropped() {
        let pts = vec![vec![1.0, 1.0]; 4];
        let c = kmeans(&pts, 5, 0).unwrap();
        assert_eq!(c.live(), 1);
        assert_eq!(c.k_requested, 5);
    }

    #[test]
    fn weights_match_duplication() {
        let pts = vec![vec![0.0], vec![1.0], vec![4.0], vec![10.0]];
        let w = [3, 1, 2, 1];
        let dup: Vec<Vec<f64>> = pts.iter().zip(w).flat_map(|(p, n)| core::iter::repeat(p.clone()).take(n)).collect();
        let a = kmeans_weighted(&pts, &w, 2, 0).unwrap();
        // the duplicated set has the same geometry; with farthest-point
        // seeding both runs converge to the same partition
        let b = kmeans(&dup, 2, 0).unwrap();
        let mut ca = a.centroids.clone();
        let mut cb = b.centroids.clone();
        ca.sort_by(|x, y| x[0].partial_cmp(&y[0]).unwrap());
        cb.sort_by(|x, y| x[0].partial_cmp(&y[0]).unwrap());
        assert_eq!(ca, cb);
    }

    #[test]
    fn errors() {
        assert!(kmeans(&[], 2, 0).is_err());
        assert!(kmeans(&[vec![1.0]], 0, 0).is_err());
        assert!(kmeans(&[vec![1.0], vec![1.0, 2.0]], 1, 0).is_err());
    }

    fn arb_points() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..4).prop_flat_map(|d| proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, d), 1..60))
    }

    proptest! {
        #[test]
        fn lloyd_invariants(pts in arb_points(), k in 1usize..8, seed in any::<u64>()) {
            let c = kmeans(&pts, k, seed).unwrap();
            prop_assert!(c.live() >= 1 && c.live() <= k);
            for w in c.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0]));
            }
            let mut used = vec![false; c.live()];
            for (p, &a) in pts.iter().zip(&c.assignments) {
                used[a] = true;
                let (best, d) = nearest(p, &c.centroids);
                prop_assert!(dist2(p, &c.centroids[a]) <= d + 1e-9, "point not at nearest centroid ({} vs {})", a, best);
            }
            prop_assert!(used.iter().all(|&u| u));
            prop_assert_eq!(c.clone(), kmeans(&pts, k, seed).unwrap());
        }
    }
}
