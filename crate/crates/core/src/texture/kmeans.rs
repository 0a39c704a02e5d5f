//! Feature standardization and Lloyd's k-means with k-means++ seeding.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Below this spread a dimension is treated as constant and only centered.
const DEGENERATE_STD: f64 = 1e-12;

impl FeatureScale {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::param("cannot standardize an empty feature set"));
        };
        let dim = first.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch("feature rows differ in length".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((acc, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| {
                if *s > DEGENERATE_STD {
                    (v - m) / s
                } else {
                    v - m
                }
            })
            .collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lower index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-6,
        }
    }
}

/// k-means++ seeding: the first center uniformly, each next one with
/// probability proportional to its squared distance from the chosen set.
pub fn plus_plus_init(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = rng::seeded(seed);
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            return Err(Error::TooFewSamples {
                k,
                available: centroids.len(),
            });
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("total > 0");
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if acc > target && d > 0.0 {
                pick = i;
                break;
            }
        }
        let c = points[pick].clone();
        d2.iter_mut()
            .zip(points)
            .for_each(|(d, p)| *d = d.min(sq_dist(p, &c)));
        centroids.push(c);
    }
    Ok(centroids)
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, options: KMeansOptions) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    if k > points.len() {
        return Err(Error::TooFewSamples {
            k,
            available: points.len(),
        });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::ShapeMismatch("feature rows differ in length".into()));
    }

    let mut centroids = plus_plus_init(points, k, seed)?;
    let assign = |centroids: &[Vec<f64>]| -> (Vec<usize>, Vec<f64>) {
        points.par_iter().map(|p| nearest(p, centroids)).unzip()
    };
    let (mut assignments, mut dists) = assign(&centroids);
    let mut objective = vec![dists.iter().sum::<f64>()];
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        // update step
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
            counts[a] += 1;
        }
        // empty clusters take the point farthest from its own centroid
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..points.len())
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .expect("k <= n leaves a multi-member cluster");
            let old = assignments[far];
            sums[old].iter_mut().zip(&points[far]).for_each(|(s, v)| *s -= v);
            counts[old] -= 1;
            sums[c] = points[far].clone();
            counts[c] = 1;
            assignments[far] = c;
            dists[far] = 0.0;
        }
        let updated: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect();
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;

        let (next, next_d) = assign(&centroids);
        objective.push(next_d.iter().sum());
        let stable = next == assignments;
        assignments = next;
        dists = next_d;
        if stable || shift < options.tolerance {
            break;
        }
    }
    Ok(KMeansFit {
        centroids,
        assignments,
        objective,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(seed: u64) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::seeded(seed);
        let centers = [[0.0, 0.0, 0.0], [5.0, 5.0, 0.0], [0.0, 6.0, -4.0], [7.0, -3.0, 2.0]];
        (0..200)
            .map(|i| {
                let c = centers[i % 4];
                c.iter().map(|v| v + rng.gen_range(-1.0..1.0)).collect()
            })
            .collect()
    }

    #[test]
    fn objective_is_non_increasing_and_final_assignment_is_fixed() {
        for seed in 0..10 {
            let pts = blobs(seed);
            let fit = kmeans(&pts, 4, seed, KMeansOptions::default()).unwrap();
            for w in fit.objective.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", fit.objective);
            }
            for (p, &a) in pts.iter().zip(&fit.assignments) {
                assert_eq!(nearest(p, &fit.centroids).0, a);
            }
            for (c, centroid) in fit.centroids.iter().enumerate() {
                let members: Vec<&Vec<f64>> = pts
                    .iter()
                    .zip(&fit.assignments)
                    .filter(|(_, &a)| a == c)
                    .map(|(p, _)| p)
                    .collect();
                assert!(!members.is_empty());
                for d in 0..3 {
                    let m = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                    assert!((m - centroid[d]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let pts = blobs(3);
        let fit = kmeans(&pts, 4, 11, KMeansOptions::default()).unwrap();
        for i in 0..4 {
            let label = fit.assignments[i];
            assert!((i..200).step_by(4).all(|j| fit.assignments[j] == label));
        }
    }

    #[test]
    fn k_one_and_errors() {
        let pts = blobs(1);
        let fit = kmeans(&pts, 1, 0, KMeansOptions::default()).unwrap();
        assert!(fit.assignments.iter().all(|&a| a == 0));
        assert!(kmeans(&pts[..3], 4, 0, KMeansOptions::default()).is_err());
        assert!(kmeans(&pts, 0, 0, KMeansOptions::default()).is_err());
        let same = vec![vec![1.0, 2.0]; 10];
        assert!(matches!(
            kmeans(&same, 2, 0, KMeansOptions::default()),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn standardization_moments() {
        let pts = blobs(8);
        let mut rows = pts.clone();
        rows.iter_mut().for_each(|r| r.push(4.2));
        let scale = FeatureScale::fit(&rows).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| scale.apply(r)).collect();
        for d in 0..4 {
            let n = z.len() as f64;
            let mean = z.iter().map(|r| r[d]).sum::<f64>() / n;
            let std = (z.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-9);
            if d < 3 {
                assert!((std - 1.0).abs() < 1e-9);
            } else {
                assert_eq!(std, 0.0);
            }
        }
    }
}
