//! K-means clustering with elbow-based model selection.
//!
//! Lloyd's algorithm with k-means++ seeding, 20 restarts per candidate k,
//! a 300-iteration cap, and 1e-6 relative inertia tolerance. The chosen k
//! sits at the maximum-curvature point of the inertia curve (largest
//! discrete second difference); silhouette is reported for that k.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng;

const RESTARTS: usize = 20;
const MAX_ITERS: usize = 300;
const REL_TOL: f64 = 1e-6;
/// Silhouette is O(n^2); larger datasets are scored on a seeded subsample.
const SILHOUETTE_CAP: usize = 2000;

#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares per candidate k.
    pub inertia_curve: BTreeMap<usize, f64>,
    /// Mean silhouette at the chosen k (0 when k = 1).
    pub silhouette: f64,
    /// Cluster index -> topic label, filled by majority vote.
    pub label_map: BTreeMap<usize, String>,
    /// Chosen-k cluster index per input point.
    pub assignments: Vec<usize>,
    /// Set when the inputs were all identical and k was forced to 1.
    pub degenerate: bool,
}

impl ClusterModel {
    /// Majority true label within each cluster. Ties break toward the
    /// lexicographically smaller label.
    pub fn assign_majority_labels(&mut self, labels: &[String]) -> Result<()> {
        if labels.len() != self.assignments.len() {
            return Err(Error::Analysis(format!(
                "have {} labels for {} clustered points",
                labels.len(),
                self.assignments.len()
            )));
        }
        self.label_map.clear();
        for cluster in 0..self.k {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for (assignment, label) in self.assignments.iter().zip(labels) {
                if *assignment == cluster {
                    *counts.entry(label.as_str()).or_insert(0) += 1;
                }
            }
            if let Some((label, _)) = counts.iter().max_by_key(|(label, n)| (**n, std::cmp::Reverse(**label))) {
                self.label_map.insert(cluster, label.to_string());
            }
        }
        Ok(())
    }

    pub fn label_of_point(&self, point_index: usize) -> Option<&str> {
        self.label_map.get(&self.assignments[point_index]).map(|s| s.as_str())
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp_seed(points: &[Vec<f64>], k: usize, gen: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[gen.gen_range(0..points.len())].clone());
    let mut dist2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total <= 0.0 {
            gen.gen_range(0..points.len())
        } else {
            let mut draw = gen.gen::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, d) in dist2.iter().enumerate() {
                if draw < *d {
                    idx = i;
                    break;
                }
                draw -= d;
            }
            idx
        };
        centroids.push(points[next].clone());
        let last = centroids.last().unwrap();
        for (d, p) in dist2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, last));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<usize>, f64) {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignments = vec![0usize; points.len()];
    let mut inertia = f64::INFINITY;

    for _ in 0..MAX_ITERS {
        let mut new_inertia = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let mut best = (0usize, f64::INFINITY);
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(p, centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            *a = best.0;
            new_inertia += best.1;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (a, p) in assignments.iter().zip(points) {
            counts[*a] += 1;
            for (s, x) in sums[*a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed an empty cluster at the point farthest from its
                // centroid
                let far = assignments
                    .iter()
                    .zip(points)
                    .enumerate()
                    .max_by(|(_, (a, p)), (_, (b, q))| {
                        sq_dist(p, &centroids[**a]).total_cmp(&sq_dist(q, &centroids[**b]))
                    })
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                centroids[c] = points[far].clone();
            } else {
                for (cd, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *cd = s / counts[c] as f64;
                }
            }
        }

        if (inertia - new_inertia).abs() <= REL_TOL * new_inertia.max(f64::MIN_POSITIVE) {
            inertia = new_inertia;
            break;
        }
        inertia = new_inertia;
    }
    (centroids, assignments, inertia)
}

fn best_of_restarts(points: &[Vec<f64>], k: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>, f64) {
    let mut best: Option<(Vec<Vec<f64>>, Vec<usize>, f64)> = None;
    for restart in 0..RESTARTS {
        let mut gen = rng::rng_from(&[seed, k as u64, restart as u64, rng::hash_str("kmeans")]);
        let seeded = kmeans_pp_seed(points, k, &mut gen);
        let run = lloyd(points, seeded);
        if best.as_ref().map_or(true, |b| run.2 < b.2) {
            best = Some(run);
        }
    }
    best.unwrap()
}

fn mean_silhouette(points: &[Vec<f64>], assignments: &[usize], k: usize, seed: u64) -> f64 {
    if k < 2 {
        return 0.0;
    }
    let indices: Vec<usize> = if points.len() > SILHOUETTE_CAP {
        let mut gen = rng::rng_from(&[seed, rng::hash_str("silhouette")]);
        let mut all: Vec<usize> = (0..points.len()).collect();
        for i in 0..SILHOUETTE_CAP {
            let j = gen.gen_range(i..all.len());
            all.swap(i, j);
        }
        all.truncate(SILHOUETTE_CAP);
        all
    } else {
        (0..points.len()).collect()
    };

    let mut total = 0.0;
    let mut counted = 0usize;
    for &i in &indices {
        let own = assignments[i];
        let mut sums = vec![0.0f64; k];
        let mut counts = vec![0usize; k];
        for &j in &indices {
            if i == j {
                continue;
            }
            sums[assignments[j]] += sq_dist(&points[i], &points[j]).sqrt();
            counts[assignments[j]] += 1;
        }
        if counts[own] == 0 {
            // singleton cluster: silhouette 0 by convention
            counted += 1;
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            total += (b - a) / a.max(b);
        }
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}

/// Fits k-means across `k_candidates` and selects k by the elbow rule.
///
/// All-identical inputs force k = 1 with the `degenerate` flag set. With
/// fewer than three candidates there is no curvature to measure; a single
/// candidate is taken as-is and two candidates resolve to the smaller.
pub fn fit_topic_clusters(
    points: &[Vec<f64>],
    k_candidates: RangeInclusive<usize>,
    seed: u64,
) -> Result<ClusterModel> {
    let ks: Vec<usize> = k_candidates.clone().collect();
    if ks.is_empty() || ks[0] < 1 {
        return Err(Error::validation("k candidates must be a nonempty range starting at >= 1"));
    }
    let k_max = *ks.last().unwrap();
    if points.len() < k_max {
        return Err(Error::validation(format!(
            "{} points cannot support k up to {k_max}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite())) {
        return Err(Error::validation("points must share one dimension and be finite"));
    }

    if points.iter().all(|p| p == &points[0]) {
        return Ok(ClusterModel {
            k: 1,
            centroids: vec![points[0].clone()],
            inertia_curve: BTreeMap::from([(1, 0.0)]),
            silhouette: 0.0,
            label_map: BTreeMap::new(),
            assignments: vec![0; points.len()],
            degenerate: true,
        });
    }

    let mut inertia_curve = BTreeMap::new();
    let mut runs: BTreeMap<usize, (Vec<Vec<f64>>, Vec<usize>)> = BTreeMap::new();
    for &k in &ks {
        let (centroids, assignments, inertia) = best_of_restarts(points, k, seed);
        inertia_curve.insert(k, inertia);
        runs.insert(k, (centroids, assignments));
    }

    let chosen = if ks.len() >= 3 {
        // discrete curvature: inertia(k-1) - 2*inertia(k) + inertia(k+1)
        let mut best = (ks[1], f64::NEG_INFINITY);
        for w in ks.windows(3) {
            let curvature = inertia_curve[&w[0]] - 2.0 * inertia_curve[&w[1]] + inertia_curve[&w[2]];
            if curvature > best.1 {
                best = (w[1], curvature);
            }
        }
        best.0
    } else {
        ks[0]
    };

    let (centroids, assignments) = runs.remove(&chosen).unwrap();
    let silhouette = mean_silhouette(points, &assignments, chosen, seed);
    Ok(ClusterModel {
        k: chosen,
        centroids,
        inertia_curve,
        silhouette,
        label_map: BTreeMap::new(),
        assignments,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Anchored Gaussian blobs around orthonormal unit vectors.
    fn blobs(per_blob: usize, anchors: usize, dim: usize, sigma: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for a in 0..anchors {
            for i in 0..per_blob {
                let mut v: Vec<f64> = (0..dim)
                    .map(|c| sigma * rng::hash_normal(&[seed, a as u64, i as u64, c as u64]))
                    .collect();
                v[a] += 1.0;
                points.push(v);
                labels.push(format!("blob{a}"));
            }
        }
        (points, labels)
    }

    // Derived oracle: points generated from 3 separated blobs must come
    // back as k = 3 with assignments matching the generating labels.
    #[test]
    fn three_blobs_select_k3_with_pure_clusters() {
        let (points, labels) = blobs(120, 3, 8, 0.1, 11);
        let mut model = fit_topic_clusters(&points, 1..=8, 11).unwrap();
        assert_eq!(model.k, 3, "inertia curve: {:?}", model.inertia_curve);
        model.assign_majority_labels(&labels).unwrap();
        let pure = (0..points.len())
            .filter(|&i| model.label_of_point(i) == Some(labels[i].as_str()))
            .count();
        assert!(pure as f64 / points.len() as f64 >= 0.99);
        assert!(model.silhouette > 0.5, "silhouette {}", model.silhouette);
    }

    #[test]
    fn identical_points_force_k1() {
        let points = vec![vec![1.0, 2.0]; 40];
        let model = fit_topic_clusters(&points, 1..=8, 3).unwrap();
        assert_eq!(model.k, 1);
        assert!(model.degenerate);
    }

    #[test]
    fn too_few_points_rejected() {
        let points = vec![vec![0.0]; 3];
        assert!(fit_topic_clusters(&points, 1..=8, 3).is_err());
    }

    #[test]
    fn clustering_is_deterministic() {
        let (points, _) = blobs(50, 4, 8, 0.15, 5);
        let a = fit_topic_clusters(&points, 1..=6, 5).unwrap();
        let b = fit_topic_clusters(&points, 1..=6, 5).unwrap();
        assert_eq!(a.k, b.k);
        assert_eq!(a.assignments, b.assignments);
    }
}
