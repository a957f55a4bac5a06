//! Diversity-preserving seed selection: K-Means over question embeddings,
//! then a uniform draw from every cluster.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::retrieval::EmbeddingVector;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledItem {
    pub id: String,
    pub cluster: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn kmeans_plus_plus(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding. Returns one cluster index per
/// point. Stops when no assignment changes or after [`MAX_ITERATIONS`].
/// `k` is clamped to the number of points.
pub fn kmeans(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    assert!(k >= 1, "k-means needs at least one cluster");
    if points.is_empty() {
        return Vec::new();
    }
    let k = k.min(points.len());
    let dim = points[0].len();
    let mut centroids = kmeans_plus_plus(points, k, rng);
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    for _ in 0..MAX_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        for (c, (sum, n)) in centroids.iter_mut().zip(sums.into_iter().zip(counts)) {
            // Empty clusters keep their previous centroid.
            if n > 0 {
                *c = sum.into_iter().map(|s| s / n as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }
    assignment
}

/// Clusters `items` and draws `min(per_cluster, |cluster|)` ids uniformly
/// without replacement from each cluster. Output is grouped by cluster; ids
/// within a cluster keep their input order. Deterministic for a fixed seed.
pub fn stratified_seed_sample(
    items: &[(String, EmbeddingVector)],
    n_clusters: usize,
    per_cluster: usize,
    seed: u64,
) -> Vec<SampledItem> {
    assert!(n_clusters >= 1, "need at least one cluster");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<&[f64]> = items.iter().map(|(_, e)| e.as_slice()).collect();
    let assignment = kmeans(&points, n_clusters, &mut rng);
    let n = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = Vec::new();
    for cluster in 0..n {
        let members: Vec<usize> = (0..items.len())
            .filter(|&i| assignment[i] == cluster)
            .collect();
        let take = per_cluster.min(members.len());
        let mut chosen: Vec<usize> = index::sample(&mut rng, members.len(), take)
            .into_iter()
            .map(|j| members[j])
            .collect();
        chosen.sort_unstable();
        out.extend(chosen.into_iter().map(|i| SampledItem {
            id: items[i].0.clone(),
            cluster,
        }));
    }
    out
}
