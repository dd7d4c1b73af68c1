//! Cosine k-means used for quadrant validation and topic sub-clustering.
//!
//! Points are L2-normalized, distance is `1 - cos`, and centroids are
//! re-normalized means. Runs are seeded and sequential, so results are
//! reproducible bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::util::derive_seed;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    /// Unit-norm centroids.
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Sum of cosine distances of points to their assigned centroids.
    pub inertia: f64,
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    (1.0 - dot(a, b)).max(0.0)
}

/// k-means++ seeding: subsequent centroids are sampled with probability
/// proportional to their cosine distance from the nearest chosen centroid.
fn plus_plus_init(unit: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = unit.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(unit[rng.random_range(0..n)].clone());
    let mut dists: Vec<f64> = unit
        .iter()
        .map(|p| cosine_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dists.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(unit[next].clone());
        for (i, p) in unit.iter().enumerate() {
            let d = cosine_distance(p, centroids.last().unwrap());
            if d < dists[i] {
                dists[i] = d;
            }
        }
    }
    centroids
}

fn lloyd(unit: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> KMeansFit {
    let n = unit.len();
    let k = centroids.len();
    let dim = unit[0].len();
    let mut assignments = vec![0usize; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, p) in unit.iter().enumerate() {
            let mut best = 0;
            let mut best_dot = f64::NEG_INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = dot(p, c);
                if d > best_dot {
                    best_dot = d;
                    best = j;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in unit.iter().enumerate() {
            counts[assignments[i]] += 1;
            for (d, x) in sums[assignments[i]].iter_mut().zip(p) {
                *d += x;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                // Re-seed an empty cluster at the point farthest from its
                // current centroid.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = cosine_distance(&unit[a], &centroids[assignments[a]]);
                        let db = cosine_distance(&unit[b], &centroids[assignments[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids[j] = unit[far].clone();
                changed = true;
            } else {
                let norm = sums[j].iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    centroids[j] = sums[j].iter().map(|x| x / norm).collect();
                }
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = unit
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| cosine_distance(p, &centroids[a]))
        .sum();
    KMeansFit {
        centroids,
        assignments,
        inertia,
    }
}

/// Runs cosine k-means with `restarts` seeded k-means++ restarts and keeps
/// the fit with the lowest inertia. When `warm_start` centroids are given
/// (typically the best solution for `k - 1`), one extra run starts from
/// them plus the farthest point, which keeps inertia non-increasing in `k`.
///
/// Requires `1 <= k <= points.len()` and nonzero points.
pub fn cosine_kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    warm_start: Option<&[Vec<f64>]>,
) -> KMeansFit {
    assert!(k >= 1 && k <= points.len(), "k must be in [1, n]");
    let unit: Vec<Vec<f64>> = points.iter().map(|p| normalize(p)).collect();

    let mut best: Option<KMeansFit> = None;
    let mut consider = |fit: KMeansFit| {
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    };

    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[k as u64, r as u64]));
        let init = plus_plus_init(&unit, k, &mut rng);
        consider(lloyd(&unit, init, max_iter));
    }
    if let Some(warm) = warm_start {
        if warm.len() == k - 1 {
            let far = unit
                .iter()
                .max_by(|a, b| {
                    let da = warm.iter().map(|c| cosine_distance(a, c)).fold(f64::INFINITY, f64::min);
                    let db = warm.iter().map(|c| cosine_distance(b, c)).fold(f64::INFINITY, f64::min);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            let mut init: Vec<Vec<f64>> = warm.to_vec();
            init.push(far.clone());
            consider(lloyd(&unit, init, max_iter));
        }
    }
    best.expect("at least one restart")
}
