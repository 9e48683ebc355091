use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{canonical_labels, check_k, ClusterError, Clustering, Diagnostics};

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One D²-weighted draw. Rounding can leave the target past the end of the
/// cumulative sum, in which case the last positive weight wins.
fn weighted_draw(nearest: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in nearest.iter().enumerate() {
        acc += w;
        if w > 0.0 && acc > target {
            return i;
        }
    }
    nearest.iter().rposition(|&w| w > 0.0).expect("total > 0")
}

/// Greedy k-means++ seeding: first center uniform; each later center is the
/// best of `2 + ln k` D²-weighted candidates, judged by the summed squared
/// distance to the nearest center once it is added. When every remaining
/// point coincides with a center, the lowest unused row is taken.
fn plus_plus_init(m: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = m.nrows();
    let trials = 2 + (k as f64).ln() as usize;
    let mut centers = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(m.row(i), m.row(centers[0]))).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            let pick = (0..n).find(|i| !centers.contains(i)).expect("k <= n");
            centers.push(pick);
            continue;
        }
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let candidate = weighted_draw(&nearest, total, rng);
            let updated: Vec<f64> = nearest
                .iter()
                .enumerate()
                .map(|(i, &d)| d.min(sq_dist(m.row(i), m.row(candidate))))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|(p, _, _)| potential < *p) {
                best = Some((potential, candidate, updated));
            }
        }
        let (_, pick, updated) = best.expect("at least one trial");
        centers.push(pick);
        nearest = updated;
    }
    centers
}

fn nearest_centroid(row: ArrayView1<f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(row, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn inertia(m: &Array2<f64>, labels: &[usize], centroids: &Array2<f64>) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(m.row(i), centroids.row(l)))
        .sum()
}

/// Rows relative to the first row, so a translated input yields the same arithmetic.
fn anchored(m: &Array2<f64>) -> Array2<f64> {
    let origin = m.row(0).to_owned();
    m - &origin
}

/// Lloyd's algorithm with k-means++ initialization.
///
/// Runs until no centroid moves more than `tol` or `max_iter` iterations
/// have passed. An emptied cluster is reseeded with the point lying farthest
/// from its own centroid, taken from a cluster that has more than one member.
/// Labels are numbered by first appearance in point order.
pub fn kmeans(m: &Array2<f64>, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<Clustering, ClusterError> {
    check_k(m, k)?;
    let m = &anchored(m);
    let (n, d) = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = plus_plus_init(m, k, &mut rng);
    let mut centroids = Array2::from_shape_fn((k, d), |(c, j)| m[[init[c], j]]);
    let mut labels = vec![0usize; n];
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..max_iter.max(1) {
        for (i, label) in labels.iter_mut().enumerate() {
            *label = nearest_centroid(m.row(i), &centroids).0;
        }

        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .map(|i| (i, sq_dist(m.row(i), centroids.row(labels[i]))))
                .fold(None, |best: Option<(usize, f64)>, (i, dist)| match best {
                    Some((_, bd)) if bd >= dist => best,
                    _ => Some((i, dist)),
                })
                .map(|(i, _)| i)
                .expect("k <= n leaves a cluster with a spare point");
            sizes[labels[donor]] -= 1;
            labels[donor] = empty;
            sizes[empty] = 1;
            centroids.row_mut(empty).assign(&m.row(donor));
        }

        let mut sums = Array2::<f64>::zeros((k, d));
        for (i, &l) in labels.iter().enumerate() {
            let mut s = sums.row_mut(l);
            s += &m.row(i);
        }
        let mut shift = 0.0f64;
        for (c, &size) in sizes.iter().enumerate() {
            let mean = sums.row(c).mapv(|v| v / size as f64);
            shift = shift.max(sq_dist(mean.view(), centroids.row(c)).sqrt());
            centroids.row_mut(c).assign(&mean);
        }

        history.push(inertia(m, &labels, &centroids));
        if shift <= tol {
            converged = true;
            break;
        }
    }

    Ok(Clustering {
        labels: canonical_labels(&labels),
        diagnostics: Diagnostics::Kmeans {
            inertia: *history.last().expect("at least one iteration"),
            iterations: history.len(),
            converged,
            inertia_history: history,
        },
    })
}

fn final_inertia(c: &Clustering) -> f64 {
    match c.diagnostics {
        Diagnostics::Kmeans { inertia, .. } => inertia,
        _ => unreachable!("kmeans always reports kmeans diagnostics"),
    }
}

/// Runs [`kmeans`] `n_init` times and keeps the lowest final inertia, the
/// earliest run winning ties. The first run uses `seed` itself; later seeds
/// are drawn from a generator seeded with it.
pub fn kmeans_best_of(
    m: &Array2<f64>,
    k: usize,
    seed: u64,
    n_init: usize,
    max_iter: usize,
    tol: f64,
) -> Result<Clustering, ClusterError> {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut best = kmeans(m, k, seed, max_iter, tol)?;
    for _ in 1..n_init {
        let run = kmeans(m, k, seeds.random(), max_iter, tol)?;
        if final_inertia(&run) < final_inertia(&best) {
            best = run;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn inertia_of(c: &Clustering) -> f64 {
        final_inertia(c)
    }

    #[test]
    fn two_pairs() {
        let m = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        for seed in 0..10 {
            let c = kmeans(&m, 2, seed, 300, 1e-4).unwrap();
            assert_eq!(c.labels[0], c.labels[1]);
            assert_eq!(c.labels[2], c.labels[3]);
            assert_ne!(c.labels[0], c.labels[2]);
            assert!((inertia_of(&c) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_cluster_inertia_is_total_scatter() {
        let m = array![[1.0, 2.0], [3.0, 5.0], [4.0, 0.0], [0.0, 1.0]];
        let c = kmeans(&m, 1, 0, 300, 1e-4).unwrap();
        assert!(c.labels.iter().all(|&l| l == 0));
        // column scatter: x mean 2 → 1+1+4+4 = 10; y mean 2 → 0+9+4+1 = 14
        assert!((inertia_of(&c) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n() {
        let m = array![[0.0], [1.0], [5.0], [7.0]];
        let c = kmeans(&m, 4, 3, 300, 1e-4).unwrap();
        let mut labels = c.labels.clone();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
        assert_eq!(inertia_of(&c), 0.0);
    }

    #[test]
    fn duplicate_points_keep_clusters_nonempty() {
        let m = array![[1.0], [1.0], [1.0], [1.0]];
        let c = kmeans(&m, 3, 0, 300, 1e-4).unwrap();
        for cl in 0..3 {
            assert!(c.labels.contains(&cl));
        }
    }

    #[test]
    fn errors() {
        let m = array![[0.0], [1.0]];
        assert_eq!(
            kmeans(&m, 3, 0, 10, 1e-4).unwrap_err(),
            ClusterError::KTooLarge { k: 3, n: 2 }
        );
        let empty = Array2::<f64>::zeros((0, 2));
        assert_eq!(kmeans(&empty, 1, 0, 10, 1e-4).unwrap_err(), ClusterError::EmptyMatrix);
    }

    #[test]
    fn best_of_keeps_lowest_inertia() {
        let m = Array2::from_shape_fn((60, 2), |(i, j)| {
            ((i * 37 + j * 11) % 23) as f64 + (i % 3) as f64 * 40.0
        });
        let best = kmeans_best_of(&m, 4, 9, 8, 300, 1e-6).unwrap();
        assert_eq!(
            kmeans_best_of(&m, 4, 9, 1, 300, 1e-6).unwrap(),
            kmeans(&m, 4, 9, 300, 1e-6).unwrap()
        );
        let mut seeds = ChaCha8Rng::seed_from_u64(9);
        let mut runs = vec![kmeans(&m, 4, 9, 300, 1e-6).unwrap()];
        for _ in 1..8 {
            runs.push(kmeans(&m, 4, seeds.random(), 300, 1e-6).unwrap());
        }
        let lowest = runs.iter().map(inertia_of).fold(f64::INFINITY, f64::min);
        assert_eq!(inertia_of(&best), lowest);
    }
}
