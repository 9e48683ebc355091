//! Independent reference implementations used by the integration and
//! acceptance tests. They favour obviousness over speed.

#![allow(dead_code)]

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xrf_workbench::cluster::Linkage;
use xrf_workbench::dataset::Dataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(-5.0..5.0))
}

/// Partition as a set of member sets, independent of label numbering.
pub fn partition(labels: &[usize]) -> BTreeSet<BTreeSet<usize>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    (0..k)
        .map(|c| {
            labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == c)
                .map(|(i, _)| i)
                .collect()
        })
        .filter(|s: &BTreeSet<usize>| !s.is_empty())
        .collect()
}

// ---------------------------------------------------------------- statistics

pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Sort, then read quantiles at position p·(n−1) with linear interpolation;
/// two-pass sample standard deviation.
pub fn brute_summary(values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let q = |p: f64| {
        let pos = p * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        0.0
    } else {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Summary {
        mean,
        sd,
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: v[n - 1],
    }
}

// ------------------------------------------------------------------ geometry

/// Winding number of a closed polygon around `p`; a point is inside an
/// even-odd polygon exactly when this is odd.
pub fn winding_number(p: (f64, f64), poly: &[[f64; 2]]) -> i32 {
    let mut wn = 0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let cross = (b[0] - a[0]) * (p.1 - a[1]) - (p.0 - a[0]) * (b[1] - a[1]);
        if a[1] <= p.1 {
            if b[1] > p.1 && cross > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p.1 && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

pub fn distance_to_boundary(p: (f64, f64), poly: &[[f64; 2]]) -> f64 {
    (0..poly.len())
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len2 = dx * dx + dy * dy;
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((p.0 - a[0]) * dx + (p.1 - a[1]) * dy) / len2).clamp(0.0, 1.0)
            };
            ((p.0 - a[0] - t * dx).powi(2) + (p.1 - a[1] - t * dy).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------- clustering

fn euclid2(m: &Array2<f64>, i: usize, j: usize) -> f64 {
    m.row(i)
        .iter()
        .zip(m.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn centroid(m: &Array2<f64>, members: &[usize]) -> Vec<f64> {
    let d = m.ncols();
    let mut c = vec![0.0; d];
    for &i in members {
        for j in 0..d {
            c[j] += m[[i, j]];
        }
    }
    c.iter_mut().for_each(|x| *x /= members.len() as f64);
    c
}

/// Linkage distance between two clusters computed directly from their
/// members. Ward is expressed on the same scale as Lance–Williams applied to
/// squared Euclidean distances: 2·|A||B|/(|A|+|B|)·‖c_A − c_B‖².
pub fn cluster_distance(m: &Array2<f64>, a: &[usize], b: &[usize], linkage: Linkage) -> f64 {
    let pairs = || a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j)));
    match linkage {
        Linkage::Single => pairs()
            .map(|(i, j)| euclid2(m, i, j).sqrt())
            .fold(f64::INFINITY, f64::min),
        Linkage::Complete => pairs().map(|(i, j)| euclid2(m, i, j).sqrt()).fold(0.0, f64::max),
        Linkage::Average => pairs().map(|(i, j)| euclid2(m, i, j).sqrt()).sum::<f64>() / (a.len() * b.len()) as f64,
        Linkage::Ward => {
            let (ca, cb) = (centroid(m, a), centroid(m, b));
            let d2: f64 = ca.iter().zip(&cb).map(|(x, y)| (x - y) * (x - y)).sum();
            let (na, nb) = (a.len() as f64, b.len() as f64);
            2.0 * na * nb / (na + nb) * d2
        }
    }
}

/// Naive agglomeration: recompute every inter-cluster distance at every
/// step. Returns the partition after each merge (index 0 = n−1 clusters)
/// and the merge heights (ward heights as square roots).
pub fn naive_agglomerate(m: &Array2<f64>, linkage: Linkage) -> (Vec<BTreeSet<BTreeSet<usize>>>, Vec<f64>) {
    let n = m.nrows();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut partitions = Vec::new();
    let mut heights = Vec::new();
    while clusters.len() > 1 {
        // clusters stay ordered by their smallest member
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = cluster_distance(m, &clusters[a], &clusters[b], linkage);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        let (d, a, b) = best;
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        clusters[a].sort();
        heights.push(if linkage == Linkage::Ward { d.sqrt() } else { d });
        partitions.push(clusters.iter().map(|c| c.iter().copied().collect()).collect());
    }
    (partitions, heights)
}

/// Optimal discrete k-center radius by trying every set of k centers.
pub fn exhaustive_k_center(m: &Array2<f64>, k: usize) -> f64 {
    fn search(m: &Array2<f64>, k: usize, start: usize, chosen: &mut Vec<usize>, best: &mut f64) {
        if chosen.len() == k {
            let radius = (0..m.nrows())
                .map(|i| chosen.iter().map(|&c| euclid2(m, i, c)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
                .sqrt();
            *best = best.min(radius);
            return;
        }
        for c in start..m.nrows() {
            chosen.push(c);
            search(m, k, c + 1, chosen, best);
            chosen.pop();
        }
    }
    let mut best = f64::INFINITY;
    search(m, k, 0, &mut Vec::new(), &mut best);
    best
}

// ----------------------------------------------------------------- reduction

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        let scale: f64 = (0..n).map(|i| a[[i, i]] * a[[i, i]]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

/// Sample covariance of the columns of `m`.
pub fn covariance(m: &Array2<f64>) -> Array2<f64> {
    let (n, d) = m.dim();
    let means: Vec<f64> = (0..d).map(|j| m.column(j).sum() / n as f64).collect();
    Array2::from_shape_fn((d, d), |(a, b)| {
        (0..n)
            .map(|i| (m[[i, a]] - means[a]) * (m[[i, b]] - means[b]))
            .sum::<f64>()
            / (n - 1) as f64
    })
}

/// Shannon entropy in bits of one probability row, ignoring zeros.
pub fn entropy_bits(row: impl IntoIterator<Item = f64>) -> f64 {
    row.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

// ------------------------------------------------------------------ datasets

pub fn grid_dataset(side: usize, elements: &[&str], seed: u64) -> Dataset {
    let mut r = rng(seed);
    let pts: Vec<([f64; 3], Vec<f64>)> = (0..side * side)
        .map(|i| {
            (
                [(i % side) as f64, (i / side) as f64, 0.0],
                elements.iter().map(|_| r.random_range(0.0..30.0)).collect(),
            )
        })
        .collect();
    Dataset::from_points("grid", elements.iter().map(|s| s.to_string()).collect(), pts).unwrap()
}
