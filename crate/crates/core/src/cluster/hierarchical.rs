//! Agglomerative clustering with Lance–Williams distance updates.
//!
//! Each active cluster lives in the slot of its smallest point index. A
//! per-slot nearest-neighbour cache (over higher slots only) makes the usual
//! case O(n²); a slot's cache is rebuilt when its neighbour is merged away or
//! moves farther.

use ndarray::Array2;

use super::{canonical_labels, check_k, ClusterError, Clustering, Diagnostics, Linkage};
use crate::reduce::sq_dist;

/// Condensed upper-triangular distance storage.
struct Condensed {
    n: usize,
    data: Vec<f64>,
}

impl Condensed {
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.index(i, j);
        self.data[idx] = v;
    }
}

fn lance_williams(linkage: Linkage, d_im: f64, d_jm: f64, d_ij: f64, n_i: f64, n_j: f64, n_m: f64) -> f64 {
    match linkage {
        Linkage::Single => d_im.min(d_jm),
        Linkage::Complete => d_im.max(d_jm),
        Linkage::Average => (n_i * d_im + n_j * d_jm) / (n_i + n_j),
        Linkage::Ward => ((n_i + n_m) * d_im + (n_j + n_m) * d_jm - n_m * d_ij) / (n_i + n_j + n_m),
    }
}

struct Neighbours {
    dist: Vec<f64>,
    idx: Vec<Option<usize>>,
}

fn rebuild_row(i: usize, active: &[bool], dist: &Condensed, nn: &mut Neighbours) {
    let mut best = (f64::INFINITY, None);
    for (j, _) in active.iter().enumerate().skip(i + 1).filter(|(_, &alive)| alive) {
        let d = dist.get(i, j);
        if d < best.0 || best.1.is_none() {
            best = (d, Some(j));
        }
    }
    nn.dist[i] = best.0;
    nn.idx[i] = best.1;
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Merge from singletons until `k` clusters remain. Distances are Euclidean
/// (squared Euclidean for ward). Among equally close pairs the one with the
/// smallest (i, j) slot order merges first.
pub fn hierarchical(m: &Array2<f64>, k: usize, linkage: Linkage) -> Result<Clustering, ClusterError> {
    check_k(m, k)?;
    let n = m.nrows();
    let mut dist = Condensed {
        n,
        data: Vec::with_capacity(n * (n - 1) / 2),
    };
    for i in 0..n {
        for j in i + 1..n {
            let d2 = sq_dist(m, i, j);
            dist.data.push(if linkage == Linkage::Ward { d2 } else { d2.sqrt() });
        }
    }

    let mut active = vec![true; n];
    let mut sizes = vec![1usize; n];
    let mut parent: Vec<usize> = (0..n).collect();
    let mut nn = Neighbours {
        dist: vec![f64::INFINITY; n],
        idx: vec![None; n],
    };
    for i in 0..n {
        rebuild_row(i, &active, &dist, &mut nn);
    }

    let mut heights = Vec::with_capacity(n - k);
    for _ in 0..n - k {
        let mut pick: Option<(usize, f64)> = None;
        for (i, &alive) in active.iter().enumerate() {
            if alive && nn.idx[i].is_some() && pick.is_none_or(|(_, d)| nn.dist[i] < d) {
                pick = Some((i, nn.dist[i]));
            }
        }
        let (i, d_ij) = pick.expect("at least two active clusters");
        let j = nn.idx[i].expect("checked");

        let (n_i, n_j) = (sizes[i] as f64, sizes[j] as f64);
        for other in 0..n {
            if !active[other] || other == i || other == j {
                continue;
            }
            let updated = lance_williams(
                linkage,
                dist.get(i, other),
                dist.get(j, other),
                d_ij,
                n_i,
                n_j,
                sizes[other] as f64,
            );
            dist.set(i, other, updated);
        }
        active[j] = false;
        sizes[i] += sizes[j];
        parent[j] = i;
        heights.push(if linkage == Linkage::Ward {
            d_ij.max(0.0).sqrt()
        } else {
            d_ij
        });

        rebuild_row(i, &active, &dist, &mut nn);
        for other in 0..n {
            if !active[other] || other == i {
                continue;
            }
            match nn.idx[other] {
                Some(t) if t == i || t == j => rebuild_row(other, &active, &dist, &mut nn),
                Some(t) if other < i => {
                    let d = dist.get(other, i);
                    if d < nn.dist[other] || (d == nn.dist[other] && i < t) {
                        nn.dist[other] = d;
                        nn.idx[other] = Some(i);
                    }
                }
                _ => {}
            }
        }
    }

    let roots: Vec<usize> = (0..n).map(|p| find(&mut parent, p)).collect();
    Ok(Clustering {
        labels: canonical_labels(&roots),
        diagnostics: Diagnostics::Hierarchical { merge_heights: heights },
    })
}
