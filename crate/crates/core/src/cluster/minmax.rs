use ndarray::{Array2, Axis};

use super::{canonical_labels, check_k, ClusterError, Clustering, Diagnostics};
use crate::reduce::sq_dist;

/// Farthest-first traversal (maximin k-center).
///
/// The first center is the lowest-index point nearest the data centroid;
/// each later center is the non-center point farthest from its nearest
/// chosen center (lowest index on ties). Points join their nearest center,
/// and every center keeps itself even when duplicated. Labels are numbered
/// by first appearance in point order.
pub fn minmax_cluster(m: &Array2<f64>, k: usize) -> Result<Clustering, ClusterError> {
    check_k(m, k)?;
    let n = m.nrows();
    let centroid = m.mean_axis(Axis(0)).expect("n >= 1");
    let to_centroid = |i: usize| -> f64 {
        m.row(i)
            .iter()
            .zip(centroid.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    let first = (0..n).fold(0, |best, i| if to_centroid(i) < to_centroid(best) { i } else { best });

    let mut centers = vec![first];
    let mut is_center = vec![false; n];
    is_center[first] = true;
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(m, i, first)).collect();
    let mut owner = vec![0usize; n];

    while centers.len() < k {
        let next = (0..n)
            .filter(|&i| !is_center[i])
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if nearest[b] >= nearest[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n");
        let c = centers.len();
        centers.push(next);
        is_center[next] = true;
        for i in 0..n {
            let d = sq_dist(m, i, next);
            if d < nearest[i] {
                nearest[i] = d;
                owner[i] = c;
            }
        }
    }
    for (c, &p) in centers.iter().enumerate() {
        owner[p] = c;
        nearest[p] = 0.0;
    }
    let radius = nearest.iter().cloned().fold(0.0f64, f64::max).sqrt();
    let labels = canonical_labels(&owner);
    let mut by_label = vec![0; k];
    for (&old, &new) in owner.iter().zip(&labels) {
        by_label[new] = centers[old];
    }
    Ok(Clustering {
        labels,
        diagnostics: Diagnostics::Minmax {
            radius,
            centers: by_label,
        },
    })
}
