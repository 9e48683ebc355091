use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::ReduceError;

/// Principal axes retained for a variance fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// d × k, orthonormal columns, sign fixed so each column's
    /// largest-magnitude coordinate is positive.
    pub components: Array2<f64>,
    /// Variance ratio of each retained component, non-increasing.
    pub explained_variance_ratio: Vec<f64>,
    /// Ratios of every component of the decomposition; sums to 1 unless the
    /// input has zero variance.
    pub full_variance_ratio: Vec<f64>,
    pub retained_k: usize,
    pub mean: Array1<f64>,
}

impl PcaModel {
    pub fn transform(&self, m: &Array2<f64>) -> Array2<f64> {
        (m - &self.mean).dot(&self.components)
    }
}

/// Fit PCA through an SVD of the centered matrix and project onto the
/// smallest number of components whose cumulative variance ratio reaches
/// `variance_fraction`.
pub fn pca_fit_transform(m: &Array2<f64>, variance_fraction: f64) -> Result<(PcaModel, Array2<f64>), ReduceError> {
    if !(variance_fraction > 0.0 && variance_fraction <= 1.0) {
        return Err(ReduceError::InvalidFraction(variance_fraction));
    }
    let (n, d) = m.dim();
    if n < 2 {
        return Err(ReduceError::TooFewRows { needed: 2, got: n });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ReduceError::NonFinite);
    }
    let mean = m.mean_axis(Axis(0)).expect("n >= 2");
    let centered = m - &mean;
    if d == 0 {
        let model = PcaModel {
            components: Array2::zeros((0, 0)),
            explained_variance_ratio: Vec::new(),
            full_variance_ratio: Vec::new(),
            retained_k: 0,
            mean,
        };
        return Ok((model, Array2::zeros((n, 0))));
    }

    let fm = faer::Mat::from_fn(n, d, |i, j| centered[[i, j]]);
    let svd = fm.thin_svd().map_err(|_| ReduceError::SvdFailed)?;
    let singular: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let v = svd.V();
    let mut order: Vec<usize> = (0..singular.len()).collect();
    order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]).then(a.cmp(&b)));

    let variances: Vec<f64> = order.iter().map(|&i| singular[i].powi(2)).collect();
    let total: f64 = variances.iter().sum();
    let full_variance_ratio: Vec<f64> = if total > 0.0 {
        variances.iter().map(|v| v / total).collect()
    } else {
        vec![0.0; variances.len()]
    };

    let retained_k = if total > 0.0 {
        let mut cum = 0.0;
        let mut k = full_variance_ratio.len();
        for (i, r) in full_variance_ratio.iter().enumerate() {
            cum += r;
            if cum >= variance_fraction - 1e-12 {
                k = i + 1;
                break;
            }
        }
        k
    } else {
        1
    };

    let mut components = Array2::zeros((d, retained_k));
    for (c, &src) in order.iter().take(retained_k).enumerate() {
        let axis = |j: usize| v[(j, src)];
        let pivot = (0..d).fold(0, |best, j| if axis(j).abs() > axis(best).abs() { j } else { best });
        let sign = if axis(pivot) < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[[j, c]] = sign * axis(j);
        }
    }
    let projection = centered.dot(&components);
    let model = PcaModel {
        components,
        explained_variance_ratio: full_variance_ratio[..retained_k].to_vec(),
        full_variance_ratio,
        retained_k,
        mean,
    };
    Ok((model, projection))
}
