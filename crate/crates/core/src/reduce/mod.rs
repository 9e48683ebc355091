//! Feature standardization, PCA and exact t-SNE.

mod pca;
mod tsne;

pub use pca::{pca_fit_transform, PcaModel};
pub use tsne::{
    conditional_affinities, joint_probabilities, kl_divergence, tsne_embed, tsne_embed_traced, Affinities, TsneConfig,
    TsneTrace, MAX_TSNE_POINTS,
};

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReduceError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("variance fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("perplexity {perplexity} must be below the point count {points}")]
    PerplexityTooLarge { perplexity: f64, points: usize },
    #[error("t-SNE needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("exact t-SNE is limited to {MAX_TSNE_POINTS} points, got {0}")]
    TooManyPoints(usize),
    #[error("invalid t-SNE setting `{field}`: {reason}")]
    InvalidTsneConfig { field: &'static str, reason: String },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("singular value decomposition failed to converge")]
    SvdFailed,
}

impl ReduceError {
    pub fn code(&self) -> &'static str {
        match self {
            ReduceError::TooFewRows { .. } => "TooFewRows",
            ReduceError::InvalidFraction(_) => "InvalidFraction",
            ReduceError::PerplexityTooLarge { .. } => "PerplexityTooLarge",
            ReduceError::TooFewPoints(_) => "TooFewPoints",
            ReduceError::TooManyPoints(_) => "TooManyPoints",
            ReduceError::InvalidTsneConfig { .. } => "InvalidConfig",
            ReduceError::NonFinite => "NonFiniteValue",
            ReduceError::SvdFailed => "SvdFailed",
        }
    }
}

/// Column z-scores plus the statistics used to produce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedMatrix {
    pub data: Array2<f64>,
    pub column_means: Array1<f64>,
    /// Sample standard deviations; 0 marks a constant column, which is
    /// emitted as all zeros.
    pub column_sds: Array1<f64>,
}

pub fn standardize(m: &Array2<f64>) -> Result<StandardizedMatrix, ReduceError> {
    let n = m.nrows();
    if n < 2 {
        return Err(ReduceError::TooFewRows { needed: 2, got: n });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ReduceError::NonFinite);
    }
    let means = m.mean_axis(Axis(0)).expect("n >= 2");
    let mut data = m - &means;
    let mut sds = Array1::zeros(m.ncols());
    for (j, mut col) in data.axis_iter_mut(Axis(1)).enumerate() {
        let sd = (col.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64).sqrt();
        // a constant column can leave rounding residue after centering
        if sd == 0.0 || sd <= 1e-13 * means[j].abs() {
            col.fill(0.0);
        } else {
            col.mapv_inplace(|v| v / sd);
            sds[j] = sd;
        }
    }
    Ok(StandardizedMatrix {
        data,
        column_means: means,
        column_sds: sds,
    })
}

/// Squared Euclidean distance between rows `i` and `j`.
pub(crate) fn sq_dist(m: &Array2<f64>, i: usize, j: usize) -> f64 {
    m.row(i)
        .iter()
        .zip(m.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}
