//! k-means, agglomerative hierarchical and maximin (farthest-first k-center)
//! clustering, and the pipeline that feeds them from a dataset.

mod hierarchical;
mod kmeans;
mod minmax;

pub use hierarchical::hierarchical;
pub use kmeans::{kmeans, kmeans_best_of};
pub use minmax::minmax_cluster;

use std::collections::BTreeSet;
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::groups::{GroupError, GroupId, GroupRegistry, MAX_GROUPS};
use crate::reduce::{pca_fit_transform, standardize, tsne_embed, ReduceError, TsneConfig};

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_N_INIT: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("{k} clusters requested from {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("input matrix has no rows")]
    EmptyMatrix,
    #[error("invalid `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Groups(#[from] GroupError),
}

impl ClusterError {
    pub fn code(&self) -> &'static str {
        match self {
            ClusterError::KTooLarge { .. } => "KTooLarge",
            ClusterError::EmptyMatrix => "EmptyMatrix",
            ClusterError::InvalidConfig { .. } => "InvalidConfig",
            ClusterError::Dataset(e) => e.code(),
            ClusterError::Reduce(e) => e.code(),
            ClusterError::Groups(e) => e.code(),
        }
    }

    fn invalid(field: &'static str, reason: impl Into<String>) -> ClusterError {
        ClusterError::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Kmeans,
    Hierarchical,
    Minmax,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Hierarchical => "hierarchical",
            Algorithm::Minmax => "minmax",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Single,
    Complete,
    Average,
    Ward,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Single, Linkage::Complete, Linkage::Average, Linkage::Ward];
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    None,
    Pca {
        variance_fraction: f64,
    },
    Tsne(TsneConfig),
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_n_init() -> usize {
    DEFAULT_N_INIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub algorithm: Algorithm,
    pub n_clusters: usize,
    #[serde(default)]
    pub reduction: Reduction,
    /// Required for, and only allowed with, hierarchical clustering.
    #[serde(default)]
    pub linkage: Option<Linkage>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// k-means stops once no centroid moves farther than this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Independent k-means runs; the one with the lowest inertia is kept.
    #[serde(default = "default_n_init")]
    pub n_init: usize,
}

impl ClusterConfig {
    pub fn new(algorithm: Algorithm, n_clusters: usize) -> ClusterConfig {
        ClusterConfig {
            algorithm,
            n_clusters,
            reduction: Reduction::None,
            linkage: (algorithm == Algorithm::Hierarchical).then_some(Linkage::Ward),
            seed: 0,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            n_init: DEFAULT_N_INIT,
        }
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> ClusterConfig {
        self.reduction = reduction;
        self
    }

    pub fn with_linkage(mut self, linkage: Linkage) -> ClusterConfig {
        self.linkage = Some(linkage);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> ClusterConfig {
        self.seed = seed;
        self
    }

    /// Checks that do not depend on the data.
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.n_clusters == 0 {
            return Err(ClusterError::invalid("n_clusters", "must be at least 1"));
        }
        match (self.algorithm, self.linkage) {
            (Algorithm::Hierarchical, None) => {
                return Err(ClusterError::invalid("linkage", "required for hierarchical clustering"))
            }
            (Algorithm::Kmeans | Algorithm::Minmax, Some(_)) => {
                return Err(ClusterError::invalid(
                    "linkage",
                    format!("only applies to hierarchical clustering, not {}", self.algorithm),
                ))
            }
            _ => {}
        }
        if self.max_iter == 0 {
            return Err(ClusterError::invalid("max_iter", "must be at least 1"));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(ClusterError::invalid("tol", "must be a non-negative number"));
        }
        if self.n_init == 0 {
            return Err(ClusterError::invalid("n_init", "must be at least 1"));
        }
        match &self.reduction {
            Reduction::None => {}
            Reduction::Pca { variance_fraction } => {
                if !(*variance_fraction > 0.0 && *variance_fraction <= 1.0) {
                    return Err(ClusterError::invalid("variance_fraction", "must lie in (0, 1]"));
                }
            }
            Reduction::Tsne(t) => t.validate()?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    Kmeans {
        inertia: f64,
        iterations: usize,
        converged: bool,
        /// Inertia after each Lloyd iteration.
        inertia_history: Vec<f64>,
    },
    Hierarchical {
        /// Linkage distance of each merge, in merge order. Ward heights are
        /// reported in Euclidean units.
        merge_heights: Vec<f64>,
    },
    Minmax {
        radius: f64,
        /// Row index of each cluster's center, indexed by label.
        centers: Vec<usize>,
    },
}

/// Labels in `0..k` plus algorithm diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    pub diagnostics: Diagnostics,
    pub config: ClusterConfig,
}

impl ClusterResult {
    pub fn members(&self, cluster: usize) -> BTreeSet<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster)
            .map(|(i, _)| i)
            .collect()
    }
}

pub(crate) fn check_k(m: &Array2<f64>, k: usize) -> Result<(), ClusterError> {
    let n = m.nrows();
    if n == 0 {
        return Err(ClusterError::EmptyMatrix);
    }
    if k == 0 {
        return Err(ClusterError::invalid("n_clusters", "must be at least 1"));
    }
    if k > n {
        return Err(ClusterError::KTooLarge { k, n });
    }
    Ok(())
}

/// Feature selection → standardization → optional reduction → algorithm.
/// A t-SNE reduction without its own seed takes the cluster seed; the
/// echoed config carries the resolved value.
pub fn run_pipeline(
    ds: &Dataset,
    elements: Option<&[String]>,
    cfg: &ClusterConfig,
) -> Result<ClusterResult, ClusterError> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if let Reduction::Tsne(t) = &mut cfg.reduction {
        t.seed.get_or_insert(cfg.seed);
    }
    let n = ds.len();
    if cfg.n_clusters > n {
        return Err(ClusterError::KTooLarge { k: cfg.n_clusters, n });
    }
    let raw = ds.feature_matrix(elements)?;
    let features = if n >= 2 {
        standardize(&raw)?.data
    } else {
        Array2::zeros(raw.dim())
    };
    let reduced = match &cfg.reduction {
        Reduction::None => features,
        Reduction::Pca { variance_fraction } => pca_fit_transform(&features, *variance_fraction)?.1,
        Reduction::Tsne(t) => tsne_embed(&features, t)?,
    };
    let clustering = match cfg.algorithm {
        Algorithm::Kmeans => kmeans_best_of(&reduced, cfg.n_clusters, cfg.seed, cfg.n_init, cfg.max_iter, cfg.tol)?,
        Algorithm::Hierarchical => hierarchical(&reduced, cfg.n_clusters, cfg.linkage.expect("validated"))?,
        Algorithm::Minmax => minmax_cluster(&reduced, cfg.n_clusters)?,
    };
    Ok(ClusterResult {
        labels: clustering.labels,
        n_clusters: cfg.n_clusters,
        diagnostics: clustering.diagnostics,
        config: cfg,
    })
}

/// Turn each cluster into a new unlocked group named
/// `cluster-<i> (<algorithm>)`. Points held by locked groups stay put.
/// Returns the new group ids in cluster order.
pub fn labels_to_groups(result: &ClusterResult, reg: &mut GroupRegistry) -> Result<Vec<GroupId>, ClusterError> {
    if reg.len() + result.n_clusters > MAX_GROUPS {
        return Err(GroupError::GroupLimitExceeded.into());
    }
    if result.labels.len() != reg.point_count() {
        return Err(ClusterError::invalid(
            "labels",
            format!(
                "{} labels for a dataset of {} points",
                result.labels.len(),
                reg.point_count()
            ),
        ));
    }
    let mut staged = reg.clone();
    let mut ids = Vec::with_capacity(result.n_clusters);
    for c in 0..result.n_clusters {
        let id = staged.create_group(format!("cluster-{c} ({})", result.config.algorithm))?;
        staged.assign_selection(id, &result.members(c))?;
        ids.push(id);
    }
    *reg = staged;
    Ok(ids)
}

/// Relabel so clusters are numbered by first appearance in row order.
pub(crate) fn canonical_labels(raw: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    raw.iter()
        .map(|&r| {
            let next = map.len();
            *map.entry(r).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_points(
            "toy",
            vec!["Fe".into(), "Si".into()],
            [
                ([0.0, 0.0, 0.0], vec![0.0, 0.0]),
                ([1.0, 0.0, 0.0], vec![1.0, 0.5]),
                ([2.0, 0.0, 0.0], vec![10.0, 9.0]),
                ([3.0, 0.0, 0.0], vec![11.0, 9.5]),
            ],
        )
        .unwrap()
    }

    fn partition(labels: &[usize]) -> BTreeSet<BTreeSet<usize>> {
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
            .collect()
    }

    #[test]
    fn config_validation() {
        let cfg = ClusterConfig::new(Algorithm::Kmeans, 2).with_linkage(Linkage::Ward);
        assert!(matches!(
            cfg.validate(),
            Err(ClusterError::InvalidConfig { field: "linkage", .. })
        ));
        let mut h = ClusterConfig::new(Algorithm::Hierarchical, 2);
        h.linkage = None;
        assert!(matches!(
            h.validate(),
            Err(ClusterError::InvalidConfig { field: "linkage", .. })
        ));
        let z = ClusterConfig::new(Algorithm::Minmax, 0);
        assert!(matches!(
            z.validate(),
            Err(ClusterError::InvalidConfig {
                field: "n_clusters",
                ..
            })
        ));
        let p = ClusterConfig::new(Algorithm::Kmeans, 2).with_reduction(Reduction::Pca { variance_fraction: 1.2 });
        assert!(matches!(
            p.validate(),
            Err(ClusterError::InvalidConfig {
                field: "variance_fraction",
                ..
            })
        ));
    }

    #[test]
    fn config_json_shape() {
        let json = r#"{"algorithm":"kmeans","n_clusters":5,"reduction":{"kind":"tsne","perplexity":12.0}}"#;
        let cfg: ClusterConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.max_iter, DEFAULT_MAX_ITER);
        assert_eq!(cfg.n_init, DEFAULT_N_INIT);
        match &cfg.reduction {
            Reduction::Tsne(t) => {
                assert_eq!(t.perplexity, 12.0);
                assert_eq!(t.iterations, 1000);
            }
            other => panic!("unexpected {other:?}"),
        }
        let back: ClusterConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<ClusterConfig>(r#"{"algorithm":"kmeans","n_clusters":2,"bogus":1}"#).is_err());
    }

    #[test]
    fn pipeline_matches_direct_kmeans() {
        let ds = toy();
        let cfg = ClusterConfig::new(Algorithm::Kmeans, 2).with_seed(7);
        let res = run_pipeline(&ds, None, &cfg).unwrap();
        let std = standardize(&ds.feature_matrix(None).unwrap()).unwrap().data;
        let direct = kmeans_best_of(&std, 2, 7, DEFAULT_N_INIT, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert_eq!(res.labels, direct.labels);
        assert_eq!(
            partition(&res.labels),
            BTreeSet::from([BTreeSet::from([0, 1]), BTreeSet::from([2, 3])])
        );
    }

    #[test]
    fn full_pca_is_an_isometry_for_clustering() {
        let ds = toy();
        for alg in [Algorithm::Kmeans, Algorithm::Minmax, Algorithm::Hierarchical] {
            let cfg = ClusterConfig::new(alg, 2).with_seed(1);
            let plain = run_pipeline(&ds, None, &cfg).unwrap();
            let pca = run_pipeline(
                &ds,
                None,
                &cfg.clone().with_reduction(Reduction::Pca { variance_fraction: 1.0 }),
            )
            .unwrap();
            assert_eq!(partition(&plain.labels), partition(&pca.labels), "{alg}");
        }
    }

    #[test]
    fn pipeline_errors() {
        let ds = toy();
        let cfg = ClusterConfig::new(Algorithm::Kmeans, 5);
        assert_eq!(
            run_pipeline(&ds, None, &cfg).unwrap_err(),
            ClusterError::KTooLarge { k: 5, n: 4 }
        );
        let cfg = ClusterConfig::new(Algorithm::Kmeans, 2);
        assert!(matches!(
            run_pipeline(&ds, Some(&["Mg".to_string()]), &cfg).unwrap_err(),
            ClusterError::Dataset(DatasetError::UnknownElement(_))
        ));
        let tsne = cfg.with_reduction(Reduction::Tsne(TsneConfig {
            perplexity: 10.0,
            ..Default::default()
        }));
        assert_eq!(run_pipeline(&ds, None, &tsne).unwrap_err().code(), "PerplexityTooLarge");
    }

    fn result(labels: Vec<usize>, k: usize) -> ClusterResult {
        ClusterResult {
            labels,
            n_clusters: k,
            diagnostics: Diagnostics::Minmax {
                radius: 0.0,
                centers: vec![],
            },
            config: ClusterConfig::new(Algorithm::Minmax, k),
        }
    }

    #[test]
    fn labels_become_groups() {
        let mut reg = GroupRegistry::new(3);
        let ids = labels_to_groups(&result(vec![0, 0, 1], 2), &mut reg).unwrap();
        assert_eq!(ids.len(), 2);
        assert_eq!(reg.get(ids[0]).unwrap().members.len(), 2);
        assert_eq!(reg.get(ids[1]).unwrap().members.len(), 1);
        assert_eq!(reg.get(ids[0]).unwrap().name, "cluster-0 (minmax)");
    }

    #[test]
    fn labels_to_groups_cap() {
        let mut reg = GroupRegistry::new(21);
        let before = reg.clone();
        let err = labels_to_groups(&result((0..21).collect(), 21), &mut reg).unwrap_err();
        assert_eq!(err, ClusterError::Groups(GroupError::GroupLimitExceeded));
        assert_eq!(reg, before);
    }

    #[test]
    fn labels_to_groups_respects_locks() {
        let mut reg = GroupRegistry::new(2);
        let locked = reg.create_group("keep").unwrap();
        reg.assign_selection(locked, &BTreeSet::from([1])).unwrap();
        reg.set_locked(locked, true).unwrap();
        let ids = labels_to_groups(&result(vec![0, 0], 1), &mut reg).unwrap();
        assert_eq!(reg.get(ids[0]).unwrap().members, BTreeSet::from([0]));
        assert_eq!(reg.get(locked).unwrap().members, BTreeSet::from([1]));
    }
}
