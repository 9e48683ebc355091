//! Element-abundance analysis for micro-XRF point scans: loading,
//! lasso selection into groups, per-group statistics, dimensionality
//! reduction, clustering and workspace persistence, plus an HTTP service
//! over all of it.

pub mod cluster;
pub mod dataset;
pub mod geometry;
pub mod groups;
pub mod metrics;
pub mod reduce;
pub mod service;
pub mod stats;
pub mod synthetic;
pub mod workspace;

pub use cluster::{run_pipeline, Algorithm, ClusterConfig, ClusterError, ClusterResult, Linkage, Reduction};
pub use dataset::{load_dataset, write_dataset, Dataset, DatasetError, SchemaConfig};
pub use geometry::{lasso_select, point_in_polygon, LassoMode, Polygon, Selection};
pub use groups::{GroupError, GroupId, GroupRegistry, PointGroup};
pub use stats::{group_stats, summarize, SummaryStats};
pub use workspace::{export_groups_csv, load_workspace, save_workspace, Workspace, WorkspaceError};
