//! Saving and restoring analysis state, and exporting groups as CSV.

use std::fmt::Write as _;
use std::io::{Read, Write};

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::ClusterConfig;
use crate::dataset::Dataset;
use crate::groups::GroupRegistry;

pub const FORMAT_VERSION: u64 = 1;
pub const WORKSPACE_EXTENSION: &str = ".pxcw.json";

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("unsupported workspace format_version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u64),
    #[error("malformed workspace: {0}")]
    MalformedWorkspace(String),
    #[error("could not write workspace: {0}")]
    SinkFailure(#[from] std::io::Error),
}

impl WorkspaceError {
    pub fn code(&self) -> &'static str {
        match self {
            WorkspaceError::UnsupportedVersion(_) => "UnsupportedVersion",
            WorkspaceError::MalformedWorkspace(_) => "MalformedWorkspace",
            WorkspaceError::SinkFailure(_) => "SinkFailure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    pub source_id: String,
    pub content_hash: String,
    pub point_count: usize,
}

impl DatasetRef {
    pub fn of(ds: &Dataset) -> DatasetRef {
        DatasetRef {
            source_id: ds.source_id().to_string(),
            content_hash: ds.content_hash(),
            point_count: ds.len(),
        }
    }
}

mod timestamp {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

/// Current UTC time at whole-second precision, as stored in workspaces.
pub fn now_utc() -> DateTime<Utc> {
    Utc::now().trunc_subsecs(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub format_version: u64,
    pub dataset: DatasetRef,
    pub registry: GroupRegistry,
    pub last_cluster_config: Option<ClusterConfig>,
    #[serde(with = "timestamp")]
    pub created: DateTime<Utc>,
    #[serde(with = "timestamp")]
    pub modified: DateTime<Utc>,
}

impl Workspace {
    pub fn new(ds: &Dataset, registry: GroupRegistry, at: DateTime<Utc>) -> Workspace {
        let at = at.trunc_subsecs(0);
        Workspace {
            format_version: FORMAT_VERSION,
            dataset: DatasetRef::of(ds),
            registry,
            last_cluster_config: None,
            created: at,
            modified: at,
        }
    }

    pub fn touch(&mut self, at: DateTime<Utc>) {
        self.modified = at.trunc_subsecs(0);
    }

    fn check(&self) -> Result<(), WorkspaceError> {
        if self.registry.point_count() != self.dataset.point_count {
            return Err(WorkspaceError::MalformedWorkspace(format!(
                "registry covers {} points but the dataset reference has {}",
                self.registry.point_count(),
                self.dataset.point_count
            )));
        }
        if let Some(cfg) = &self.last_cluster_config {
            cfg.validate()
                .map_err(|e| WorkspaceError::MalformedWorkspace(format!("last_cluster_config: {e}")))?;
        }
        if self.modified < self.created {
            return Err(WorkspaceError::MalformedWorkspace("modified precedes created".into()));
        }
        Ok(())
    }
}

/// Canonical JSON: fixed key order, groups by id, members ascending,
/// timestamps as `YYYY-MM-DDTHH:MM:SSZ`.
pub fn save_workspace<W: Write>(w: &Workspace, mut sink: W) -> Result<(), WorkspaceError> {
    let bytes = to_canonical_json(w);
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(())
}

pub fn to_canonical_json(w: &Workspace) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(w).expect("workspace serializes");
    bytes.push(b'\n');
    bytes
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedWorkspace {
    pub workspace: Workspace,
    /// The bound dataset's content hash differs from the one recorded.
    pub dataset_mismatch: bool,
}

/// Parse a saved workspace. When `dataset` is given, every member id must
/// fall inside it and a differing content hash sets `dataset_mismatch`.
pub fn load_workspace<R: Read>(mut source: R, dataset: Option<&Dataset>) -> Result<LoadedWorkspace, WorkspaceError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| WorkspaceError::MalformedWorkspace(e.to_string()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| WorkspaceError::MalformedWorkspace(e.to_string()))?;
    match value.get("format_version").map(|v| v.as_u64()) {
        Some(Some(FORMAT_VERSION)) => {}
        Some(Some(other)) => return Err(WorkspaceError::UnsupportedVersion(other)),
        Some(None) => {
            return Err(WorkspaceError::MalformedWorkspace(
                "format_version is not an integer".into(),
            ))
        }
        None => return Err(WorkspaceError::MalformedWorkspace("missing format_version".into())),
    }
    let workspace: Workspace =
        serde_json::from_value(value).map_err(|e| WorkspaceError::MalformedWorkspace(e.to_string()))?;
    workspace.check()?;

    let mut dataset_mismatch = false;
    if let Some(ds) = dataset {
        if let Some(m) = workspace
            .registry
            .groups()
            .iter()
            .flat_map(|g| g.members.iter())
            .find(|&&m| m >= ds.len())
        {
            return Err(WorkspaceError::MalformedWorkspace(format!(
                "member {m} outside dataset of {} points",
                ds.len()
            )));
        }
        dataset_mismatch =
            workspace.dataset.content_hash != ds.content_hash() || workspace.dataset.point_count != ds.len();
    }
    Ok(LoadedWorkspace {
        workspace,
        dataset_mismatch,
    })
}

fn quote(field: &str) -> String {
    format!("\"{}\"", field.replace('"', "\"\""))
}

fn quote_if_needed(field: &str) -> String {
    if field.contains([',', '"', '\r', '\n']) {
        quote(field)
    } else {
        field.to_string()
    }
}

/// One row per point: `point_id,x,y,z,group_id,group_name,annotation`.
/// Ungrouped points leave the last three fields empty; annotations are
/// always quoted.
pub fn export_groups_csv(ds: &Dataset, reg: &GroupRegistry) -> String {
    let mut out = String::from("point_id,x,y,z,group_id,group_name,annotation\r\n");
    for p in ds.points() {
        let _ = write!(out, "{},{},{},{},", p.id, p.x, p.y, p.z);
        if let Some(g) = reg.group_of(p.id) {
            let _ = write!(out, "{},{},", g.group_id, quote_if_needed(&g.name));
            if let Some(a) = &g.annotation {
                out.push_str(&quote(a));
            }
        } else {
            out.push_str(",,");
        }
        out.push_str("\r\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{Algorithm, Reduction};
    use chrono::TimeZone;

    fn toy() -> Dataset {
        Dataset::from_points(
            "toy",
            vec!["Fe".into(), "Si".into()],
            vec![([0.0, 0.0, 0.0], vec![1.0, 2.0]), ([1.5, 2.0, 0.0], vec![3.0, 4.0])],
        )
        .unwrap()
    }

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 3, 1, 12, 0, 0).unwrap()
    }

    #[test]
    fn empty_registry_saves_version_one() {
        let ds = toy();
        let w = Workspace::new(&ds, GroupRegistry::new(2), t0());
        let bytes = to_canonical_json(&w);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["registry"]["groups"].as_array().unwrap().len(), 0);
        assert_eq!(v["created"], "2024-03-01T12:00:00Z");
        assert_eq!(bytes, to_canonical_json(&w));
    }

    #[test]
    fn three_groups_members_ascending() {
        let mut reg = GroupRegistry::new(10);
        for (name, pts) in [("a", vec![9, 3, 5]), ("b", vec![1, 0]), ("c", vec![8, 2])] {
            let id = reg.create_group(name).unwrap();
            reg.assign_selection(id, &pts.into_iter().collect()).unwrap();
        }
        let ds = Dataset::from_points(
            "ten",
            vec!["Fe".into()],
            (0..10).map(|i| ([i as f64, 0.0, 0.0], vec![1.0])),
        )
        .unwrap();
        let mut w = Workspace::new(&ds, reg, t0());
        w.last_cluster_config = Some(ClusterConfig::new(Algorithm::Kmeans, 3).with_reduction(Reduction::Pca {
            variance_fraction: 0.95,
        }));
        let mut buf = Vec::new();
        save_workspace(&w, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let groups = v["registry"]["groups"].as_array().unwrap();
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[0]["members"], serde_json::json!([3, 5, 9]));
        assert_eq!(groups[1]["members"], serde_json::json!([0, 1]));

        let loaded = load_workspace(&buf[..], Some(&ds)).unwrap();
        assert_eq!(loaded.workspace, w);
        assert!(!loaded.dataset_mismatch);
    }

    #[test]
    fn version_gate() {
        let ds = toy();
        let w = Workspace::new(&ds, GroupRegistry::new(2), t0());
        let mut v: serde_json::Value = serde_json::from_slice(&to_canonical_json(&w)).unwrap();
        v["format_version"] = 99.into();
        let err = load_workspace(v.to_string().as_bytes(), None).unwrap_err();
        assert!(matches!(err, WorkspaceError::UnsupportedVersion(99)));
        assert!(matches!(
            load_workspace(&b"{not json"[..], None).unwrap_err(),
            WorkspaceError::MalformedWorkspace(_)
        ));
    }

    #[test]
    fn member_outside_dataset_is_malformed() {
        let ds = toy();
        let mut reg = GroupRegistry::new(5);
        let id = reg.create_group("g").unwrap();
        reg.assign_selection(id, &[4].into_iter().collect()).unwrap();
        let big = Dataset::from_points(
            "five",
            vec!["Fe".into()],
            (0..5).map(|i| ([i as f64, 0.0, 0.0], vec![1.0])),
        )
        .unwrap();
        let w = Workspace::new(&big, reg, t0());
        let err = load_workspace(&to_canonical_json(&w)[..], Some(&ds)).unwrap_err();
        assert!(matches!(err, WorkspaceError::MalformedWorkspace(_)));
    }

    #[test]
    fn registry_invariants_checked_on_load() {
        let ds = toy();
        let w = Workspace::new(&ds, GroupRegistry::new(2), t0());
        let mut v: serde_json::Value = serde_json::from_slice(&to_canonical_json(&w)).unwrap();
        v["registry"]["groups"] = serde_json::json!([
            {"group_id": 0, "name": "a", "color": "#000000", "members": [0], "locked": false, "annotation": null},
            {"group_id": 1, "name": "b", "color": "#111111", "members": [0], "locked": false, "annotation": null}
        ]);
        v["registry"]["next_id"] = 2.into();
        let err = load_workspace(v.to_string().as_bytes(), None).unwrap_err();
        assert!(matches!(err, WorkspaceError::MalformedWorkspace(_)));
    }

    #[test]
    fn hash_mismatch_is_a_warning() {
        let ds = toy();
        let w = Workspace::new(&ds, GroupRegistry::new(2), t0());
        let other = Dataset::from_points(
            "toy",
            vec!["Fe".into(), "Si".into()],
            vec![([0.0, 0.0, 0.0], vec![1.0, 2.0]), ([1.5, 2.0, 0.0], vec![3.0, 4.5])],
        )
        .unwrap();
        let loaded = load_workspace(&to_canonical_json(&w)[..], Some(&other)).unwrap();
        assert!(loaded.dataset_mismatch);
        assert_eq!(loaded.workspace, w);
    }

    struct Broken;

    impl Write for Broken {
        fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
            Err(std::io::Error::other("disk full"))
        }

        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn sink_failure() {
        let ds = toy();
        let w = Workspace::new(&ds, GroupRegistry::new(2), t0());
        assert_eq!(save_workspace(&w, Broken).unwrap_err().code(), "SinkFailure");
    }

    #[test]
    fn export_rows() {
        let ds = toy();
        let mut reg = GroupRegistry::new(2);
        let id = reg.create_group("rim").unwrap();
        reg.assign_selection(id, &[0].into_iter().collect()).unwrap();
        reg.annotate_group(id, "high Fe").unwrap();
        let csv = export_groups_csv(&ds, &reg);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "point_id,x,y,z,group_id,group_name,annotation");
        assert_eq!(lines[1], "0,0,0,0,0,rim,\"high Fe\"");
        assert_eq!(lines[2], "1,1.5,2,0,,,");

        let empty = export_groups_csv(&ds, &GroupRegistry::new(2));
        assert_eq!(empty.lines().count(), 3);
        assert!(empty.lines().skip(1).all(|l| l.ends_with(",,,")));
    }

    #[test]
    fn export_quotes_awkward_names() {
        let ds = toy();
        let mut reg = GroupRegistry::new(2);
        let id = reg.create_group("a,\"b\"").unwrap();
        reg.assign_selection(id, &[1].into_iter().collect()).unwrap();
        reg.annotate_group(id, "line\nbreak").unwrap();
        let csv = export_groups_csv(&ds, &reg);
        let mut rdr = csv::Reader::from_reader(csv.as_bytes());
        let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
        assert_eq!(&rows[1][5], "a,\"b\"");
        assert_eq!(&rows[1][6], "line\nbreak");
    }
}
