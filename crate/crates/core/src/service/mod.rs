//! JSON-over-HTTP facade: dataset access, statistics, clustering, group
//! edits and workspace save/load.
//!
//! Each dataset carries one session (registry plus workspace metadata)
//! behind a mutex, so group edits apply in a single total order; every
//! mutation bumps a revision number that is returned to the caller.

mod error;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tower_http::cors::{Any, CorsLayer};

pub use error::{ApiError, ErrorBody};

use crate::cluster::{run_pipeline, ClusterConfig, Reduction};
use crate::dataset::{load_dataset, BoundingBox, Dataset, SchemaConfig};
use crate::geometry::{enclosed_points, Polygon, Selection};
use crate::groups::{AssignOutcome, GroupId, GroupRegistry};
use crate::reduce::MAX_TSNE_POINTS;
use crate::stats::{group_stats, pcp_axes, sort_elements, DisplayScale, PcpAxes, SortOrder, StatsError, SummaryStats};
use crate::workspace::{load_workspace, now_utc, to_canonical_json, DatasetRef, Workspace, WORKSPACE_EXTENSION};

pub const DEFAULT_CLUSTER_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Seed used when a cluster request does not name one.
    pub default_seed: u64,
    pub cluster_timeout: Duration,
    /// When set, each dataset's workspace is restored from and written to
    /// `<dir>/<dataset id>.pxcw.json`.
    pub workspace_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            default_seed: 0,
            cluster_timeout: DEFAULT_CLUSTER_TIMEOUT,
            workspace_dir: None,
        }
    }
}

#[derive(Debug)]
struct Session {
    workspace: Workspace,
    revision: u64,
}

#[derive(Debug)]
pub struct DatasetEntry {
    dataset: Arc<Dataset>,
    session: Mutex<Session>,
    tsne_gate: Arc<Semaphore>,
}

impl DatasetEntry {
    fn session(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }
}

#[derive(Debug)]
pub struct AppState {
    datasets: BTreeMap<String, Arc<DatasetEntry>>,
    config: ServiceConfig,
}

impl AppState {
    /// Register datasets under their ids, restoring saved workspaces when a
    /// workspace directory is configured.
    pub fn new(config: ServiceConfig, datasets: Vec<(String, Dataset)>) -> Result<AppState, String> {
        let mut map = BTreeMap::new();
        for (id, ds) in datasets {
            let mut workspace = Workspace::new(&ds, GroupRegistry::new(ds.len()), now_utc());
            if let Some(path) = config.workspace_dir.as_ref().map(|d| workspace_path(d, &id)) {
                if path.exists() {
                    let file = fs::File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    let loaded = load_workspace(file, Some(&ds)).map_err(|e| format!("{}: {e}", path.display()))?;
                    if loaded.dataset_mismatch {
                        tracing::warn!(dataset = %id, "saved workspace was made from different data");
                    }
                    workspace = rebind(loaded.workspace, &ds, loaded.dataset_mismatch)?;
                }
            }
            let entry = DatasetEntry {
                dataset: Arc::new(ds),
                session: Mutex::new(Session { workspace, revision: 0 }),
                tsne_gate: Arc::new(Semaphore::new(1)),
            };
            if map.insert(id.clone(), Arc::new(entry)).is_some() {
                return Err(format!("duplicate dataset id `{id}`"));
            }
        }
        Ok(AppState { datasets: map, config })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn entry(&self, id: &str) -> Result<&Arc<DatasetEntry>, ApiError> {
        self.datasets.get(id).ok_or_else(|| ApiError::unknown_dataset(id))
    }

    /// Current registry and revision of a dataset.
    pub fn registry(&self, id: &str) -> Option<(GroupRegistry, u64)> {
        let entry = self.datasets.get(id)?;
        let s = entry.session();
        Some((s.workspace.registry.clone(), s.revision))
    }

    fn persist(&self, id: &str, w: &Workspace) -> Result<(), ApiError> {
        let Some(dir) = &self.config.workspace_dir else {
            return Ok(());
        };
        let path = workspace_path(dir, id);
        let tmp = path.with_extension("tmp");
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&to_canonical_json(w))?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "SinkFailure", e.to_string()))
    }
}

fn workspace_path(dir: &FsPath, id: &str) -> PathBuf {
    dir.join(format!("{id}{WORKSPACE_EXTENSION}"))
}

/// Bind a loaded workspace to `ds`, refitting the registry to its size when
/// the recorded dataset differs.
fn rebind(mut w: Workspace, ds: &Dataset, mismatch: bool) -> Result<Workspace, String> {
    if mismatch {
        let r = &w.registry;
        w.registry = GroupRegistry::from_parts(ds.len(), r.next_id(), r.active_group(), r.groups().to_vec())?;
        w.dataset = DatasetRef::of(ds);
    }
    Ok(w)
}

/// Load one CSV file, or every `.csv` file in a directory, keyed by file
/// stem.
pub fn load_data_path(path: &FsPath, schema: &SchemaConfig) -> Result<Vec<(String, Dataset)>, String> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| format!("{}: {e}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    files
        .into_iter()
        .map(|p| {
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| format!("{}: no file name", p.display()))?;
            let file = fs::File::open(&p).map_err(|e| format!("{}: {e}", p.display()))?;
            let ds = load_dataset(file, schema, &id).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok((id, ds))
        })
        .collect()
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any);
    Router::new()
        .route("/api/datasets", get(list_datasets))
        .route("/api/datasets/{id}", get(get_dataset))
        .route("/api/datasets/{id}/stats", get(get_stats))
        .route("/api/datasets/{id}/pcp", get(get_pcp))
        .route("/api/datasets/{id}/cluster", post(post_cluster))
        .route("/api/datasets/{id}/groups", get(get_groups).post(post_groups))
        .route("/api/datasets/{id}/workspace", get(get_workspace).put(put_workspace))
        .route("/api/datasets/{id}/export", get(get_export))
        .layer(cors)
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8], code: &str) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(code, e.to_string()))
}

fn json_bytes(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub source_id: String,
    pub point_count: usize,
    pub element_names: Vec<String>,
    pub content_hash: String,
}

async fn list_datasets(State(app): State<Arc<AppState>>) -> Json<Vec<DatasetSummary>> {
    Json(
        app.datasets
            .iter()
            .map(|(id, e)| DatasetSummary {
                id: id.clone(),
                source_id: e.dataset.source_id().to_string(),
                point_count: e.dataset.len(),
                element_names: e.dataset.element_names().to_vec(),
                content_hash: e.dataset.content_hash(),
            })
            .collect(),
    )
}

#[derive(Serialize)]
struct PointView<'a> {
    id: usize,
    x: f64,
    y: f64,
    z: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct DatasetView<'a> {
    id: &'a str,
    source_id: &'a str,
    content_hash: String,
    element_names: &'a [String],
    bounding_box: Option<BoundingBox>,
    points: Vec<PointView<'a>>,
}

fn flag(q: &HashMap<String, String>, key: &str) -> Result<bool, ApiError> {
    match q.get(key).map(String::as_str) {
        None | Some("false") | Some("0") => Ok(false),
        Some("true") | Some("1") | Some("") => Ok(true),
        Some(other) => Err(ApiError::bad_request(
            "MalformedRequest",
            format!("`{key}` must be true or false, got `{other}`"),
        )),
    }
}

async fn get_dataset(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let entry = app.entry(&id)?;
    let with_features = flag(&q, "features")?;
    let ds = &entry.dataset;
    let view = DatasetView {
        id: &id,
        source_id: ds.source_id(),
        content_hash: ds.content_hash(),
        element_names: ds.element_names(),
        bounding_box: ds.bounding_box().ok(),
        points: ds
            .points()
            .iter()
            .map(|p| PointView {
                id: p.id,
                x: p.x,
                y: p.y,
                z: p.z,
                features: with_features.then_some(p.features.as_slice()),
            })
            .collect(),
    };
    Ok(Json(view).into_response())
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, ApiError> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| ApiError::bad_request("MalformedRequest", format!("bad {what} `{s}`")))
        })
        .collect()
}

fn parse_elements(q: &HashMap<String, String>) -> Option<Vec<String>> {
    q.get("elements").map(|s| {
        s.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatsTarget {
    All,
    Group { group_id: GroupId },
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResponse {
    pub target: StatsTarget,
    pub n: usize,
    pub sort: String,
    pub scale: DisplayScale,
    /// Summaries in display order.
    pub stats: Vec<SummaryStats>,
}

async fn get_stats(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<StatsResponse>, ApiError> {
    let entry = app.entry(&id)?;
    let ds = &entry.dataset;
    let sort_raw = q.get("sort").cloned().unwrap_or_else(|| "mean_desc".into());
    let sort = SortOrder::parse(&sort_raw)
        .ok_or_else(|| ApiError::bad_request("MalformedRequest", format!("unknown sort `{sort_raw}`")))?;
    let scale = match q.get("scale").map(String::as_str) {
        None | Some("linear") => DisplayScale::Linear,
        Some("log") | Some("log10") => {
            let floor = match q.get("log_floor") {
                Some(f) => f
                    .parse()
                    .map_err(|_| ApiError::bad_request("MalformedRequest", format!("bad log_floor `{f}`")))?,
                None => crate::stats::DEFAULT_LOG_FLOOR,
            };
            if !(floor > 0.0 && f64::is_finite(floor)) {
                return Err(StatsError::InvalidLogFloor(floor).into());
            }
            DisplayScale::Log10 { log_floor: floor }
        }
        Some(other) => {
            return Err(ApiError::bad_request(
                "MalformedRequest",
                format!("unknown scale `{other}`"),
            ))
        }
    };
    let (target, points): (StatsTarget, BTreeSet<usize>) = match (q.get("group"), q.get("points")) {
        (Some(_), Some(_)) => {
            return Err(ApiError::bad_request(
                "MalformedRequest",
                "give either `group` or `points`, not both",
            ))
        }
        (Some(g), None) => {
            let gid: GroupId = g
                .parse()
                .map_err(|_| ApiError::bad_request("MalformedRequest", format!("bad group id `{g}`")))?;
            let members = entry.session().workspace.registry.get(gid)?.members.clone();
            (StatsTarget::Group { group_id: gid }, members)
        }
        (None, Some(p)) => (
            StatsTarget::Points,
            parse_list::<usize>(p, "point id")?.into_iter().collect(),
        ),
        (None, None) => (StatsTarget::All, (0..ds.len()).collect()),
    };
    let elements = parse_elements(&q);
    let stats = group_stats(ds, &points, elements.as_deref())?;
    let order = sort_elements(&stats, sort);
    let mut by_name: HashMap<String, SummaryStats> = stats.into_iter().map(|s| (s.element.clone(), s)).collect();
    let stats = order.iter().filter_map(|e| by_name.remove(e)).collect();
    Ok(Json(StatsResponse {
        target,
        n: points.len(),
        sort: sort_raw,
        scale,
        stats,
    }))
}

async fn get_pcp(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<PcpAxes<GroupId>>, ApiError> {
    let entry = app.entry(&id)?;
    let registry = entry.session().workspace.registry.clone();
    let ids: Vec<GroupId> = match q.get("groups") {
        Some(raw) => parse_list(raw, "group id")?,
        None => registry
            .groups()
            .iter()
            .filter(|g| !g.members.is_empty())
            .map(|g| g.group_id)
            .collect(),
    };
    let mut groups = Vec::with_capacity(ids.len());
    for gid in ids {
        groups.push((gid, &registry.get(gid)?.members));
    }
    let elements = parse_elements(&q);
    Ok(Json(pcp_axes(&entry.dataset, &groups, elements.as_deref())?))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterRequest {
    config: ClusterConfig,
    #[serde(default)]
    elements: Option<Vec<String>>,
}

fn parse_cluster_request(body: &[u8], default_seed: u64) -> Result<ClusterRequest, ApiError> {
    let mut value: serde_json::Value = parse_json(body, "MalformedRequest")?;
    match value.get_mut("config") {
        Some(serde_json::Value::Object(cfg)) => {
            cfg.entry("seed").or_insert(default_seed.into());
        }
        Some(_) => return Err(ApiError::bad_request("InvalidConfig", "`config` must be an object")),
        None => return Err(ApiError::bad_request("InvalidConfig", "missing field `config`")),
    }
    serde_json::from_value(value).map_err(|e| ApiError::bad_request("InvalidConfig", e.to_string()))
}

async fn post_cluster(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let entry = app.entry(&id)?.clone();
    let req = parse_cluster_request(&body, app.config.default_seed)?;
    req.config.validate()?;
    let is_tsne = matches!(req.config.reduction, Reduction::Tsne(_));
    if is_tsne && entry.dataset.len() > MAX_TSNE_POINTS {
        return Err(
            crate::cluster::ClusterError::Reduce(crate::reduce::ReduceError::TooManyPoints(entry.dataset.len())).into(),
        );
    }

    let job = {
        let entry = entry.clone();
        let config = req.config.clone();
        let elements = req.elements.clone();
        async move {
            let permit = if is_tsne {
                Some(
                    entry
                        .tsne_gate
                        .clone()
                        .acquire_owned()
                        .await
                        .expect("semaphore is never closed"),
                )
            } else {
                None
            };
            tokio::task::spawn_blocking(move || {
                let _permit = permit;
                run_pipeline(&entry.dataset, elements.as_deref(), &config)
            })
            .await
        }
    };
    let result = match tokio::time::timeout(app.config.cluster_timeout, job).await {
        Err(_) => {
            return Err(ApiError::new(
                StatusCode::GATEWAY_TIMEOUT,
                "Timeout",
                format!("clustering exceeded {} s", app.config.cluster_timeout.as_secs()),
            ))
        }
        Ok(Err(join)) => {
            return Err(ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "Internal",
                join.to_string(),
            ))
        }
        Ok(Ok(r)) => r?,
    };

    // the registry is never touched; only the remembered config changes
    {
        let mut s = entry.session();
        if s.workspace.last_cluster_config.as_ref() != Some(&result.config) {
            let previous = s.workspace.last_cluster_config.replace(result.config.clone());
            if let Err(e) = app.persist(&id, &s.workspace) {
                s.workspace.last_cluster_config = previous;
                return Err(e);
            }
        }
    }
    Ok(json_bytes(serde_json::to_vec(&result).expect("serializable")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum GroupCommand {
    Create {
        name: String,
    },
    Activate {
        group_id: GroupId,
    },
    /// Move points, given by id or enclosed by a polygon, into the group.
    Assign {
        group_id: GroupId,
        #[serde(default)]
        point_ids: Option<Vec<usize>>,
        #[serde(default)]
        polygon: Option<Polygon>,
    },
    Remove {
        group_id: GroupId,
        #[serde(default)]
        point_ids: Option<Vec<usize>>,
        #[serde(default)]
        polygon: Option<Polygon>,
    },
    Annotate {
        group_id: GroupId,
        text: String,
    },
    Lock {
        group_id: GroupId,
        #[serde(default = "yes")]
        locked: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResponse {
    pub revision: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_group: Option<GroupId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<AssignOutcome>,
    pub registry: GroupRegistry,
}

fn selection(ds: &Dataset, point_ids: Option<Vec<usize>>, polygon: Option<Polygon>) -> Result<Selection, ApiError> {
    match (point_ids, polygon) {
        (Some(ids), None) => Ok(ids.into_iter().collect()),
        (None, Some(poly)) => Ok(enclosed_points(ds, &poly)),
        _ => Err(ApiError::bad_request(
            "MalformedCommand",
            "give exactly one of `point_ids` or `polygon`",
        )),
    }
}

/// Apply one command to a registry. On error the registry is unchanged.
pub fn apply_command(
    ds: &Dataset,
    reg: &mut GroupRegistry,
    cmd: GroupCommand,
) -> Result<(Option<GroupId>, Option<AssignOutcome>), ApiError> {
    match cmd {
        GroupCommand::Create { name } => Ok((Some(reg.create_group(name)?), None)),
        GroupCommand::Activate { group_id } => {
            reg.set_active(group_id)?;
            Ok((None, None))
        }
        GroupCommand::Assign {
            group_id,
            point_ids,
            polygon,
        } => {
            let sel = selection(ds, point_ids, polygon)?;
            Ok((None, Some(reg.assign_selection(group_id, &sel)?)))
        }
        GroupCommand::Remove {
            group_id,
            point_ids,
            polygon,
        } => {
            let sel = selection(ds, point_ids, polygon)?;
            reg.remove_from_group(group_id, &sel)?;
            Ok((None, None))
        }
        GroupCommand::Annotate { group_id, text } => {
            reg.annotate_group(group_id, &text)?;
            Ok((None, None))
        }
        GroupCommand::Lock { group_id, locked } => {
            reg.set_locked(group_id, locked)?;
            Ok((None, None))
        }
    }
}

async fn get_groups(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<GroupResponse>, ApiError> {
    let entry = app.entry(&id)?;
    let s = entry.session();
    Ok(Json(GroupResponse {
        revision: s.revision,
        created_group: None,
        outcome: None,
        registry: s.workspace.registry.clone(),
    }))
}

async fn post_groups(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<GroupResponse>, ApiError> {
    let entry = app.entry(&id)?;
    let cmd: GroupCommand = parse_json(&body, "MalformedCommand")?;
    let mut s = entry.session();
    let previous = s.workspace.clone();
    let (created_group, outcome) = apply_command(&entry.dataset, &mut s.workspace.registry, cmd)?;
    if s.workspace.registry != previous.registry {
        let created = s.workspace.created;
        s.workspace.touch(now_utc().max(created));
        if let Err(e) = app.persist(&id, &s.workspace) {
            s.workspace = previous;
            return Err(e);
        }
    }
    s.revision += 1;
    Ok(Json(GroupResponse {
        revision: s.revision,
        created_group,
        outcome,
        registry: s.workspace.registry.clone(),
    }))
}

async fn get_workspace(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = app.entry(&id)?;
    let bytes = to_canonical_json(&entry.session().workspace);
    Ok(json_bytes(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceLoadResponse {
    pub dataset_mismatch: bool,
    pub revision: u64,
    pub registry: GroupRegistry,
}

async fn put_workspace(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<WorkspaceLoadResponse>, ApiError> {
    let entry = app.entry(&id)?;
    let loaded = load_workspace(&body[..], Some(&entry.dataset))?;
    let workspace = rebind(loaded.workspace, &entry.dataset, loaded.dataset_mismatch)
        .map_err(|m| ApiError::bad_request("MalformedWorkspace", m))?;
    let mut s = entry.session();
    app.persist(&id, &workspace)?;
    s.workspace = workspace;
    s.revision += 1;
    Ok(Json(WorkspaceLoadResponse {
        dataset_mismatch: loaded.dataset_mismatch,
        revision: s.revision,
        registry: s.workspace.registry.clone(),
    }))
}

async fn get_export(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = app.entry(&id)?;
    let registry = entry.session().workspace.registry.clone();
    let csv = crate::workspace::export_groups_csv(&entry.dataset, &registry);
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv).into_response())
}
