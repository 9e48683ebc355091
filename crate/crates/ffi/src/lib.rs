//! C ABI for the element-abundance engine.
//!
//! Datasets and group registries are opaque handles created and released
//! through this interface. Every fallible call returns an [`XrfStatus`];
//! on failure, [`xrf_last_error_message`] describes the most recent error
//! on the calling thread. Strings handed out as `char **` belong to the
//! caller and are released with [`xrf_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use xrf_workbench::cluster::ClusterError;
use xrf_workbench::geometry::GeometryError;
use xrf_workbench::stats::StatsError;
use xrf_workbench::workspace::{now_utc, to_canonical_json};
use xrf_workbench::{
    export_groups_csv, group_stats, load_dataset, load_workspace, point_in_polygon, run_pipeline, summarize,
    ClusterConfig, Dataset, DatasetError, GroupError, GroupRegistry, SchemaConfig, SummaryStats, Workspace,
    WorkspaceError,
};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XrfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidString = 2,
    InvalidJson = 3,
    Io = 4,
    BufferTooSmall = 5,
    IndexOutOfRange = 6,
    Dataset = 7,
    Stats = 8,
    Geometry = 9,
    GroupLocked = 10,
    UnknownGroup = 11,
    GroupLimitExceeded = 12,
    UnknownPoint = 13,
    InvalidConfig = 14,
    KTooLarge = 15,
    Reduction = 16,
    Cluster = 17,
    UnsupportedVersion = 18,
    MalformedWorkspace = 19,
    Panic = 20,
}

/// A loaded point table.
pub struct XrfDataset {
    inner: Dataset,
    names: Vec<CString>,
}

/// Named, disjoint point groups over one dataset.
pub struct XrfRegistry {
    inner: GroupRegistry,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XrfBoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

/// Summary of one element. `cv` is meaningful only when `has_cv` is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XrfSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub has_cv: bool,
    pub cv: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl From<&SummaryStats> for XrfSummary {
    fn from(s: &SummaryStats) -> Self {
        XrfSummary {
            n: s.n,
            mean: s.mean,
            sd: s.sd,
            has_cv: s.cv.is_some(),
            cv: s.cv.unwrap_or(0.0),
            min: s.min,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            max: s.max,
        }
    }
}

#[derive(Debug)]
struct Failure {
    status: XrfStatus,
    message: String,
}

impl Failure {
    fn new(status: XrfStatus, message: impl Into<String>) -> Failure {
        Failure {
            status,
            message: message.into(),
        }
    }
}

type FfiResult<T> = Result<T, Failure>;

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        Failure::new(XrfStatus::Dataset, format!("{}: {e}", e.code()))
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        Failure::new(XrfStatus::Stats, format!("{}: {e}", e.code()))
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        Failure::new(XrfStatus::Geometry, format!("{}: {e}", e.code()))
    }
}

impl From<GroupError> for Failure {
    fn from(e: GroupError) -> Self {
        let status = match e {
            GroupError::GroupLocked(_) => XrfStatus::GroupLocked,
            GroupError::UnknownGroup(_) => XrfStatus::UnknownGroup,
            GroupError::GroupLimitExceeded => XrfStatus::GroupLimitExceeded,
            GroupError::UnknownPoint { .. } => XrfStatus::UnknownPoint,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<ClusterError> for Failure {
    fn from(e: ClusterError) -> Self {
        let status = match e {
            ClusterError::KTooLarge { .. } => XrfStatus::KTooLarge,
            ClusterError::InvalidConfig { .. } => XrfStatus::InvalidConfig,
            ClusterError::Dataset(d) => return d.into(),
            ClusterError::Groups(g) => return g.into(),
            ClusterError::Reduce(_) => XrfStatus::Reduction,
            ClusterError::EmptyMatrix => XrfStatus::Cluster,
        };
        Failure::new(status, format!("{}: {e}", e.code()))
    }
}

impl From<WorkspaceError> for Failure {
    fn from(e: WorkspaceError) -> Self {
        let status = match e {
            WorkspaceError::UnsupportedVersion(_) => XrfStatus::UnsupportedVersion,
            WorkspaceError::MalformedWorkspace(_) => XrfStatus::MalformedWorkspace,
            WorkspaceError::SinkFailure(_) => XrfStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn guard(body: impl FnOnce() -> FfiResult<()>) -> XrfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => XrfStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {what}"));
            XrfStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure::new(XrfStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(XrfStatus::InvalidString, format!("`{what}` is not UTF-8")))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

/// A null pointer is accepted for an empty slice.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    match (p.is_null(), len) {
        (_, 0) => Ok(&[]),
        (true, _) => Err(Failure::new(XrfStatus::NullArgument, format!("`{what}` is null"))),
        (false, _) => Ok(std::slice::from_raw_parts(p, len)),
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| Failure::new(XrfStatus::NullArgument, format!("`{what}` is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure::new(XrfStatus::NullArgument, format!("`{what}` is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    out(p, what)
}

fn owned_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(XrfStatus::InvalidString, "output contains a NUL byte"))
}

fn parse_json<T: serde::de::DeserializeOwned>(raw: &str, what: &str) -> FfiResult<T> {
    serde_json::from_str(raw).map_err(|e| Failure::new(XrfStatus::InvalidJson, format!("`{what}`: {e}")))
}

fn schema(raw: Option<&str>) -> FfiResult<SchemaConfig> {
    raw.map_or(Ok(SchemaConfig::default()), |s| parse_json(s, "schema_json"))
}

fn wrap_dataset(ds: Dataset) -> FfiResult<*mut XrfDataset> {
    let names = ds
        .element_names()
        .iter()
        .map(|n| CString::new(n.as_str()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::new(XrfStatus::InvalidString, "element name contains a NUL byte"))?;
    Ok(Box::into_raw(Box::new(XrfDataset { inner: ds, names })))
}

fn selection(ids: &[usize]) -> BTreeSet<usize> {
    ids.iter().copied().collect()
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn xrf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn xrf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a CSV file. `schema_json` may be null for the default column layout.
#[no_mangle]
pub unsafe extern "C" fn xrf_dataset_load_csv(
    path: *const c_char,
    schema_json: *const c_char,
    out_dataset: *mut *mut XrfDataset,
) -> XrfStatus {
    guard(|| {
        let path = text(path, "path")?;
        let schema = schema(optional_text(schema_json, "schema_json")?)?;
        let slot = out(out_dataset, "out_dataset")?;
        let file = File::open(path).map_err(|e| Failure::new(XrfStatus::Io, format!("{path}: {e}")))?;
        let id = std::path::Path::new(path)
            .file_stem()
            .map_or_else(|| path.to_string(), |s| s.to_string_lossy().into_owned());
        *slot = wrap_dataset(load_dataset(file, &schema, id)?)?;
        Ok(())
    })
}

/// Parse CSV text held in memory.
#[no_mangle]
pub unsafe extern "C" fn xrf_dataset_load_csv_buffer(
    data: *const u8,
    len: usize,
    source_id: *const c_char,
    schema_json: *const c_char,
    out_dataset: *mut *mut XrfDataset,
) -> XrfStatus {
    guard(|| {
        let bytes = slice(data, len, "data")?;
        let id = text(source_id, "source_id")?;
        let schema = schema(optional_text(schema_json, "schema_json")?)?;
        let slot = out(out_dataset, "out_dataset")?;
        *slot = wrap_dataset(load_dataset(bytes, &schema, id)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_dataset_free(ds: *mut XrfDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

#[no_mangle]
pub unsafe extern "C" fn xrf_dataset_point_count(ds: *const XrfDataset, out_count: *mut usize) -> XrfStatus {
    guard(|| {
        *out(out_count, "out_count")? = handle(ds, "ds")?.inner.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_dataset_element_count(ds: *const XrfDataset, out_count: *mut usize) -> XrfStatus {
    guard(|| {
        *out(out_count, "out_count")? = handle(ds, "ds")?.names.len();
        Ok(())
    })
}

/// Borrowed element name, valid for the lifetime of the dataset handle.
#[no_mangle]
pub unsafe extern "C" fn xrf_dataset_element_name(
    ds: *const XrfDataset,
    index: usize,
    out_name: *mut *const c_char,
) -> XrfStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let name = ds.names.get(index).ok_or_else(|| {
            Failure::new(
                XrfStatus::IndexOutOfRange,
                format!("element {index} of {}", ds.names.len()),
            )
        })?;
        *out(out_name, "out_name")? = name.as_ptr();
        Ok(())
    })
}

/// Coordinates of point `index` into `out_xyz[3]`, and its features into
/// `out_features` (one value per element) unless that pointer is null.
#[no_mangle]
pub unsafe extern "C" fn xrf_dataset_point(
    ds: *const XrfDataset,
    index: usize,
    out_xyz: *mut f64,
    out_features: *mut f64,
) -> XrfStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let p = ds.inner.points().get(index).ok_or_else(|| {
            Failure::new(
                XrfStatus::IndexOutOfRange,
                format!("point {index} of {}", ds.inner.len()),
            )
        })?;
        if out_xyz.is_null() {
            return Err(Failure::new(XrfStatus::NullArgument, "`out_xyz` is null"));
        }
        std::slice::from_raw_parts_mut(out_xyz, 3).copy_from_slice(&[p.x, p.y, p.z]);
        if !out_features.is_null() {
            std::slice::from_raw_parts_mut(out_features, p.features.len()).copy_from_slice(&p.features);
        }
        Ok(())
    })
}

/// Hex SHA-256 of the dataset content; free with `xrf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn xrf_dataset_content_hash(ds: *const XrfDataset, out_hash: *mut *mut c_char) -> XrfStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let slot = out(out_hash, "out_hash")?;
        *slot = owned_string(ds.inner.content_hash())?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_dataset_bounding_box(ds: *const XrfDataset, out_box: *mut XrfBoundingBox) -> XrfStatus {
    guard(|| {
        let b = handle(ds, "ds")?.inner.bounding_box()?;
        *out(out_box, "out_box")? = XrfBoundingBox {
            min_x: b.min_x,
            min_y: b.min_y,
            max_x: b.max_x,
            max_y: b.max_y,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_summarize(values: *const f64, len: usize, out_summary: *mut XrfSummary) -> XrfStatus {
    guard(|| {
        let v = slice(values, len, "values")?;
        let s = summarize("", v)?;
        *out(out_summary, "out_summary")? = XrfSummary::from(&s);
        Ok(())
    })
}

/// Per-element summaries over the given points, in dataset element order.
/// `out_written` receives the element count even when `capacity` is too
/// small.
#[no_mangle]
pub unsafe extern "C" fn xrf_group_stats(
    ds: *const XrfDataset,
    point_ids: *const usize,
    n_points: usize,
    out_summaries: *mut XrfSummary,
    capacity: usize,
    out_written: *mut usize,
) -> XrfStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let ids = selection(slice(point_ids, n_points, "point_ids")?);
        let written = out(out_written, "out_written")?;
        let stats = group_stats(&ds.inner, &ids, None)?;
        *written = stats.len();
        if capacity < stats.len() {
            return Err(Failure::new(
                XrfStatus::BufferTooSmall,
                format!("{} summaries need room, capacity is {capacity}", stats.len()),
            ));
        }
        if out_summaries.is_null() {
            return Err(Failure::new(XrfStatus::NullArgument, "`out_summaries` is null"));
        }
        let dest = std::slice::from_raw_parts_mut(out_summaries, stats.len());
        for (d, s) in dest.iter_mut().zip(&stats) {
            *d = XrfSummary::from(s);
        }
        Ok(())
    })
}

/// Even-odd containment of `(x, y)` in the polygon given as `n_vertices`
/// interleaved x, y pairs.
#[no_mangle]
pub unsafe extern "C" fn xrf_point_in_polygon(
    x: f64,
    y: f64,
    vertices_xy: *const f64,
    n_vertices: usize,
    out_inside: *mut bool,
) -> XrfStatus {
    guard(|| {
        let flat = slice(vertices_xy, n_vertices * 2, "vertices_xy")?;
        let vertices: Vec<[f64; 2]> = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        *out(out_inside, "out_inside")? = point_in_polygon((x, y), &vertices)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_registry_new(point_count: usize, out_registry: *mut *mut XrfRegistry) -> XrfStatus {
    guard(|| {
        *out(out_registry, "out_registry")? = Box::into_raw(Box::new(XrfRegistry {
            inner: GroupRegistry::new(point_count),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_registry_free(reg: *mut XrfRegistry) {
    if !reg.is_null() {
        drop(Box::from_raw(reg));
    }
}

#[no_mangle]
pub unsafe extern "C" fn xrf_registry_group_count(reg: *const XrfRegistry, out_count: *mut usize) -> XrfStatus {
    guard(|| {
        *out(out_count, "out_count")? = handle(reg, "reg")?.inner.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_registry_create_group(
    reg: *mut XrfRegistry,
    name: *const c_char,
    out_group_id: *mut u32,
) -> XrfStatus {
    guard(|| {
        let reg = handle_mut(reg, "reg")?;
        let name = text(name, "name")?;
        let slot = out(out_group_id, "out_group_id")?;
        *slot = reg.inner.create_group(name)?;
        Ok(())
    })
}

/// Move points into a group. Points owned by locked groups are skipped;
/// the two counts may be null.
#[no_mangle]
pub unsafe extern "C" fn xrf_registry_assign(
    reg: *mut XrfRegistry,
    group_id: u32,
    point_ids: *const usize,
    n_points: usize,
    out_assigned: *mut usize,
    out_skipped: *mut usize,
) -> XrfStatus {
    guard(|| {
        let reg = handle_mut(reg, "reg")?;
        let sel = selection(slice(point_ids, n_points, "point_ids")?);
        let outcome = reg.inner.assign_selection(group_id, &sel)?;
        if let Some(a) = out_assigned.as_mut() {
            *a = outcome.assigned.len();
        }
        if let Some(s) = out_skipped.as_mut() {
            *s = outcome.skipped.len();
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_registry_remove(
    reg: *mut XrfRegistry,
    group_id: u32,
    point_ids: *const usize,
    n_points: usize,
) -> XrfStatus {
    guard(|| {
        let reg = handle_mut(reg, "reg")?;
        let sel = selection(slice(point_ids, n_points, "point_ids")?);
        reg.inner.remove_from_group(group_id, &sel)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_registry_set_locked(reg: *mut XrfRegistry, group_id: u32, locked: bool) -> XrfStatus {
    guard(|| {
        handle_mut(reg, "reg")?.inner.set_locked(group_id, locked)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_registry_annotate(
    reg: *mut XrfRegistry,
    group_id: u32,
    annotation: *const c_char,
) -> XrfStatus {
    guard(|| {
        let reg = handle_mut(reg, "reg")?;
        let annotation = text(annotation, "annotation")?;
        reg.inner.annotate_group(group_id, annotation)?;
        Ok(())
    })
}

/// Group owning `point`; `out_found` is false for an ungrouped point.
#[no_mangle]
pub unsafe extern "C" fn xrf_registry_group_of(
    reg: *const XrfRegistry,
    point: usize,
    out_found: *mut bool,
    out_group_id: *mut u32,
) -> XrfStatus {
    guard(|| {
        let reg = handle(reg, "reg")?;
        if point >= reg.inner.point_count() {
            return Err(GroupError::UnknownPoint {
                point,
                point_count: reg.inner.point_count(),
            }
            .into());
        }
        let found = out(out_found, "out_found")?;
        let id = out(out_group_id, "out_group_id")?;
        match reg.inner.group_of(point) {
            Some(g) => {
                *found = true;
                *id = g.group_id;
            }
            None => *found = false,
        }
        Ok(())
    })
}

/// Members of a group in ascending order. `out_len` receives the member
/// count even when `capacity` is too small.
#[no_mangle]
pub unsafe extern "C" fn xrf_registry_members(
    reg: *const XrfRegistry,
    group_id: u32,
    out_members: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> XrfStatus {
    guard(|| {
        let members = &handle(reg, "reg")?.inner.get(group_id)?.members;
        *out(out_len, "out_len")? = members.len();
        if capacity < members.len() {
            return Err(Failure::new(
                XrfStatus::BufferTooSmall,
                format!("group {group_id} has {} members, capacity is {capacity}", members.len()),
            ));
        }
        if !members.is_empty() {
            if out_members.is_null() {
                return Err(Failure::new(XrfStatus::NullArgument, "`out_members` is null"));
            }
            let dest = std::slice::from_raw_parts_mut(out_members, members.len());
            for (d, m) in dest.iter_mut().zip(members) {
                *d = *m;
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xrf_registry_to_json(reg: *const XrfRegistry, out_json: *mut *mut c_char) -> XrfStatus {
    guard(|| {
        let reg = handle(reg, "reg")?;
        let slot = out(out_json, "out_json")?;
        *slot = owned_string(serde_json::to_string(&reg.inner).expect("registry serializes"))?;
        Ok(())
    })
}

/// Run the clustering pipeline. `config_json` is a cluster configuration
/// object; `elements_json` is an optional array of element names. The
/// result is written as JSON.
#[no_mangle]
pub unsafe extern "C" fn xrf_cluster_json(
    ds: *const XrfDataset,
    config_json: *const c_char,
    elements_json: *const c_char,
    out_result_json: *mut *mut c_char,
) -> XrfStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let config: ClusterConfig = parse_json(text(config_json, "config_json")?, "config_json")?;
        let elements: Option<Vec<String>> = optional_text(elements_json, "elements_json")?
            .map(|raw| parse_json(raw, "elements_json"))
            .transpose()?;
        let slot = out(out_result_json, "out_result_json")?;
        config.validate()?;
        let result = run_pipeline(&ds.inner, elements.as_deref(), &config)?;
        *slot = owned_string(serde_json::to_string(&result).expect("result serializes"))?;
        Ok(())
    })
}

/// Group membership as CSV, one row per point.
#[no_mangle]
pub unsafe extern "C" fn xrf_export_groups_csv(
    ds: *const XrfDataset,
    reg: *const XrfRegistry,
    out_csv: *mut *mut c_char,
) -> XrfStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let reg = handle(reg, "reg")?;
        let slot = out(out_csv, "out_csv")?;
        *slot = owned_string(export_groups_csv(&ds.inner, &reg.inner))?;
        Ok(())
    })
}

/// Serialize a workspace binding `reg` to `ds`, stamped with the current time.
#[no_mangle]
pub unsafe extern "C" fn xrf_workspace_save(
    ds: *const XrfDataset,
    reg: *const XrfRegistry,
    out_json: *mut *mut c_char,
) -> XrfStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let reg = handle(reg, "reg")?;
        let slot = out(out_json, "out_json")?;
        if reg.inner.point_count() != ds.inner.len() {
            return Err(Failure::new(
                XrfStatus::MalformedWorkspace,
                format!(
                    "registry covers {} points, dataset has {}",
                    reg.inner.point_count(),
                    ds.inner.len()
                ),
            ));
        }
        let w = Workspace::new(&ds.inner, reg.inner.clone(), now_utc());
        let bytes = to_canonical_json(&w);
        *slot = owned_string(String::from_utf8(bytes).expect("JSON is UTF-8"))?;
        Ok(())
    })
}

/// Restore a registry from workspace JSON against `ds`. `out_mismatch` is
/// set when the workspace was saved from different data.
#[no_mangle]
pub unsafe extern "C" fn xrf_workspace_load(
    ds: *const XrfDataset,
    json: *const c_char,
    out_registry: *mut *mut XrfRegistry,
    out_mismatch: *mut bool,
) -> XrfStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let raw = text(json, "json")?;
        let reg_slot = out(out_registry, "out_registry")?;
        let mismatch_slot = out(out_mismatch, "out_mismatch")?;
        let loaded = load_workspace(raw.as_bytes(), Some(&ds.inner))?;
        let r = &loaded.workspace.registry;
        let registry = GroupRegistry::from_parts(ds.inner.len(), r.next_id(), r.active_group(), r.groups().to_vec())
            .map_err(|m| Failure::new(XrfStatus::MalformedWorkspace, m))?;
        *mismatch_slot = loaded.dataset_mismatch;
        *reg_slot = Box::into_raw(Box::new(XrfRegistry { inner: registry }));
        Ok(())
    })
}
