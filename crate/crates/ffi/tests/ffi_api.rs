use std::ffi::{c_char, CStr, CString};
use std::ptr;

use xrf_workbench_ffi::*;

const CSV: &str = "x,y,z,Fe,Ca\n0,0,0,1,5\n1,0,0,1.2,5.2\n0,1,0,9,0.5\n1,1,0,9.4,0.25\n";

struct Dataset(*mut XrfDataset);

impl Drop for Dataset {
    fn drop(&mut self) {
        unsafe { xrf_dataset_free(self.0) }
    }
}

struct Registry(*mut XrfRegistry);

impl Drop for Registry {
    fn drop(&mut self) {
        unsafe { xrf_registry_free(self.0) }
    }
}

fn dataset() -> Dataset {
    let mut ds = ptr::null_mut();
    let id = CString::new("toy").unwrap();
    let status = unsafe { xrf_dataset_load_csv_buffer(CSV.as_ptr(), CSV.len(), id.as_ptr(), ptr::null(), &mut ds) };
    assert_eq!(status, XrfStatus::Ok);
    Dataset(ds)
}

fn registry(points: usize) -> Registry {
    let mut reg = ptr::null_mut();
    assert_eq!(unsafe { xrf_registry_new(points, &mut reg) }, XrfStatus::Ok);
    Registry(reg)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(xrf_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn take(s: *mut c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { xrf_string_free(s) };
    out
}

#[test]
fn dataset_accessors() {
    let ds = dataset();
    let (mut n, mut e) = (0, 0);
    unsafe {
        assert_eq!(xrf_dataset_point_count(ds.0, &mut n), XrfStatus::Ok);
        assert_eq!(xrf_dataset_element_count(ds.0, &mut e), XrfStatus::Ok);
    }
    assert_eq!((n, e), (4, 2));
    let mut name = ptr::null();
    assert_eq!(unsafe { xrf_dataset_element_name(ds.0, 1, &mut name) }, XrfStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(name) }.to_str().unwrap(), "Ca");
    assert_eq!(
        unsafe { xrf_dataset_element_name(ds.0, 2, &mut name) },
        XrfStatus::IndexOutOfRange
    );

    let (mut xyz, mut f) = ([0.0; 3], [0.0; 2]);
    assert_eq!(
        unsafe { xrf_dataset_point(ds.0, 3, xyz.as_mut_ptr(), f.as_mut_ptr()) },
        XrfStatus::Ok
    );
    assert_eq!((xyz, f), ([1.0, 1.0, 0.0], [9.4, 0.25]));
    assert_eq!(
        unsafe { xrf_dataset_point(ds.0, 4, xyz.as_mut_ptr(), ptr::null_mut()) },
        XrfStatus::IndexOutOfRange
    );

    let mut b = XrfBoundingBox::default();
    assert_eq!(unsafe { xrf_dataset_bounding_box(ds.0, &mut b) }, XrfStatus::Ok);
    assert_eq!(
        b,
        XrfBoundingBox {
            min_x: 0.0,
            min_y: 0.0,
            max_x: 1.0,
            max_y: 1.0
        }
    );

    let mut hash = ptr::null_mut();
    assert_eq!(unsafe { xrf_dataset_content_hash(ds.0, &mut hash) }, XrfStatus::Ok);
    let hash = take(hash);
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn load_errors_set_the_message() {
    let mut ds = ptr::null_mut();
    let id = CString::new("bad").unwrap();
    let text = "x,y,Fe\n0,0,-3\n";
    let status = unsafe { xrf_dataset_load_csv_buffer(text.as_ptr(), text.len(), id.as_ptr(), ptr::null(), &mut ds) };
    assert_eq!(status, XrfStatus::Dataset);
    assert!(last_error().starts_with("NegativeFeature"), "{}", last_error());
    assert!(ds.is_null());

    let path = CString::new("/definitely/not/here.csv").unwrap();
    assert_eq!(
        unsafe { xrf_dataset_load_csv(path.as_ptr(), ptr::null(), &mut ds) },
        XrfStatus::Io
    );
    let schema = CString::new("{not json").unwrap();
    let status = unsafe { xrf_dataset_load_csv_buffer(CSV.as_ptr(), CSV.len(), id.as_ptr(), schema.as_ptr(), &mut ds) };
    assert_eq!(status, XrfStatus::InvalidJson);
    assert_eq!(
        unsafe { xrf_dataset_load_csv_buffer(CSV.as_ptr(), CSV.len(), ptr::null(), ptr::null(), &mut ds) },
        XrfStatus::NullArgument
    );
}

#[test]
fn load_from_file_with_schema() {
    let dir = std::env::temp_dir().join(format!("xrf-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("scan.csv");
    std::fs::write(&file, CSV).unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();
    let schema = CString::new(r#"{"feature_columns": {"explicit": ["Ca"]}}"#).unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { xrf_dataset_load_csv(path.as_ptr(), schema.as_ptr(), &mut ds) },
        XrfStatus::Ok,
        "{}",
        last_error()
    );
    let ds = Dataset(ds);
    let mut e = 0;
    unsafe { xrf_dataset_element_count(ds.0, &mut e) };
    assert_eq!(e, 1);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn summaries() {
    let values = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
    let mut s = XrfSummary::default();
    assert_eq!(
        unsafe { xrf_summarize(values.as_ptr(), values.len(), &mut s) },
        XrfStatus::Ok
    );
    assert_eq!((s.n, s.mean, s.min, s.max, s.median), (8, 5.0, 2.0, 9.0, 4.5));
    assert!((s.sd - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    assert!(s.has_cv && (s.cv - s.sd / 5.0).abs() < 1e-15);
    assert_eq!(unsafe { xrf_summarize(ptr::null(), 0, &mut s) }, XrfStatus::Stats);

    let zeros = [0.0, 0.0];
    unsafe { xrf_summarize(zeros.as_ptr(), 2, &mut s) };
    assert!(!s.has_cv);

    let ds = dataset();
    let ids = [2usize, 3];
    let mut out = [XrfSummary::default(); 2];
    let mut written = 0;
    let status = unsafe { xrf_group_stats(ds.0, ids.as_ptr(), 2, out.as_mut_ptr(), 1, &mut written) };
    assert_eq!((status, written), (XrfStatus::BufferTooSmall, 2));
    let status = unsafe { xrf_group_stats(ds.0, ids.as_ptr(), 2, out.as_mut_ptr(), 2, &mut written) };
    assert_eq!(status, XrfStatus::Ok);
    assert!((out[0].mean - 9.2).abs() < 1e-12);
    assert_eq!((out[1].min, out[1].max), (0.25, 0.5));
    let status = unsafe { xrf_group_stats(ds.0, ptr::null(), 0, out.as_mut_ptr(), 2, &mut written) };
    assert_eq!(status, XrfStatus::Stats);
    let far = [7usize];
    assert_eq!(
        unsafe { xrf_group_stats(ds.0, far.as_ptr(), 1, out.as_mut_ptr(), 2, &mut written) },
        XrfStatus::Stats
    );
}

#[test]
fn polygon_containment() {
    let square = [0.0, 0.0, 2.0, 0.0, 2.0, 2.0, 0.0, 2.0];
    let mut inside = false;
    assert_eq!(
        unsafe { xrf_point_in_polygon(1.0, 1.0, square.as_ptr(), 4, &mut inside) },
        XrfStatus::Ok
    );
    assert!(inside);
    unsafe { xrf_point_in_polygon(3.0, 1.0, square.as_ptr(), 4, &mut inside) };
    assert!(!inside);
    assert_eq!(
        unsafe { xrf_point_in_polygon(1.0, 1.0, square.as_ptr(), 2, &mut inside) },
        XrfStatus::Geometry
    );
}

#[test]
fn registry_lifecycle() {
    let ds = dataset();
    let reg = registry(4);
    let name = CString::new("rim").unwrap();
    let (mut a, mut b) = (0u32, 0u32);
    unsafe {
        assert_eq!(xrf_registry_create_group(reg.0, name.as_ptr(), &mut a), XrfStatus::Ok);
        assert_eq!(xrf_registry_create_group(reg.0, name.as_ptr(), &mut b), XrfStatus::Ok);
    }
    assert_ne!(a, b);
    let (mut assigned, mut skipped) = (0, 0);
    let pts = [0usize, 1, 2];
    assert_eq!(
        unsafe { xrf_registry_assign(reg.0, a, pts.as_ptr(), 3, &mut assigned, &mut skipped) },
        XrfStatus::Ok
    );
    assert_eq!((assigned, skipped), (3, 0));
    assert_eq!(unsafe { xrf_registry_set_locked(reg.0, a, true) }, XrfStatus::Ok);
    let more = [2usize, 3];
    assert_eq!(
        unsafe { xrf_registry_assign(reg.0, b, more.as_ptr(), 2, &mut assigned, &mut skipped) },
        XrfStatus::Ok
    );
    assert_eq!((assigned, skipped), (1, 1));
    assert_eq!(
        unsafe { xrf_registry_remove(reg.0, a, pts.as_ptr(), 1) },
        XrfStatus::GroupLocked
    );
    assert_eq!(
        unsafe { xrf_registry_remove(reg.0, 77, pts.as_ptr(), 1) },
        XrfStatus::UnknownGroup
    );
    let stray = [9usize];
    assert_eq!(
        unsafe { xrf_registry_assign(reg.0, b, stray.as_ptr(), 1, ptr::null_mut(), ptr::null_mut()) },
        XrfStatus::UnknownPoint
    );
    let note = CString::new("glassy, \"fresh\"").unwrap();
    assert_eq!(unsafe { xrf_registry_annotate(reg.0, a, note.as_ptr()) }, XrfStatus::Ok);

    let (mut found, mut owner) = (false, 0u32);
    unsafe { xrf_registry_group_of(reg.0, 3, &mut found, &mut owner) };
    assert!(found && owner == b);
    assert_eq!(
        unsafe { xrf_registry_group_of(reg.0, 4, &mut found, &mut owner) },
        XrfStatus::UnknownPoint
    );

    let mut members = [0usize; 3];
    let mut len = 0;
    assert_eq!(
        unsafe { xrf_registry_members(reg.0, a, members.as_mut_ptr(), 2, &mut len) },
        XrfStatus::BufferTooSmall
    );
    assert_eq!(len, 3);
    assert_eq!(
        unsafe { xrf_registry_members(reg.0, a, members.as_mut_ptr(), 3, &mut len) },
        XrfStatus::Ok
    );
    assert_eq!(members, [0, 1, 2]);

    let mut count = 0;
    unsafe { xrf_registry_group_count(reg.0, &mut count) };
    assert_eq!(count, 2);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { xrf_registry_to_json(reg.0, &mut json) }, XrfStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert_eq!(v["groups"][0]["annotation"], "glassy, \"fresh\"");

    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { xrf_export_groups_csv(ds.0, reg.0, &mut csv) }, XrfStatus::Ok);
    let csv = take(csv);
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(4).unwrap().starts_with("3,1,1,0,1,rim,"));
}

#[test]
fn twenty_first_group_is_refused() {
    let reg = registry(1);
    let name = CString::new("g").unwrap();
    let mut id = 0;
    for _ in 0..20 {
        assert_eq!(
            unsafe { xrf_registry_create_group(reg.0, name.as_ptr(), &mut id) },
            XrfStatus::Ok
        );
    }
    assert_eq!(
        unsafe { xrf_registry_create_group(reg.0, name.as_ptr(), &mut id) },
        XrfStatus::GroupLimitExceeded
    );
}

#[test]
fn clustering_through_json() {
    let ds = dataset();
    let config = CString::new(r#"{"algorithm": "kmeans", "n_clusters": 2, "seed": 7}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { xrf_cluster_json(ds.0, config.as_ptr(), ptr::null(), &mut out) },
        XrfStatus::Ok,
        "{}",
        last_error()
    );
    let result: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(result["labels"], serde_json::json!([0, 0, 1, 1]));

    let elements = CString::new(r#"["Ca"]"#).unwrap();
    let ward = CString::new(r#"{"algorithm": "hierarchical", "n_clusters": 2, "linkage": "ward"}"#).unwrap();
    assert_eq!(
        unsafe { xrf_cluster_json(ds.0, ward.as_ptr(), elements.as_ptr(), &mut out) },
        XrfStatus::Ok
    );
    take(out);

    let linkage = CString::new(r#"{"algorithm": "kmeans", "n_clusters": 2, "linkage": "ward"}"#).unwrap();
    assert_eq!(
        unsafe { xrf_cluster_json(ds.0, linkage.as_ptr(), ptr::null(), &mut out) },
        XrfStatus::InvalidConfig
    );
    assert!(last_error().contains("linkage"));
    let big = CString::new(r#"{"algorithm": "minmax", "n_clusters": 9}"#).unwrap();
    assert_eq!(
        unsafe { xrf_cluster_json(ds.0, big.as_ptr(), ptr::null(), &mut out) },
        XrfStatus::KTooLarge
    );
    let unknown = CString::new(r#"["U"]"#).unwrap();
    assert_eq!(
        unsafe { xrf_cluster_json(ds.0, config.as_ptr(), unknown.as_ptr(), &mut out) },
        XrfStatus::Dataset
    );
    let garbage = CString::new("{").unwrap();
    assert_eq!(
        unsafe { xrf_cluster_json(ds.0, garbage.as_ptr(), ptr::null(), &mut out) },
        XrfStatus::InvalidJson
    );
}

#[test]
fn workspace_round_trip() {
    let ds = dataset();
    let reg = registry(4);
    let name = CString::new("a").unwrap();
    let mut id = 0;
    unsafe { xrf_registry_create_group(reg.0, name.as_ptr(), &mut id) };
    let pts = [1usize, 3];
    unsafe { xrf_registry_assign(reg.0, id, pts.as_ptr(), 2, ptr::null_mut(), ptr::null_mut()) };

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { xrf_workspace_save(ds.0, reg.0, &mut json) }, XrfStatus::Ok);
    let saved = CString::new(take(json)).unwrap();
    let (mut back, mut mismatch) = (ptr::null_mut(), true);
    assert_eq!(
        unsafe { xrf_workspace_load(ds.0, saved.as_ptr(), &mut back, &mut mismatch) },
        XrfStatus::Ok
    );
    let back = Registry(back);
    assert!(!mismatch);
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        xrf_registry_to_json(reg.0, &mut a);
        xrf_registry_to_json(back.0, &mut b);
    }
    assert_eq!(take(a), take(b));

    let mut v: serde_json::Value = serde_json::from_str(saved.to_str().unwrap()).unwrap();
    v["format_version"] = 5.into();
    let bumped = CString::new(v.to_string()).unwrap();
    let mut ignored = ptr::null_mut();
    assert_eq!(
        unsafe { xrf_workspace_load(ds.0, bumped.as_ptr(), &mut ignored, &mut mismatch) },
        XrfStatus::UnsupportedVersion
    );
    let junk = CString::new("[]").unwrap();
    assert_eq!(
        unsafe { xrf_workspace_load(ds.0, junk.as_ptr(), &mut ignored, &mut mismatch) },
        XrfStatus::MalformedWorkspace
    );
    assert!(ignored.is_null());

    let small = registry(3);
    assert_eq!(
        unsafe { xrf_workspace_save(ds.0, small.0, &mut json) },
        XrfStatus::MalformedWorkspace
    );
}

#[test]
fn null_handles_are_rejected() {
    let mut n = 0;
    unsafe {
        assert_eq!(xrf_dataset_point_count(ptr::null(), &mut n), XrfStatus::NullArgument);
        assert_eq!(xrf_registry_group_count(ptr::null(), &mut n), XrfStatus::NullArgument);
        assert_eq!(
            xrf_registry_set_locked(ptr::null_mut(), 0, true),
            XrfStatus::NullArgument
        );
        xrf_dataset_free(ptr::null_mut());
        xrf_registry_free(ptr::null_mut());
        xrf_string_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}
