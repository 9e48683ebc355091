//! CSV ingestion and the immutable point table.
//!
//! A dataset is a list of sample points, each carrying a spatial position and
//! one weight-percent value per element. Raw spectral channels may be present
//! in the file; they are ignored as long as the schema names the element
//! columns explicitly.

use std::collections::HashSet;
use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("non-numeric value `{value}` at row {row}, column {column}")]
    NonNumericValue { row: usize, column: String, value: String },
    #[error("negative value {value} at row {row}, column {column}")]
    NegativeFeature { row: usize, column: String, value: f64 },
    #[error("dataset has no data rows")]
    EmptyDataset,
    #[error("duplicate id `{id}` at row {row}")]
    DuplicateId { row: usize, id: String },
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("column `{0}` is used both as a coordinate and as a feature")]
    OverlappingColumns(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
}

impl DatasetError {
    pub fn code(&self) -> &'static str {
        match self {
            DatasetError::MissingColumn(_) => "MissingColumn",
            DatasetError::NonNumericValue { .. } => "NonNumericValue",
            DatasetError::NegativeFeature { .. } => "NegativeFeature",
            DatasetError::EmptyDataset => "EmptyDataset",
            DatasetError::DuplicateId { .. } => "DuplicateId",
            DatasetError::UnknownElement(_) => "UnknownElement",
            DatasetError::OverlappingColumns(_) => "OverlappingColumns",
            DatasetError::Csv(_) => "MalformedCsv",
        }
    }
}

/// One sample point. `features` is aligned with [`Dataset::element_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Value of the configured id column, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub features: Vec<f64>,
}

/// Names of the coordinate columns. `None` for x/y means "auto": match
/// `x`/`y`/`z` case-insensitively.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoordinateColumns {
    pub x: Option<String>,
    pub y: Option<String>,
    pub z: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureColumns {
    /// Every remaining column becomes an element feature.
    #[default]
    Auto,
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(default)]
    pub coordinate_columns: CoordinateColumns,
    #[serde(default)]
    pub feature_columns: FeatureColumns,
    #[serde(default)]
    pub id_column: Option<String>,
}

impl SchemaConfig {
    pub fn with_elements<S: Into<String>>(elements: impl IntoIterator<Item = S>) -> Self {
        SchemaConfig {
            feature_columns: FeatureColumns::Explicit(elements.into_iter().map(Into::into).collect()),
            ..Default::default()
        }
    }
}

/// Axis-aligned extent of the point coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    source_id: String,
    element_names: Vec<String>,
    points: Vec<PointRecord>,
}

struct ResolvedSchema {
    x: usize,
    y: usize,
    z: Option<usize>,
    id: Option<usize>,
    features: Vec<usize>,
}

fn find_column(header: &[String], name: &str) -> Result<usize, DatasetError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
}

fn find_coordinate(header: &[String], configured: &Option<String>, auto: &str) -> Option<usize> {
    match configured {
        Some(name) => header.iter().position(|h| h == name),
        None => header.iter().position(|h| h.eq_ignore_ascii_case(auto)),
    }
}

fn resolve_schema(header: &[String], config: &SchemaConfig) -> Result<ResolvedSchema, DatasetError> {
    let coords = &config.coordinate_columns;
    let x = find_coordinate(header, &coords.x, "x")
        .ok_or_else(|| DatasetError::MissingColumn(coords.x.clone().unwrap_or_else(|| "x".into())))?;
    let y = find_coordinate(header, &coords.y, "y")
        .ok_or_else(|| DatasetError::MissingColumn(coords.y.clone().unwrap_or_else(|| "y".into())))?;
    let z = match &coords.z {
        Some(name) => Some(find_column(header, name)?),
        None => find_coordinate(header, &None, "z"),
    };
    let id = match &config.id_column {
        Some(name) => Some(find_column(header, name)?),
        None => None,
    };
    let reserved: Vec<usize> = [Some(x), Some(y), z, id].into_iter().flatten().collect();

    let features = match &config.feature_columns {
        FeatureColumns::Auto => (0..header.len()).filter(|c| !reserved.contains(c)).collect(),
        FeatureColumns::Explicit(names) => {
            let mut cols = Vec::with_capacity(names.len());
            for name in names {
                let c = find_column(header, name)?;
                if reserved.contains(&c) {
                    return Err(DatasetError::OverlappingColumns(name.clone()));
                }
                cols.push(c);
            }
            cols
        }
    };
    Ok(ResolvedSchema { x, y, z, id, features })
}

fn parse_number(raw: &str, row: usize, column: &str) -> Result<f64, DatasetError> {
    let trimmed = raw.trim();
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DatasetError::NonNumericValue {
            row,
            column: column.to_string(),
            value: trimmed.to_string(),
        }),
    }
}

/// Parse a CSV stream (header row first) into a dataset.
///
/// Rows are numbered from 1 (the first data row) in error reports.
pub fn load_dataset<R: Read>(
    source: R,
    config: &SchemaConfig,
    source_id: impl Into<String>,
) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    let schema = resolve_schema(&header, config)?;
    let element_names: Vec<String> = schema.features.iter().map(|&c| header[c].clone()).collect();

    let mut points = Vec::new();
    let mut seen_ids = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| DatasetError::Csv(e.to_string()))?;
        let field = |c: usize| record.get(c).unwrap_or("");

        let x = parse_number(field(schema.x), row, &header[schema.x])?;
        let y = parse_number(field(schema.y), row, &header[schema.y])?;
        let z = match schema.z {
            Some(c) => parse_number(field(c), row, &header[c])?,
            None => 0.0,
        };
        let label = match schema.id {
            Some(c) => {
                let id = field(c).to_string();
                if !seen_ids.insert(id.clone()) {
                    return Err(DatasetError::DuplicateId { row, id });
                }
                Some(id)
            }
            None => None,
        };
        let mut features = Vec::with_capacity(schema.features.len());
        for &c in &schema.features {
            let v = parse_number(field(c), row, &header[c])?;
            if v < 0.0 {
                return Err(DatasetError::NegativeFeature {
                    row,
                    column: header[c].clone(),
                    value: v,
                });
            }
            features.push(v);
        }
        points.push(PointRecord {
            id: i,
            x,
            y,
            z,
            label,
            features,
        });
    }
    if points.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    Ok(Dataset {
        source_id: source_id.into(),
        element_names,
        points,
    })
}

/// Write a dataset as CSV with columns `x,y,z`, then one per element. When
/// every point carries a label it is written first, in an `id` column.
/// Values use the shortest representation that parses back exactly.
pub fn write_dataset<W: Write>(ds: &Dataset, sink: W) -> Result<(), DatasetError> {
    let csv_err = |e: csv::Error| DatasetError::Csv(e.to_string());
    let labelled = ds.points.iter().all(|p| p.label.is_some());
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<&str> = Vec::new();
    if labelled {
        header.push("id");
    }
    header.extend(["x", "y", "z"]);
    header.extend(ds.element_names.iter().map(String::as_str));
    w.write_record(&header).map_err(csv_err)?;
    for p in &ds.points {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        if labelled {
            row.push(p.label.clone().unwrap_or_default());
        }
        row.extend([p.x, p.y, p.z].iter().chain(&p.features).map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| DatasetError::Csv(e.to_string()))
}

impl Dataset {
    /// Build a dataset from in-memory points. Ids are reassigned densely in
    /// the given order.
    pub fn from_points(
        source_id: impl Into<String>,
        element_names: Vec<String>,
        points: impl IntoIterator<Item = ([f64; 3], Vec<f64>)>,
    ) -> Result<Dataset, DatasetError> {
        let mut out = Vec::new();
        for (i, (xyz, features)) in points.into_iter().enumerate() {
            let row = i + 1;
            if features.len() != element_names.len() {
                return Err(DatasetError::Csv(format!(
                    "row {row} has {} features, expected {}",
                    features.len(),
                    element_names.len()
                )));
            }
            for (axis, v) in ["x", "y", "z"].iter().zip(xyz) {
                if !v.is_finite() {
                    return Err(DatasetError::NonNumericValue {
                        row,
                        column: axis.to_string(),
                        value: v.to_string(),
                    });
                }
            }
            for (name, &v) in element_names.iter().zip(&features) {
                if !v.is_finite() {
                    return Err(DatasetError::NonNumericValue {
                        row,
                        column: name.clone(),
                        value: v.to_string(),
                    });
                }
                if v < 0.0 {
                    return Err(DatasetError::NegativeFeature {
                        row,
                        column: name.clone(),
                        value: v,
                    });
                }
            }
            out.push(PointRecord {
                id: i,
                x: xyz[0],
                y: xyz[1],
                z: xyz[2],
                label: None,
                features,
            });
        }
        if out.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        Ok(Dataset {
            source_id: source_id.into(),
            element_names,
            points: out,
        })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn element_names(&self) -> &[String] {
        &self.element_names
    }

    pub fn points(&self) -> &[PointRecord] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn element_index(&self, element: &str) -> Result<usize, DatasetError> {
        self.element_names
            .iter()
            .position(|e| e == element)
            .ok_or_else(|| DatasetError::UnknownElement(element.to_string()))
    }

    /// Resolve an optional element subset to column indices, in request order.
    pub fn element_indices(&self, selected: Option<&[String]>) -> Result<Vec<usize>, DatasetError> {
        match selected {
            None => Ok((0..self.element_names.len()).collect()),
            Some(names) => names.iter().map(|n| self.element_index(n)).collect(),
        }
    }

    /// n_points × n_selected matrix; row i is point i.
    pub fn feature_matrix(&self, selected: Option<&[String]>) -> Result<Array2<f64>, DatasetError> {
        let cols = self.element_indices(selected)?;
        Ok(Array2::from_shape_fn((self.points.len(), cols.len()), |(i, j)| {
            self.points[i].features[cols[j]]
        }))
    }

    /// Values of one element across the given points.
    pub fn column(&self, element: &str, ids: impl IntoIterator<Item = usize>) -> Result<Vec<f64>, DatasetError> {
        let c = self.element_index(element)?;
        Ok(ids.into_iter().map(|i| self.points[i].features[c]).collect())
    }

    pub fn bounding_box(&self) -> Result<BoundingBox, DatasetError> {
        let first = self.points.first().ok_or(DatasetError::EmptyDataset)?;
        let init = BoundingBox {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        Ok(self.points.iter().fold(init, |b, p| BoundingBox {
            min_x: b.min_x.min(p.x),
            min_y: b.min_y.min(p.y),
            max_x: b.max_x.max(p.x),
            max_y: b.max_y.max(p.y),
        }))
    }

    /// SHA-256 over element names and the bit patterns of every coordinate
    /// and feature. Independent of line endings and number formatting in the
    /// source file.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.element_names.len() as u64).to_le_bytes());
        for name in &self.element_names {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
        }
        h.update((self.points.len() as u64).to_le_bytes());
        for p in &self.points {
            for v in [p.x, p.y, p.z].iter().chain(&p.features) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}
