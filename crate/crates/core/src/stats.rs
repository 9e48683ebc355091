//! Per-element descriptive statistics, element ordering and display
//! transforms for histogram panels, and parallel-coordinates normalization.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};

/// Default floor substituted for zeros on a log scale, in weight %.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no values to summarize")]
    EmptyInput,
    #[error("value at index {0} is not finite")]
    NonFiniteValue(usize),
    #[error("point selection is empty")]
    EmptySelection,
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("point {0} is not in the dataset")]
    UnknownPoint(usize),
    #[error("negative value {0} cannot be displayed")]
    NegativeValue(f64),
    #[error("log floor must be positive, got {0}")]
    InvalidLogFloor(f64),
}

impl StatsError {
    pub fn code(&self) -> &'static str {
        match self {
            StatsError::EmptyInput => "EmptyInput",
            StatsError::NonFiniteValue(_) => "NonFiniteValue",
            StatsError::EmptySelection => "EmptySelection",
            StatsError::UnknownElement(_) => "UnknownElement",
            StatsError::UnknownPoint(_) => "UnknownPoint",
            StatsError::NegativeValue(_) => "NegativeValue",
            StatsError::InvalidLogFloor(_) => "InvalidLogFloor",
        }
    }
}

impl From<DatasetError> for StatsError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::UnknownElement(name) => StatsError::UnknownElement(name),
            other => StatsError::UnknownElement(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub element: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub sd: f64,
    /// sd / mean; absent when the mean is zero.
    pub cv: Option<f64>,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl SummaryStats {
    /// Extent of the inner variance bar: mean ± sd, clamped at zero.
    pub fn inner_bar(&self) -> (f64, f64) {
        ((self.mean - self.sd).max(0.0), self.mean + self.sd)
    }
}

/// Linear interpolation between order statistics at position p·(n−1).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Summary statistics of one element over a set of values.
pub fn summarize(element: &str, values: &[f64]) -> Result<SummaryStats, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFiniteValue(i));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let cv = if mean != 0.0 { Some(sd / mean) } else { None };

    // interpolation can round a hair outside its neighbours
    let min = sorted[0];
    let max = sorted[n - 1];
    let q1 = quantile_sorted(&sorted, 0.25).clamp(min, max);
    let median = quantile_sorted(&sorted, 0.5).clamp(q1, max);
    let q3 = quantile_sorted(&sorted, 0.75).clamp(median, max);

    Ok(SummaryStats {
        element: element.to_string(),
        n,
        mean,
        sd,
        cv,
        min,
        q1,
        median,
        q3,
        max,
    })
}

/// Statistics for each selected element over exactly `point_ids`.
pub fn group_stats(
    ds: &Dataset,
    point_ids: &BTreeSet<usize>,
    elements: Option<&[String]>,
) -> Result<Vec<SummaryStats>, StatsError> {
    if point_ids.is_empty() {
        return Err(StatsError::EmptySelection);
    }
    if let Some(&max) = point_ids.iter().next_back() {
        if max >= ds.len() {
            return Err(StatsError::UnknownPoint(max));
        }
    }
    let cols = ds.element_indices(elements)?;
    cols.into_iter()
        .map(|c| {
            let values: Vec<f64> = point_ids.iter().map(|&i| ds.points()[i].features[c]).collect();
            summarize(&ds.element_names()[c], &values)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    Mean,
    Cv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortDirection {
    Descending,
    Ascending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortOrder {
    pub key: SortKey,
    pub direction: SortDirection,
}

impl SortOrder {
    pub const MEAN_DESC: SortOrder = SortOrder {
        key: SortKey::Mean,
        direction: SortDirection::Descending,
    };

    /// Parse `mean_desc`, `mean_asc`, `cv_desc` or `cv_asc`.
    pub fn parse(s: &str) -> Option<SortOrder> {
        let (key, direction) = s.split_once('_')?;
        let key = match key {
            "mean" => SortKey::Mean,
            "cv" => SortKey::Cv,
            _ => return None,
        };
        let direction = match direction {
            "desc" => SortDirection::Descending,
            "asc" => SortDirection::Ascending,
            _ => return None,
        };
        Some(SortOrder { key, direction })
    }
}

/// Order elements by the requested key. Absent CVs go last in either
/// direction; ties break alphabetically.
pub fn sort_elements(stats: &[SummaryStats], order: SortOrder) -> Vec<String> {
    let key = |s: &SummaryStats| match order.key {
        SortKey::Mean => Some(s.mean),
        SortKey::Cv => s.cv,
    };
    let mut sorted: Vec<&SummaryStats> = stats.iter().collect();
    sorted.sort_by(|a, b| {
        let by_key = match (key(a), key(b)) {
            (Some(x), Some(y)) => match order.direction {
                SortDirection::Ascending => x.total_cmp(&y),
                SortDirection::Descending => y.total_cmp(&x),
            },
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_key.then_with(|| a.element.cmp(&b.element))
    });
    sorted.into_iter().map(|s| s.element.clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisplayScale {
    Linear,
    Log10 { log_floor: f64 },
}

impl DisplayScale {
    pub fn log10() -> DisplayScale {
        DisplayScale::Log10 {
            log_floor: DEFAULT_LOG_FLOOR,
        }
    }
}

pub fn display_value(v: f64, scale: DisplayScale) -> Result<f64, StatsError> {
    if v < 0.0 || v.is_nan() {
        return Err(StatsError::NegativeValue(v));
    }
    match scale {
        DisplayScale::Linear => Ok(v),
        DisplayScale::Log10 { log_floor } => {
            if !(log_floor > 0.0 && log_floor.is_finite()) {
                return Err(StatsError::InvalidLogFloor(log_floor));
            }
            Ok(v.max(log_floor).log10())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpAxis {
    pub element: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpLine<K> {
    pub key: K,
    /// Mean of each axis element for this group.
    pub means: Vec<f64>,
    /// Means mapped onto [0, 1] by the axis range.
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpAxes<K> {
    pub axes: Vec<PcpAxis>,
    pub lines: Vec<PcpLine<K>>,
}

fn normalize_on_axis(v: f64, min: f64, max: f64) -> f64 {
    if max == min {
        0.5
    } else {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    }
}

/// Parallel-coordinates layout: each axis spans the range of group means,
/// each group becomes one polyline of normalized means. A constant axis maps
/// to 0.5.
pub fn pcp_axes<K: Clone>(
    ds: &Dataset,
    groups: &[(K, &BTreeSet<usize>)],
    elements: Option<&[String]>,
) -> Result<PcpAxes<K>, StatsError> {
    if groups.is_empty() || groups.iter().any(|(_, m)| m.is_empty()) {
        return Err(StatsError::EmptySelection);
    }
    let cols = ds.element_indices(elements)?;
    let mut means = Vec::with_capacity(groups.len());
    for (_, members) in groups {
        if let Some(&max) = members.iter().next_back() {
            if max >= ds.len() {
                return Err(StatsError::UnknownPoint(max));
            }
        }
        let n = members.len() as f64;
        let row: Vec<f64> = cols
            .iter()
            .map(|&c| members.iter().map(|&i| ds.points()[i].features[c]).sum::<f64>() / n)
            .collect();
        means.push(row);
    }
    let axes: Vec<PcpAxis> = cols
        .iter()
        .enumerate()
        .map(|(a, &c)| {
            let (min, max) = means.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
                (lo.min(m[a]), hi.max(m[a]))
            });
            PcpAxis {
                element: ds.element_names()[c].clone(),
                min,
                max,
            }
        })
        .collect();
    let lines = groups
        .iter()
        .zip(means)
        .map(|((key, _), means)| PcpLine {
            key: key.clone(),
            normalized: means
                .iter()
                .zip(&axes)
                .map(|(&v, axis)| normalize_on_axis(v, axis.min, axis.max))
                .collect(),
            means,
        })
        .collect();
    Ok(PcpAxes { axes, lines })
}
