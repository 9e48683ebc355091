//! Lasso geometry: even-odd point-in-polygon with inclusive boundaries.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    DegeneratePolygon(usize),
    #[error("polygon vertex {0} is not finite")]
    NonFiniteVertex(usize),
}

impl GeometryError {
    pub fn code(&self) -> &'static str {
        match self {
            GeometryError::DegeneratePolygon(_) => "DegeneratePolygon",
            GeometryError::NonFiniteVertex(_) => "DegeneratePolygon",
        }
    }
}

/// Closed polygon in dataset coordinates. Self-intersections are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

impl TryFrom<Vec<[f64; 2]>> for Polygon {
    type Error = GeometryError;

    fn try_from(vertices: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        Polygon::new(vertices)
    }
}

impl From<Polygon> for Vec<[f64; 2]> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Polygon, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::DegeneratePolygon(vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(GeometryError::NonFiniteVertex(i));
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Even-odd containment; points on an edge or vertex are inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if on_segment(x, y, a, b) {
                return true;
            }
            // half-open rule on y so a vertex crossing counts once
            if (a[1] > y) != (b[1] > y) {
                let x_cross = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn on_segment(x: f64, y: f64, a: [f64; 2], b: [f64; 2]) -> bool {
    if x < a[0].min(b[0]) || x > a[0].max(b[0]) || y < a[1].min(b[1]) || y > a[1].max(b[1]) {
        return false;
    }
    let cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
    let scale = (b[0] - a[0]).abs().max((b[1] - a[1]).abs()).max(f64::MIN_POSITIVE);
    // |cross| / |b - a| is the distance to the supporting line
    cross.abs() <= 1e-12 * scale * scale.max(1.0)
}

/// Free-function form operating on raw vertices.
pub fn point_in_polygon(p: (f64, f64), vertices: &[[f64; 2]]) -> Result<bool, GeometryError> {
    Ok(Polygon::new(vertices.to_vec())?.contains(p.0, p.1))
}

/// A set of point ids.
pub type Selection = BTreeSet<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LassoMode {
    Add,
    Remove,
}

/// Ids of all points whose (x, y) fall inside the polygon. z is ignored.
pub fn enclosed_points(ds: &Dataset, poly: &Polygon) -> Selection {
    ds.points()
        .iter()
        .filter(|p| poly.contains(p.x, p.y))
        .map(|p| p.id)
        .collect()
}

pub fn lasso_select(ds: &Dataset, poly: &Polygon, mode: LassoMode, current: &Selection) -> Selection {
    let enclosed = enclosed_points(ds, poly);
    match mode {
        LassoMode::Add => current.union(&enclosed).copied().collect(),
        LassoMode::Remove => current.difference(&enclosed).copied().collect(),
    }
}
