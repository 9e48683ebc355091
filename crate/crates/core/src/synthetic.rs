//! Synthetic datasets with planted structure, for demos and tests.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;

pub const CRATER_ELEMENTS: [&str; 8] = ["Na", "Mg", "Al", "Si", "K", "Ca", "Ti", "Fe"];
pub const CRATER_GRID: usize = 80;
pub const CRATER_RADIUS: f64 = 15.0;

/// Mean weight % per element for each planted region.
const REGION_MEANS: [[f64; 8]; 2] = [
    // surrounding matrix
    [2.5, 5.0, 7.5, 22.0, 0.8, 6.5, 0.9, 12.0],
    // crater floor
    [1.0, 18.0, 3.0, 19.0, 0.2, 2.5, 0.3, 16.0],
];

pub const REGION_NAMES: [&str; 2] = ["matrix", "crater"];

/// A generated dataset and the region each point was drawn from.
#[derive(Debug, Clone)]
pub struct PlantedDataset {
    pub dataset: Dataset,
    /// Index into [`REGION_NAMES`] per point.
    pub regions: Vec<usize>,
}

impl PlantedDataset {
    pub fn region(&self, region: usize) -> BTreeSet<usize> {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, &r)| r == region)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn crater(&self) -> BTreeSet<usize> {
        self.region(1)
    }
}

fn region_at(x: f64, y: f64) -> usize {
    let centre = (CRATER_GRID / 2) as f64;
    let r = ((x - centre).powi(2) + (y - centre).powi(2)).sqrt();
    usize::from(r <= CRATER_RADIUS)
}

/// 80 × 80 grid (unit spacing, ids row-major) with a circular crater of
/// radius 15 in the middle of a uniform matrix. Each element's noise sd is
/// 10% of the gap between the crater and matrix means for that element.
pub fn crater_dataset(seed: u64) -> PlantedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<Normal<f64>> = (0..CRATER_ELEMENTS.len())
        .map(|e| Normal::new(0.0, 0.1 * (REGION_MEANS[1][e] - REGION_MEANS[0][e]).abs()).expect("finite sd"))
        .collect();
    let mut regions = Vec::with_capacity(CRATER_GRID * CRATER_GRID);
    let mut points = Vec::with_capacity(CRATER_GRID * CRATER_GRID);
    for row in 0..CRATER_GRID {
        for col in 0..CRATER_GRID {
            let (x, y) = (col as f64, row as f64);
            let region = region_at(x, y);
            let features = REGION_MEANS[region]
                .iter()
                .zip(&noise)
                .map(|(&mu, n)| (mu + n.sample(&mut rng)).max(0.0))
                .collect();
            regions.push(region);
            points.push(([x, y, 0.0], features));
        }
    }
    let dataset = Dataset::from_points(
        "crater-synthetic",
        CRATER_ELEMENTS.iter().map(|s| s.to_string()).collect(),
        points,
    )
    .expect("generated values are finite and non-negative");
    PlantedDataset { dataset, regions }
}

/// Isotropic Gaussian blobs: `per_blob` points around each center.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_blob: usize, sd: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let d = centers.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sd).expect("finite sd");
    let n = centers.len() * per_blob;
    let mut m = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for (b, c) in centers.iter().enumerate() {
        for p in 0..per_blob {
            let row = b * per_blob + p;
            for j in 0..d {
                m[[row, j]] = c[j] + normal.sample(&mut rng);
            }
            labels.push(b);
        }
    }
    (m, labels)
}
