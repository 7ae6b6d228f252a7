//! Point-set distances and a uniformity score.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};
use crate::outlier::{mean_and_population_std, mean_knn_distances};
use crate::spatial::SpatialIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub chamfer: f64,
    pub hausdorff: f64,
    pub uniformity_cv: f64,
    pub count_a: usize,
    pub count_b: usize,
}

fn nearest_sq(from: &[Point], to: &SpatialIndex) -> Vec<f64> {
    from.iter()
        .map(|p| {
            let nn = to.knn_query(p, 1, false)[0];
            (p - to.point(nn.index)).norm_squared()
        })
        .collect()
}

/// Mean squared nearest-neighbor distance from `a` to `b` plus the same
/// from `b` to `a`.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let ia = SpatialIndex::new(a);
    let ib = SpatialIndex::new(b);
    let ab = nearest_sq(a.points(), &ib);
    let ba = nearest_sq(b.points(), &ia);
    Ok(ab.iter().sum::<f64>() / ab.len() as f64 + ba.iter().sum::<f64>() / ba.len() as f64)
}

/// Symmetric Hausdorff distance (not squared).
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let ia = SpatialIndex::new(a);
    let ib = SpatialIndex::new(b);
    let ab = nearest_sq(a.points(), &ib).into_iter().fold(0.0, f64::max);
    let ba = nearest_sq(b.points(), &ia).into_iter().fold(0.0, f64::max);
    Ok(ab.max(ba).sqrt())
}

/// Coefficient of variation (population std / mean) of each point's mean
/// distance to its `k` nearest neighbors.
pub fn uniformity_cv(pc: &PointCloud, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if pc.len() <= k {
        return Err(Error::TooFewPoints {
            needed: k,
            got: pc.len(),
        });
    }
    let d = mean_knn_distances(pc, k);
    let (mean, std) = mean_and_population_std(&d);
    if mean == 0.0 {
        return Ok(0.0);
    }
    Ok(std / mean)
}

/// Largest distance from a point to its nearest other point.
pub fn max_nearest_gap(pc: &PointCloud) -> f64 {
    if pc.len() < 2 {
        return 0.0;
    }
    let index = SpatialIndex::new(pc);
    (0..pc.len())
        .map(|i| index.knn_of(i, 1)[0].distance)
        .fold(0.0, f64::max)
}

pub fn evaluate(restored: &PointCloud, reference: &PointCloud, k: usize) -> Result<MetricsReport> {
    Ok(MetricsReport {
        chamfer: chamfer(restored, reference)?,
        hausdorff: hausdorff(restored, reference)?,
        uniformity_cv: if restored.len() > k {
            uniformity_cv(restored, k)?
        } else {
            0.0
        },
        count_a: restored.len(),
        count_b: reference.len(),
    })
}
