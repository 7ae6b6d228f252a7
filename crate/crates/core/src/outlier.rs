// `!(x > 0.0)` is used on purpose so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Statistical outlier removal.
//!
//! Each point gets `d_i`, the mean distance to its `k` nearest neighbors.
//! Points with `d_i <= mean(d) + alpha * std(d)` survive; `std` is the
//! population standard deviation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::spatial::SpatialIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SorConfig {
    pub k: usize,
    pub alpha: f64,
}

impl Default for SorConfig {
    fn default() -> Self {
        Self { k: 2, alpha: 1.1 }
    }
}

#[derive(Debug, Clone)]
pub struct SorOutput {
    pub cloud: PointCloud,
    pub removed: Vec<usize>,
}

/// Mean distance from each point to its `k` nearest neighbors.
pub fn mean_knn_distances(pc: &PointCloud, k: usize) -> Vec<f64> {
    let index = SpatialIndex::new(pc);
    (0..pc.len())
        .map(|i| {
            let nn = index.knn_of(i, k);
            nn.iter().map(|n| n.distance).sum::<f64>() / nn.len() as f64
        })
        .collect()
}

pub(crate) fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn sor_filter(pc: &PointCloud, cfg: &SorConfig) -> Result<SorOutput> {
    if cfg.k == 0 {
        return Err(Error::InvalidParameter("SOR k must be positive".into()));
    }
    if !(cfg.alpha >= 0.0) {
        return Err(Error::InvalidParameter(
            "SOR alpha must be nonnegative".into(),
        ));
    }
    if pc.len() <= cfg.k {
        return Err(Error::TooFewPoints {
            needed: cfg.k,
            got: pc.len(),
        });
    }
    let d = mean_knn_distances(pc, cfg.k);
    let (mean, std) = mean_and_population_std(&d);
    let threshold = mean + cfg.alpha * std;
    let mut kept = Vec::with_capacity(pc.len());
    let mut removed = Vec::new();
    for (i, (p, di)) in pc.points().iter().zip(&d).enumerate() {
        if *di <= threshold {
            kept.push(*p);
        } else {
            removed.push(i);
        }
    }
    Ok(SorOutput {
        cloud: PointCloud::new(kept)?,
        removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn defaults() {
        let cfg = SorConfig::default();
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.alpha, 1.1);
    }

    #[test]
    fn cube_keeps_everything() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(Point::new(
                (i & 1) as f64,
                ((i >> 1) & 1) as f64,
                ((i >> 2) & 1) as f64,
            ));
        }
        let out = sor_filter(&PointCloud::new(pts).unwrap(), &SorConfig::default()).unwrap();
        assert!(out.removed.is_empty());
        assert_eq!(out.cloud.len(), 8);
    }

    #[test]
    fn line_with_far_point() {
        let mut pts: Vec<Point> = (0..20).map(|i| Point::new(i as f64, 0.0, 0.0)).collect();
        pts.push(Point::new(19.0 + 100.0, 0.0, 0.0));
        let out = sor_filter(&PointCloud::new(pts).unwrap(), &SorConfig::default()).unwrap();
        assert_eq!(out.removed, vec![20]);
        assert_eq!(out.cloud.len(), 20);
    }

    #[test]
    fn too_few_points() {
        let pc = PointCloud::new(vec![Point::zeros(), Point::x()]).unwrap();
        assert!(matches!(
            sor_filter(&pc, &SorConfig::default()),
            Err(Error::TooFewPoints { .. })
        ));
    }
}
