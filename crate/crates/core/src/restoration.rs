//! Coordinate-optimization restoration.
//!
//! Points are moved by Adam on `L = L_G + lambda * L_D`, where `L_G` pulls
//! each point's occupancy toward the surface level `tau` with binary
//! cross-entropy and `L_D` is a Gaussian-weighted kNN repulsion term.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::OccupancyField;
use crate::geometry::{resample_to_count, Point, PointCloud};
use crate::spatial::{KnnGraph, SpatialIndex};

/// Distances below this are treated as this value in the repulsion term.
pub const DISTANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestorationConfig {
    pub tau: f64,
    pub lambda: f64,
    pub h: f64,
    pub k_rep: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub target_count: usize,
    /// Iterations between kNN graph rebuilds.
    pub knn_refresh: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Radius of the uniform-ball offset given to duplicated points.
    pub dup_jitter: f64,
}

impl Default for RestorationConfig {
    fn default() -> Self {
        Self {
            tau: 0.2,
            lambda: 500.0,
            h: 0.03,
            k_rep: 5,
            learning_rate: 0.01,
            iterations: 200,
            target_count: 1024,
            knn_refresh: 1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            dup_jitter: 1e-4,
        }
    }
}

impl RestorationConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(what.to_string()))
            }
        };
        check(self.tau > 0.0 && self.tau < 1.0, "tau must lie in (0, 1)")?;
        check(
            self.lambda >= 0.0 && self.lambda.is_finite(),
            "lambda must be nonnegative",
        )?;
        check(self.h > 0.0 && self.h.is_finite(), "h must be positive")?;
        check(self.k_rep >= 1, "k_rep must be positive")?;
        check(self.learning_rate > 0.0, "learning rate must be positive")?;
        check(self.iterations >= 1, "iterations must be positive")?;
        check(self.target_count >= 1, "target count must be positive")?;
        check(self.knn_refresh >= 1, "knn_refresh must be positive")?;
        check(
            (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2),
            "Adam betas must lie in [0, 1)",
        )?;
        check(self.epsilon > 0.0, "Adam epsilon must be positive")?;
        check(self.dup_jitter >= 0.0, "dup_jitter must be nonnegative")
    }
}

/// Binary cross-entropy of probability `p` against the soft target `tau`.
pub fn cross_entropy(p: f64, tau: f64) -> f64 {
    -(tau * p.ln() + (1.0 - tau) * (1.0 - p).ln())
}

/// `d cross_entropy / dp`.
pub fn cross_entropy_derivative(p: f64, tau: f64) -> f64 {
    (p - tau) / (p * (1.0 - p))
}

/// Sum of per-point cross-entropies and the gradient with respect to each point.
pub fn geometry_loss<F: OccupancyField + ?Sized>(
    field: &F,
    points: &[Point],
    tau: f64,
) -> (f64, Vec<Point>) {
    let per_point: Vec<(f64, Point)> = points
        .par_iter()
        .map(|x| {
            let (p, dp) = field.occupancy_and_gradient(x);
            (cross_entropy(p, tau), dp * cross_entropy_derivative(p, tau))
        })
        .collect();
    let loss = per_point.iter().map(|(l, _)| l).sum();
    (loss, per_point.into_iter().map(|(_, g)| g).collect())
}

fn repulsion_term(d: f64, h: f64) -> (f64, f64) {
    let e = (-(d * d) / (h * h)).exp();
    (-d * e, -(1.0 - 2.0 * d * d / (h * h)) * e)
}

/// Repulsion loss over a fixed neighbor graph. Each term feeds gradient to
/// both of its endpoints.
pub fn distribution_loss(points: &[Point], graph: &KnnGraph, h: f64) -> (f64, Vec<Point>) {
    let mut loss = 0.0;
    let mut grads = vec![Point::zeros(); points.len()];
    for (i, nbrs) in graph.neighbors.iter().enumerate() {
        for &j in nbrs {
            let diff = points[i] - points[j];
            let raw = diff.norm();
            let d = raw.max(DISTANCE_FLOOR);
            let (value, slope) = repulsion_term(d, h);
            loss += value;
            if raw >= DISTANCE_FLOOR {
                let g = diff * (slope / raw);
                grads[i] += g;
                grads[j] -= g;
            }
        }
    }
    (loss, grads)
}

/// Builds the `k_rep` neighbor graph from `index` and evaluates the repulsion loss.
pub fn distribution_loss_indexed(
    pc: &PointCloud,
    k_rep: usize,
    h: f64,
    index: &SpatialIndex,
) -> Result<(f64, Vec<Point>)> {
    if pc.len() <= k_rep {
        return Err(Error::TooFewPoints {
            needed: k_rep,
            got: pc.len(),
        });
    }
    let graph = KnnGraph::build(index, k_rep);
    Ok(distribution_loss(pc.points(), &graph, h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub geometry: f64,
    pub distribution: f64,
    pub total: f64,
}

/// `L_G + lambda * L_D` and its gradient. The graph may be `None` when
/// `lambda` is zero.
pub fn total_loss<F: OccupancyField + ?Sized>(
    field: &F,
    points: &[Point],
    graph: Option<&KnnGraph>,
    cfg: &RestorationConfig,
) -> (LossBreakdown, Vec<Point>) {
    let (lg, mut grads) = geometry_loss(field, points, cfg.tau);
    let mut ld = 0.0;
    if let Some(graph) = graph {
        let (value, gd) = distribution_loss(points, graph, cfg.h);
        ld = value;
        for (g, d) in grads.iter_mut().zip(gd) {
            *g += d * cfg.lambda;
        }
    }
    (
        LossBreakdown {
            geometry: lg,
            distribution: ld,
            total: lg + cfg.lambda * ld,
        },
        grads,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Point>,
    pub v: Vec<Point>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![Point::zeros(); n],
            v: vec![Point::zeros(); n],
            t: 0,
        }
    }

    /// One bias-corrected Adam step applied in place.
    pub fn step(
        &mut self,
        points: &mut [Point],
        grads: &[Point],
        lr: f64,
        (beta1, beta2): (f64, f64),
        eps: f64,
    ) {
        assert_eq!(points.len(), grads.len());
        assert_eq!(points.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for ((x, g), (m, v)) in points
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..3 {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                x[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestorationTrace {
    /// Loss evaluated before each update, one entry per iteration.
    pub losses: Vec<LossBreakdown>,
    /// Loss at the returned cloud, using the last neighbor graph.
    pub final_loss: LossBreakdown,
    pub cloud: PointCloud,
}

/// Resamples `pc` to `cfg.target_count` points and optimizes their
/// coordinates against `field`. Outlier removal is the caller's job.
pub fn restore<F: OccupancyField + ?Sized, R: Rng + ?Sized>(
    pc: &PointCloud,
    field: &F,
    cfg: &RestorationConfig,
    rng: &mut R,
) -> Result<RestorationTrace> {
    cfg.validate()?;
    let init = resample_to_count(pc, cfg.target_count, cfg.dup_jitter, rng)?;
    let use_repulsion = cfg.lambda > 0.0;
    if use_repulsion && init.len() <= cfg.k_rep {
        return Err(Error::TooFewPoints {
            needed: cfg.k_rep,
            got: init.len(),
        });
    }
    let mut points = init.into_points();
    let mut adam = AdamState::new(points.len());
    let mut graph: Option<KnnGraph> = None;
    let mut losses = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        if use_repulsion && it % cfg.knn_refresh == 0 {
            graph = Some(KnnGraph::from_points(&points, cfg.k_rep));
        }
        let (loss, grads) = total_loss(field, &points, graph.as_ref(), cfg);
        losses.push(loss);
        adam.step(
            &mut points,
            &grads,
            cfg.learning_rate,
            (cfg.beta1, cfg.beta2),
            cfg.epsilon,
        );
    }
    let (final_loss, _) = total_loss(field, &points, graph.as_ref(), cfg);
    Ok(RestorationTrace {
        losses,
        final_loss,
        cloud: PointCloud::new(points)?,
    })
}
