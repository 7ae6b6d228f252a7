//! Brute-force oracles and field builders shared by the integration tests.
#![allow(dead_code)]

use ifdefense::field::{Activation, Layer, MlpField};
use ifdefense::geometry::{Point, PointCloud};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Sorted `(index, distance)` of the `k` nearest points, ties by index.
pub fn brute_knn(
    points: &[Point],
    query: &Point,
    k: usize,
    skip: Option<usize>,
) -> Vec<(usize, f64)> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, p)| ((p - query).norm_squared(), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all.into_iter().map(|(d, i)| (i, d.sqrt())).collect()
}

/// Indices kept by statistical outlier removal, computed by exhaustive search.
pub fn brute_sor(points: &[Point], k: usize, alpha: f64) -> Vec<usize> {
    let means: Vec<f64> = (0..points.len())
        .map(|i| {
            let nn = brute_knn(points, &points[i], k, Some(i));
            nn.iter().map(|(_, d)| d).sum::<f64>() / k as f64
        })
        .collect();
    let n = means.len() as f64;
    let mu = means.iter().sum::<f64>() / n;
    let sd = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / n).sqrt();
    (0..points.len())
        .filter(|&i| means[i] <= mu + alpha * sd)
        .collect()
}

fn brute_nearest_sq(p: &Point, set: &[Point]) -> f64 {
    set.iter()
        .map(|q| (p - q).norm_squared())
        .fold(f64::INFINITY, f64::min)
}

pub fn brute_chamfer(a: &[Point], b: &[Point]) -> f64 {
    let ab = a.iter().map(|p| brute_nearest_sq(p, b)).sum::<f64>() / a.len() as f64;
    let ba = b.iter().map(|p| brute_nearest_sq(p, a)).sum::<f64>() / b.len() as f64;
    ab + ba
}

pub fn brute_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let ab = a.iter().map(|p| brute_nearest_sq(p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|p| brute_nearest_sq(p, a)).fold(0.0, f64::max);
    ab.max(ba).sqrt()
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, half: f64) -> Vec<Point> {
    (0..n)
        .map(|_| {
            Point::new(
                rng.random_range(-half..half),
                rng.random_range(-half..half),
                rng.random_range(-half..half),
            )
        })
        .collect()
}

/// Random points on a coarse lattice so that distance ties are common.
pub fn lattice_points<R: Rng>(rng: &mut R, n: usize, steps: i32) -> Vec<Point> {
    (0..n)
        .map(|_| {
            Point::new(
                rng.random_range(0..steps) as f64 * 0.25,
                rng.random_range(0..steps) as f64 * 0.25,
                rng.random_range(0..steps) as f64 * 0.25,
            )
        })
        .collect()
}

pub fn cloud(points: Vec<Point>) -> PointCloud {
    PointCloud::new(points).unwrap()
}

/// Tanh network `[3 + latent] -> widths... -> 1` with Gaussian weights.
pub fn random_mlp<R: Rng>(rng: &mut R, latent: usize, widths: &[usize]) -> MlpField {
    let mut dims = vec![3 + latent];
    dims.extend_from_slice(widths);
    dims.push(1);
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (cols, rows) = (w[0], w[1]);
            let scale = 1.5 / (cols as f64).sqrt();
            Layer {
                rows,
                cols,
                weights: (0..rows * cols).map(|_| scale * gauss(rng)).collect(),
                biases: (0..rows).map(|_| 0.1 * gauss(rng)).collect(),
                activation: if i + 2 == dims.len() {
                    Activation::Identity
                } else {
                    Activation::Tanh
                },
            }
        })
        .collect();
    let z = (0..latent).map(|_| gauss(rng)).collect();
    MlpField::new(layers, z).unwrap()
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
