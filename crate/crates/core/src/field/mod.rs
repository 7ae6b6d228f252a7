//! Implicit occupancy fields: a point maps to the probability of lying
//! inside the shape, together with the spatial gradient of that probability.

mod analytic;
mod mlp;

pub use analytic::{AnalyticField, Csg, Fixture, DEFAULT_SHARPNESS};
pub use mlp::{Activation, Layer, MlpField, MLP_MAGIC};

use crate::geometry::Point;

/// Probabilities are kept inside `[OCC_EPS, 1 - OCC_EPS]`.
pub const OCC_EPS: f64 = 1e-7;

pub trait OccupancyField: Send + Sync {
    fn name(&self) -> &str;

    /// Pre-logistic score `s` with occupancy `sigmoid(s)`, and its gradient.
    fn logit_and_gradient(&self, x: &Point) -> (f64, Point);

    fn logit(&self, x: &Point) -> f64 {
        self.logit_and_gradient(x).0
    }

    fn occupancy(&self, x: &Point) -> f64 {
        clamp_probability(sigmoid(self.logit(x)))
    }

    /// Occupancy and its gradient. Where the probability is clamped the
    /// gradient is zero, matching the clamped function.
    fn occupancy_and_gradient(&self, x: &Point) -> (f64, Point) {
        let (s, ds) = self.logit_and_gradient(x);
        probability_from_logit(s, ds)
    }

    fn gradient(&self, x: &Point) -> Point {
        self.occupancy_and_gradient(x).1
    }
}

impl<F: OccupancyField + ?Sized> OccupancyField for Box<F> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn logit_and_gradient(&self, x: &Point) -> (f64, Point) {
        (**self).logit_and_gradient(x)
    }
}

impl<F: OccupancyField + ?Sized> OccupancyField for &F {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn logit_and_gradient(&self, x: &Point) -> (f64, Point) {
        (**self).logit_and_gradient(x)
    }
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(OCC_EPS, 1.0 - OCC_EPS)
}

pub(crate) fn probability_from_logit(s: f64, ds: Point) -> (f64, Point) {
    let raw = sigmoid(s);
    let p = clamp_probability(raw);
    if raw != p {
        return (p, Point::zeros());
    }
    (p, ds * (raw * (1.0 - raw)))
}

const LEVEL_BISECTION_STEPS: usize = 40;
const LEVEL_TOLERANCE: f64 = 1e-6;

/// Bisection along the gradient line through `start` for the point whose
/// occupancy equals `level` (to within 1e-6). `scale` seeds the bracket
/// search. Returns `None` when the gradient vanishes or no bracket is found.
pub fn project_to_level<F: OccupancyField + ?Sized>(
    field: &F,
    start: &Point,
    level: f64,
    scale: f64,
) -> Option<Point> {
    let residual = |p: &Point| field.occupancy(p) - level;
    let r0 = residual(start);
    if r0.abs() <= LEVEL_TOLERANCE {
        return Some(*start);
    }
    let g = field.gradient(start);
    if g.norm() < 1e-12 {
        return None;
    }
    let dir = g.normalize();
    // Occupancy increases along `dir`, so a negative residual means step forward.
    let sign = if r0 < 0.0 { 1.0 } else { -1.0 };
    let mut lo = 0.0;
    let mut hi = scale.max(1e-6);
    let mut found = false;
    for _ in 0..30 {
        if residual(&(start + dir * (sign * hi))) * r0 <= 0.0 {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found {
        return None;
    }
    let mut best = start + dir * (sign * hi);
    for _ in 0..LEVEL_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let p = start + dir * (sign * mid);
        let r = residual(&p);
        best = p;
        if r.abs() <= LEVEL_TOLERANCE {
            break;
        }
        if r * r0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(best)
}
