// `!(x > 0.0)` is used on purpose so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Synthetic generators for the four attack effects (off-surface outliers,
//! on-surface redistribution, local part removal, smooth deformation) and a
//! white-box attack that pushes points off the implicit surface under a
//! Chamfer budget.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{project_to_level, OccupancyField};
use crate::geometry::{Point, PointCloud};
use crate::metrics::chamfer;
use crate::restoration::{cross_entropy, cross_entropy_derivative};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    RandomMember,
    FarthestFromCentroid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Corruption {
    OutOfSurface {
        fraction: f64,
        magnitude: f64,
    },
    OnSurface {
        sigma: f64,
    },
    PartRemoval {
        radius: f64,
        seed_mode: SeedMode,
    },
    Deformation {
        amplitude: f64,
        frequency: f64,
        axis: [f64; 3],
    },
    Adaptive {
        iterations: usize,
        step: f64,
        budget: f64,
    },
}

pub const ADAPTIVE_DEFAULT_ITERATIONS: usize = 100;
pub const ADAPTIVE_DEFAULT_STEP: f64 = 0.005;
pub const ADAPTIVE_DEFAULT_BUDGET: f64 = 2.0e-3;

impl Corruption {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Corruption::OutOfSurface {
                fraction,
                magnitude,
            } => fraction > 0.0 && fraction <= 1.0 && magnitude > 0.0,
            Corruption::OnSurface { sigma } => sigma >= 0.0 && sigma.is_finite(),
            Corruption::PartRemoval { radius, .. } => radius > 0.0,
            Corruption::Deformation {
                amplitude,
                frequency,
                axis,
            } => {
                amplitude >= 0.0
                    && frequency.is_finite()
                    && Point::from(axis).norm() > 0.0
                    && axis.iter().all(|a| a.is_finite())
            }
            Corruption::Adaptive {
                iterations,
                step,
                budget,
            } => iterations >= 1 && step > 0.0 && budget >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "bad corruption parameters: {self}"
            )))
        }
    }

    pub fn apply<F: OccupancyField + ?Sized, R: Rng + ?Sized>(
        &self,
        pc: &PointCloud,
        field: &F,
        tau: f64,
        rng: &mut R,
    ) -> Result<PointCloud> {
        self.validate()?;
        match *self {
            Corruption::OutOfSurface {
                fraction,
                magnitude,
            } => add_outliers(pc, fraction, magnitude, rng),
            Corruption::OnSurface { sigma } => jitter_on_surface(pc, field, sigma, rng),
            Corruption::PartRemoval { radius, seed_mode } => {
                remove_local_part(pc, radius, seed_mode, rng)
            }
            Corruption::Deformation {
                amplitude,
                frequency,
                axis,
            } => deform(pc, amplitude, frequency, axis.into(), rng),
            Corruption::Adaptive {
                iterations,
                step,
                budget,
            } => adaptive_attack(pc, field, tau, iterations, step, budget),
        }
    }
}

impl fmt::Display for Corruption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Corruption::OutOfSurface {
                fraction,
                magnitude,
            } => {
                write!(f, "outliers({fraction},{magnitude})")
            }
            Corruption::OnSurface { sigma } => write!(f, "jitter({sigma})"),
            Corruption::PartRemoval { radius, seed_mode } => {
                let mode = match seed_mode {
                    SeedMode::RandomMember => "random",
                    SeedMode::FarthestFromCentroid => "farthest",
                };
                write!(f, "drop({radius},{mode})")
            }
            Corruption::Deformation {
                amplitude,
                frequency,
                axis,
            } => write!(
                f,
                "deform({amplitude},{frequency},{},{},{})",
                axis[0], axis[1], axis[2]
            ),
            Corruption::Adaptive {
                iterations,
                step,
                budget,
            } => write!(f, "adaptive({iterations},{step},{budget})"),
        }
    }
}

impl FromStr for Corruption {
    type Err = Error;

    /// Parses `name(arg, ...)`, e.g. `outliers(0.1,0.3)`, `jitter(0.02)`,
    /// `drop(0.3,farthest)`, `deform(0.1,5,0,0,1)`, `adaptive(100,0.005,0.002)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse corruption \"{s}\""));
        let s = s.trim();
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<&str> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .collect();
        let num =
            |i: usize| -> Result<f64> { args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let c = match (name.trim(), args.len()) {
            ("outliers", 2) => Corruption::OutOfSurface {
                fraction: num(0)?,
                magnitude: num(1)?,
            },
            ("jitter", 1) => Corruption::OnSurface { sigma: num(0)? },
            ("drop", 1 | 2) => Corruption::PartRemoval {
                radius: num(0)?,
                seed_mode: match args.get(1).copied() {
                    None | Some("random") => SeedMode::RandomMember,
                    Some("farthest") => SeedMode::FarthestFromCentroid,
                    _ => return Err(bad()),
                },
            },
            ("deform", 2) => Corruption::Deformation {
                amplitude: num(0)?,
                frequency: num(1)?,
                axis: [0.0, 0.0, 1.0],
            },
            ("deform", 5) => Corruption::Deformation {
                amplitude: num(0)?,
                frequency: num(1)?,
                axis: [num(2)?, num(3)?, num(4)?],
            },
            ("adaptive", 0) => Corruption::Adaptive {
                iterations: ADAPTIVE_DEFAULT_ITERATIONS,
                step: ADAPTIVE_DEFAULT_STEP,
                budget: ADAPTIVE_DEFAULT_BUDGET,
            },
            ("adaptive", 3) => Corruption::Adaptive {
                iterations: num(0)? as usize,
                step: num(1)?,
                budget: num(2)?,
            },
            _ => return Err(bad()),
        };
        c.validate()?;
        Ok(c)
    }
}

/// A chain of corruptions applied left to right, written `a+b+...`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub stages: Vec<Corruption>,
}

impl CorruptionSpec {
    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn apply<F: OccupancyField + ?Sized, R: Rng + ?Sized>(
        &self,
        pc: &PointCloud,
        field: &F,
        tau: f64,
        rng: &mut R,
    ) -> Result<PointCloud> {
        let mut cur = pc.clone();
        for stage in &self.stages {
            cur = stage.apply(&cur, field, tau, rng)?;
        }
        Ok(cur)
    }
}

impl FromStr for CorruptionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Self::default());
        }
        let stages = s.split('+').map(str::parse).collect::<Result<Vec<_>>>()?;
        Ok(Self { stages })
    }
}

impl fmt::Display for CorruptionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.stages.is_empty() {
            return write!(f, "none");
        }
        for (i, s) in self.stages.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Point {
    let d: [f64; 3] = UnitSphere.sample(rng);
    Point::from(d)
}

/// Moves `ceil(fraction * N)` randomly chosen points by a random direction
/// times a distance drawn from `[magnitude / 2, magnitude]`.
pub fn add_outliers<R: Rng + ?Sized>(
    pc: &PointCloud,
    fraction: f64,
    magnitude: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(
            "outlier fraction must lie in (0, 1]".into(),
        ));
    }
    if !(magnitude > 0.0) {
        return Err(Error::InvalidParameter(
            "outlier magnitude must be positive".into(),
        ));
    }
    let n = pc.len();
    let count = ((fraction * n as f64).ceil() as usize).min(n);
    let mut picked = index::sample(rng, n, count).into_vec();
    picked.sort_unstable();
    let mut points = pc.points().to_vec();
    for i in picked {
        let dir = random_direction(rng);
        let dist = rng.random_range(magnitude / 2.0..=magnitude);
        points[i] += dir * dist;
    }
    PointCloud::new(points)
}

/// Redistributes points along the surface: a Gaussian offset projected on
/// the tangent plane, then a bisection along the gradient back to the
/// starting occupancy.
pub fn jitter_on_surface<F: OccupancyField + ?Sized, R: Rng + ?Sized>(
    pc: &PointCloud,
    field: &F,
    sigma: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter("sigma must be nonnegative".into()));
    }
    let mut out = Vec::with_capacity(pc.len());
    for (i, x) in pc.points().iter().enumerate() {
        let (level, g) = field.occupancy_and_gradient(x);
        let gn = g.norm();
        if gn < 1e-9 {
            return Err(Error::FlatGradient { index: i });
        }
        let normal = g / gn;
        let offset = Point::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ) * sigma;
        let tangent = offset - normal * offset.dot(&normal);
        if tangent == Point::zeros() {
            out.push(*x);
            continue;
        }
        let moved = x + tangent;
        out.push(project_to_level(field, &moved, level, tangent.norm()).unwrap_or(*x));
    }
    PointCloud::new(out)
}

/// Deletes every point within `radius` of a seed point.
pub fn remove_local_part<R: Rng + ?Sized>(
    pc: &PointCloud,
    radius: f64,
    seed_mode: SeedMode,
    rng: &mut R,
) -> Result<PointCloud> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(
            "removal radius must be positive".into(),
        ));
    }
    let pts = pc.points();
    let seed = match seed_mode {
        SeedMode::RandomMember => pts[rng.random_range(0..pts.len())],
        SeedMode::FarthestFromCentroid => {
            let c = pc.centroid();
            let mut best = 0;
            for (i, p) in pts.iter().enumerate() {
                if (p - c).norm() > (pts[best] - c).norm() {
                    best = i;
                }
            }
            pts[best]
        }
    };
    let kept: Vec<Point> = pts
        .iter()
        .filter(|p| (*p - seed).norm() > radius)
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(Error::CloudAnnihilated);
    }
    PointCloud::new(kept)
}

/// Sinusoidal shear `x + amplitude * sin(frequency * <x, axis>) * perp`,
/// with `perp` a random unit vector orthogonal to `axis`.
pub fn deform<R: Rng + ?Sized>(
    pc: &PointCloud,
    amplitude: f64,
    frequency: f64,
    axis: Point,
    rng: &mut R,
) -> Result<PointCloud> {
    let an = axis.norm();
    if !(an > 0.0) {
        return Err(Error::InvalidParameter(
            "deformation axis must be nonzero".into(),
        ));
    }
    let axis = axis / an;
    let perp = loop {
        let r = random_direction(rng);
        let p = r - axis * r.dot(&axis);
        if p.norm() > 1e-3 {
            break p.normalize();
        }
    };
    let points = pc
        .points()
        .iter()
        .map(|x| x + perp * (amplitude * (frequency * x.dot(&axis)).sin()))
        .collect();
    PointCloud::new(points)
}

/// Mean cross-entropy of the cloud's occupancies against `tau`.
pub fn mean_cross_entropy<F: OccupancyField + ?Sized>(field: &F, pc: &PointCloud, tau: f64) -> f64 {
    pc.points()
        .iter()
        .map(|x| cross_entropy(field.occupancy(x), tau))
        .sum::<f64>()
        / pc.len() as f64
}

/// Gradient ascent on the summed cross-entropy against `tau`, keeping the
/// Chamfer distance to the input within `budget`.
///
/// Each step moves every point by `step` along its normalized loss
/// gradient. A point sitting exactly on the level set has zero gradient; it
/// moves outward along the occupancy normal, which also raises its loss.
/// When a step exceeds the budget, all displacements are scaled by the
/// largest common factor that satisfies it.
pub fn adaptive_attack<F: OccupancyField + ?Sized>(
    pc: &PointCloud,
    field: &F,
    tau: f64,
    iterations: usize,
    step: f64,
    budget: f64,
) -> Result<PointCloud> {
    if iterations == 0 || !(step > 0.0) || !(budget >= 0.0) {
        return Err(Error::InvalidParameter(
            "bad adaptive attack parameters".into(),
        ));
    }
    let original = pc.points().to_vec();
    let mut current = original.clone();
    for _ in 0..iterations {
        let mut proposal = current.clone();
        for x in proposal.iter_mut() {
            let (p, dp) = field.occupancy_and_gradient(x);
            let g = dp * cross_entropy_derivative(p, tau);
            let dir = if g.norm() > 1e-12 {
                g.normalize()
            } else if dp.norm() > 1e-12 {
                -dp.normalize()
            } else {
                continue;
            };
            *x += dir * step;
        }
        current = enforce_budget(&original, &proposal, budget)?;
    }
    PointCloud::new(current)
}

fn enforce_budget(original: &[Point], proposal: &[Point], budget: f64) -> Result<Vec<Point>> {
    let orig = PointCloud::new(original.to_vec())?;
    let blend = |alpha: f64| -> Vec<Point> {
        original
            .iter()
            .zip(proposal)
            .map(|(o, p)| o + (p - o) * alpha)
            .collect()
    };
    let within = |pts: &[Point]| -> Result<bool> {
        Ok(chamfer(&PointCloud::new(pts.to_vec())?, &orig)? <= budget)
    };
    if within(proposal)? {
        return Ok(proposal.to_vec());
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if within(&blend(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(blend(lo))
}
