//! Constructive-solid-geometry occupancy fields built from signed distances.
//!
//! Occupancy is `sigmoid(-sharpness * d(x))` with `d` negative inside.

use serde_json::{json, Map, Value};

use super::OccupancyField;
use crate::error::{Error, Result};
use crate::geometry::Point;

pub const DEFAULT_SHARPNESS: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Csg {
    Sphere {
        center: Point,
        radius: f64,
    },
    Box {
        center: Point,
        half_extents: Point,
    },
    /// Ring in the plane through `center` orthogonal to z.
    Torus {
        center: Point,
        major: f64,
        minor: f64,
    },
    Capsule {
        a: Point,
        b: Point,
        radius: f64,
    },
    Union(Vec<Csg>),
    Intersection(Vec<Csg>),
    Difference(Box<Csg>, Box<Csg>),
}

impl Csg {
    pub fn sphere(center: [f64; 3], radius: f64) -> Self {
        Csg::Sphere {
            center: center.into(),
            radius,
        }
    }

    pub fn cuboid(center: [f64; 3], half_extents: [f64; 3]) -> Self {
        Csg::Box {
            center: center.into(),
            half_extents: half_extents.into(),
        }
    }

    pub fn torus(center: [f64; 3], major: f64, minor: f64) -> Self {
        Csg::Torus {
            center: center.into(),
            major,
            minor,
        }
    }

    pub fn capsule(a: [f64; 3], b: [f64; 3], radius: f64) -> Self {
        Csg::Capsule {
            a: a.into(),
            b: b.into(),
            radius,
        }
    }

    pub fn difference(a: Csg, b: Csg) -> Self {
        Csg::Difference(Box::new(a), Box::new(b))
    }

    /// Signed distance and its gradient. On min/max ties the first operand wins.
    pub fn distance_and_gradient(&self, x: &Point) -> (f64, Point) {
        match self {
            Csg::Sphere { center, radius } => {
                let v = x - center;
                let n = v.norm();
                let g = if n > 0.0 { v / n } else { Point::zeros() };
                (n - radius, g)
            }
            Csg::Box {
                center,
                half_extents,
            } => box_distance(&(x - center), half_extents),
            Csg::Torus {
                center,
                major,
                minor,
            } => {
                let v = x - center;
                let rho = v.x.hypot(v.y);
                let qx = rho - major;
                let qn = qx.hypot(v.z);
                let d = qn - minor;
                if qn == 0.0 {
                    return (d, Point::zeros());
                }
                let radial = if rho > 0.0 {
                    Point::new(v.x / rho, v.y / rho, 0.0)
                } else {
                    Point::zeros()
                };
                (d, radial * (qx / qn) + Point::z() * (v.z / qn))
            }
            Csg::Capsule { a, b, radius } => {
                let closest = segment_closest(x, a, b);
                let v = x - closest;
                let n = v.norm();
                let g = if n > 0.0 { v / n } else { Point::zeros() };
                (n - radius, g)
            }
            Csg::Union(children) => pick(children, x, |new, best| new < best),
            Csg::Intersection(children) => pick(children, x, |new, best| new > best),
            Csg::Difference(a, b) => {
                let (da, ga) = a.distance_and_gradient(x);
                let (db, gb) = b.distance_and_gradient(x);
                if -db > da {
                    (-db, -gb)
                } else {
                    (da, ga)
                }
            }
        }
    }

    pub fn distance(&self, x: &Point) -> f64 {
        self.distance_and_gradient(x).0
    }

    /// Lower bound (in distance units) on how far `x` is from a locus where
    /// the distance gradient is discontinuous: CSG min/max ties, box
    /// medial planes and edges, primitive centers and axes.
    pub fn switching_margin(&self, x: &Point) -> f64 {
        match self {
            Csg::Sphere { center, .. } => (x - center).norm(),
            Csg::Box {
                center,
                half_extents,
            } => {
                let v = x - center;
                let q = v.abs() - half_extents;
                let mut sorted = [q.x, q.y, q.z];
                sorted.sort_by(|a, b| b.total_cmp(a));
                if sorted[0] <= 0.0 {
                    let axis = q.imax();
                    (sorted[0] - sorted[1]).min(v[axis].abs())
                } else {
                    // Outside, the regime changes where a second component of
                    // q crosses zero.
                    let positive = q.iter().filter(|c| **c > 0.0).count();
                    q.iter()
                        .filter(|c| !(**c > 0.0 && positive == 1))
                        .map(|c| c.abs())
                        .fold(f64::INFINITY, f64::min)
                }
            }
            Csg::Torus { center, major, .. } => {
                let v = x - center;
                let rho = v.x.hypot(v.y);
                rho.min((rho - major).hypot(v.z))
            }
            Csg::Capsule { a, b, .. } => {
                let ab = b - a;
                let len2 = ab.norm_squared();
                let mut m = (x - segment_closest(x, a, b)).norm();
                if len2 > 0.0 {
                    // The closest-point map switches regime at the end caps.
                    let t = (x - a).dot(&ab) / len2;
                    m = m
                        .min(t.abs() * len2.sqrt())
                        .min((t - 1.0).abs() * len2.sqrt());
                }
                m
            }
            Csg::Union(children) | Csg::Intersection(children) => {
                let mut d: Vec<f64> = children.iter().map(|c| c.distance(x)).collect();
                d.sort_by(f64::total_cmp);
                let gap = if matches!(self, Csg::Union(_)) {
                    d[1] - d[0]
                } else {
                    d[d.len() - 1] - d[d.len() - 2]
                };
                children
                    .iter()
                    .map(|c| c.switching_margin(x))
                    .fold(gap, f64::min)
            }
            Csg::Difference(a, b) => {
                let gap = (a.distance(x) + b.distance(x)).abs();
                gap.min(a.switching_margin(x)).min(b.switching_margin(x))
            }
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidSpec {
                path: path.to_string(),
                reason: reason.to_string(),
            })
        };
        let finite = |p: &Point| p.iter().all(|c| c.is_finite());
        match self {
            Csg::Sphere { center, radius } => {
                if !finite(center) {
                    return bad("center must be finite");
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad("radius must be positive");
                }
            }
            Csg::Box {
                center,
                half_extents,
            } => {
                if !finite(center) {
                    return bad("center must be finite");
                }
                if !half_extents.iter().all(|h| *h > 0.0 && h.is_finite()) {
                    return bad("half_extents must be positive");
                }
            }
            Csg::Torus {
                center,
                major,
                minor,
            } => {
                if !finite(center) {
                    return bad("center must be finite");
                }
                if !(*major > 0.0 && major.is_finite() && *minor > 0.0 && minor.is_finite()) {
                    return bad("major and minor radii must be positive");
                }
            }
            Csg::Capsule { a, b, radius } => {
                if !finite(a) || !finite(b) {
                    return bad("endpoints must be finite");
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad("radius must be positive");
                }
            }
            Csg::Union(children) | Csg::Intersection(children) => {
                if children.len() < 2 {
                    return bad("needs at least two children");
                }
                for (i, c) in children.iter().enumerate() {
                    c.validate(&format!("{path}.children[{i}]"))?;
                }
            }
            Csg::Difference(a, b) => {
                a.validate(&format!("{path}.children[0]"))?;
                b.validate(&format!("{path}.children[1]"))?;
            }
        }
        Ok(())
    }

    pub fn from_json(value: &Value, path: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidSpec {
            path: path.to_string(),
            reason,
        };
        let obj = value
            .as_object()
            .ok_or_else(|| bad("expected an object".into()))?;
        let op = obj
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing string field \"op\"".into()))?;
        let num = |key: &str| -> Result<f64> {
            obj.get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| bad(format!("missing number \"{key}\"")))
        };
        let vec3 = |key: &str| -> Result<Point> {
            let arr = obj
                .get(key)
                .and_then(Value::as_array)
                .filter(|a| a.len() == 3)
                .ok_or_else(|| bad(format!("\"{key}\" must be an array of 3 numbers")))?;
            let mut p = Point::zeros();
            for (i, v) in arr.iter().enumerate() {
                p[i] = v
                    .as_f64()
                    .ok_or_else(|| bad(format!("\"{key}\" must be an array of 3 numbers")))?;
            }
            Ok(p)
        };
        let children = || -> Result<Vec<Csg>> {
            let arr = obj
                .get("children")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("missing array \"children\"".into()))?;
            arr.iter()
                .enumerate()
                .map(|(i, c)| Csg::from_json(c, &format!("{path}.children[{i}]")))
                .collect()
        };
        let node = match op {
            "sphere" => Csg::Sphere {
                center: vec3("center")?,
                radius: num("radius")?,
            },
            "box" => Csg::Box {
                center: vec3("center")?,
                half_extents: vec3("half_extents")?,
            },
            "torus" => Csg::Torus {
                center: vec3("center")?,
                major: num("major")?,
                minor: num("minor")?,
            },
            "capsule" => Csg::Capsule {
                a: vec3("a")?,
                b: vec3("b")?,
                radius: num("radius")?,
            },
            "union" => Csg::Union(children()?),
            "intersection" => Csg::Intersection(children()?),
            "difference" => {
                let mut c = children()?;
                if c.len() != 2 {
                    return Err(bad("difference needs exactly two children".into()));
                }
                let b = c.pop().expect("two children");
                let a = c.pop().expect("two children");
                Csg::difference(a, b)
            }
            other => return Err(bad(format!("unknown op \"{other}\""))),
        };
        Ok(node)
    }

    pub fn to_json(&self) -> Value {
        let v3 = |p: &Point| json!([p.x, p.y, p.z]);
        match self {
            Csg::Sphere { center, radius } => {
                json!({"op": "sphere", "center": v3(center), "radius": radius})
            }
            Csg::Box {
                center,
                half_extents,
            } => json!({"op": "box", "center": v3(center), "half_extents": v3(half_extents)}),
            Csg::Torus {
                center,
                major,
                minor,
            } => json!({"op": "torus", "center": v3(center), "major": major, "minor": minor}),
            Csg::Capsule { a, b, radius } => {
                json!({"op": "capsule", "a": v3(a), "b": v3(b), "radius": radius})
            }
            Csg::Union(c) => {
                json!({"op": "union", "children": c.iter().map(Csg::to_json).collect::<Vec<_>>()})
            }
            Csg::Intersection(c) => json!({
                "op": "intersection",
                "children": c.iter().map(Csg::to_json).collect::<Vec<_>>()
            }),
            Csg::Difference(a, b) => {
                json!({"op": "difference", "children": [a.to_json(), b.to_json()]})
            }
        }
    }
}

fn pick(children: &[Csg], x: &Point, better: impl Fn(f64, f64) -> bool) -> (f64, Point) {
    let mut best = children[0].distance_and_gradient(x);
    for c in &children[1..] {
        let cand = c.distance_and_gradient(x);
        if better(cand.0, best.0) {
            best = cand;
        }
    }
    best
}

fn segment_closest(x: &Point, a: &Point, b: &Point) -> Point {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((x - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

fn box_distance(v: &Point, half: &Point) -> (f64, Point) {
    let q = v.abs() - half;
    let sign = v.map(|c| if c < 0.0 { -1.0 } else { 1.0 });
    let outside = q.map(|c| c.max(0.0));
    let out_norm = outside.norm();
    let qmax = q.max();
    if qmax > 0.0 {
        let g = outside.component_mul(&sign) / out_norm;
        (out_norm, g)
    } else {
        let axis = q.imax();
        let mut g = Point::zeros();
        g[axis] = sign[axis];
        (qmax, g)
    }
}

/// Occupancy field over a CSG tree.
#[derive(Debug, Clone)]
pub struct AnalyticField {
    name: String,
    csg: Csg,
    sharpness: f64,
}

impl AnalyticField {
    pub fn new(csg: Csg, sharpness: f64) -> Result<Self> {
        if !(sharpness > 0.0 && sharpness.is_finite()) {
            return Err(Error::InvalidSpec {
                path: "$.sharpness".into(),
                reason: "sharpness must be positive".into(),
            });
        }
        csg.validate("$.csg")?;
        Ok(Self {
            name: "analytic".into(),
            csg,
            sharpness,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn csg(&self) -> &Csg {
        &self.csg
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    /// Parses `{"sharpness": c, "csg": {...}}`; sharpness defaults to 50.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let obj = value.as_object().ok_or_else(|| Error::InvalidSpec {
            path: "$".into(),
            reason: "expected an object".into(),
        })?;
        let sharpness = match obj.get("sharpness") {
            None => DEFAULT_SHARPNESS,
            Some(v) => v.as_f64().ok_or_else(|| Error::InvalidSpec {
                path: "$.sharpness".into(),
                reason: "must be a number".into(),
            })?,
        };
        let csg_value = obj.get("csg").ok_or_else(|| Error::InvalidSpec {
            path: "$".into(),
            reason: "missing \"csg\"".into(),
        })?;
        let csg = Csg::from_json(csg_value, "$.csg")?;
        Self::new(csg, sharpness)
    }

    pub fn to_json_string(&self) -> String {
        let mut obj = Map::new();
        obj.insert("sharpness".into(), json!(self.sharpness));
        obj.insert("csg".into(), self.csg.to_json());
        serde_json::to_string_pretty(&Value::Object(obj)).expect("json value serializes")
    }

    pub fn signed_distance(&self, x: &Point) -> f64 {
        self.csg.distance(x)
    }

    /// Distance from the `level` occupancy iso-surface to the zero
    /// distance surface: `ln((1 - level) / level) / sharpness`.
    pub fn iso_offset(&self, level: f64) -> f64 {
        ((1.0 - level) / level).ln() / self.sharpness
    }
}

impl OccupancyField for AnalyticField {
    fn name(&self) -> &str {
        &self.name
    }

    fn logit_and_gradient(&self, x: &Point) -> (f64, Point) {
        let (d, g) = self.csg.distance_and_gradient(x);
        (-self.sharpness * d, g * -self.sharpness)
    }
}

/// Built-in shapes, all inside the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    Sphere,
    Torus,
    TwoSpheres,
    BoxMinusSphere,
}

impl Fixture {
    pub const ALL: [Fixture; 4] = [
        Fixture::Sphere,
        Fixture::Torus,
        Fixture::TwoSpheres,
        Fixture::BoxMinusSphere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::Sphere => "sphere",
            Fixture::Torus => "torus",
            Fixture::TwoSpheres => "two-spheres",
            Fixture::BoxMinusSphere => "box-minus-sphere",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn csg(self) -> Csg {
        match self {
            Fixture::Sphere => Csg::sphere([0.0; 3], 0.5),
            Fixture::Torus => Csg::torus([0.0; 3], 0.6, 0.2),
            Fixture::TwoSpheres => Csg::Union(vec![
                Csg::sphere([-0.4, 0.0, 0.0], 0.35),
                Csg::sphere([0.4, 0.0, 0.0], 0.35),
            ]),
            Fixture::BoxMinusSphere => Csg::difference(
                Csg::cuboid([0.0; 3], [0.45, 0.45, 0.45]),
                Csg::sphere([0.0; 3], 0.55),
            ),
        }
    }

    pub fn field(self) -> AnalyticField {
        AnalyticField::new(self.csg(), DEFAULT_SHARPNESS)
            .expect("fixture specs are valid")
            .with_name(self.name())
    }
}
