//! Point clouds, triangle meshes and the sampling routines shared by the
//! restoration stages.

use nalgebra::Vector3;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, UnitBall};

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// An ordered, nonempty set of finite 3D points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { points })
    }

    pub fn from_arrays(points: &[[f64; 3]]) -> Result<Self> {
        Self::new(
            points
                .iter()
                .map(|p| Point::new(p[0], p[1], p[2]))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn centroid(&self) -> Point {
        let sum = self.points.iter().fold(Point::zeros(), |acc, p| acc + p);
        sum / self.points.len() as f64
    }
}

/// Maps the normalized frame back to the original one: `x = centroid + scale * y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizeTransform {
    pub centroid: Point,
    pub scale: f64,
}

impl NormalizeTransform {
    pub fn apply(&self, p: &Point) -> Point {
        (p - self.centroid) / self.scale
    }

    pub fn invert(&self, p: &Point) -> Point {
        self.centroid + p * self.scale
    }

    pub fn invert_cloud(&self, pc: &PointCloud) -> PointCloud {
        PointCloud {
            points: pc.points.iter().map(|p| self.invert(p)).collect(),
        }
    }
}

/// Centers the cloud at its centroid and scales it so the farthest point
/// lies at radius 1.
pub fn normalize_unit_sphere(pc: &PointCloud) -> Result<(PointCloud, NormalizeTransform)> {
    let centroid = pc.centroid();
    let scale = pc
        .points
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0_f64, f64::max);
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateCloud);
    }
    let transform = NormalizeTransform { centroid, scale };
    let mut points: Vec<Point> = pc.points.iter().map(|p| transform.apply(p)).collect();
    // Division can leave the farthest points a few ulps off the unit sphere.
    let mut far = 0;
    for (i, p) in points.iter_mut().enumerate() {
        let n = p.norm();
        if n > 1.0 {
            *p /= n;
        }
        if n >= 1.0 - 1e-12 {
            far = i;
        }
    }
    let n = points[far].norm();
    if n != 1.0 {
        points[far] /= n;
    }
    Ok((PointCloud { points }, transform))
}

/// Brings the cloud to exactly `target` points.
///
/// Larger clouds are subsampled without replacement (original order kept);
/// smaller ones keep every original point and append uniformly chosen
/// duplicates. Duplicates are offset by `dup_jitter` times a uniform
/// unit-ball sample so that repulsion can separate them; pass 0 for exact
/// copies.
pub fn resample_to_count<R: Rng + ?Sized>(
    pc: &PointCloud,
    target: usize,
    dup_jitter: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    if target == 0 {
        return Err(Error::InvalidParameter(
            "target count must be positive".into(),
        ));
    }
    let n = pc.len();
    let points = match n.cmp(&target) {
        std::cmp::Ordering::Equal => pc.points.clone(),
        std::cmp::Ordering::Greater => {
            let mut picked = index::sample(rng, n, target).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| pc.points[i]).collect()
        }
        std::cmp::Ordering::Less => {
            let mut out = pc.points.clone();
            out.reserve(target - n);
            for _ in n..target {
                let src = pc.points[rng.random_range(0..n)];
                let offset: [f64; 3] = UnitBall.sample(rng);
                out.push(src + Point::from(offset) * dup_jitter);
            }
            out
        }
    };
    PointCloud::new(points)
}

/// Indexed triangle mesh with cached per-triangle areas.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::BadTriangle {
                    triangle: t,
                    index: bad,
                    vertex_count: vertices.len(),
                });
            }
        }
        let areas = triangles
            .iter()
            .map(|t| triangle_area(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]))
            .collect();
        Ok(Self {
            vertices,
            triangles,
            areas,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    /// Unnormalized face normal following the winding order.
    pub fn face_normal(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }
}

pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Draws `n` points uniformly over the mesh surface.
///
/// Triangles are picked with probability proportional to their area, then a
/// point is placed with the square-root barycentric construction.
pub fn sample_mesh_surface<R: Rng + ?Sized>(
    mesh: &TriangleMesh,
    n: usize,
    rng: &mut R,
) -> Result<PointCloud> {
    let (points, _) = sample_mesh_surface_with_faces(mesh, n, rng)?;
    PointCloud::new(points)
}

/// Same as [`sample_mesh_surface`] but also returns the picked triangle per point.
pub fn sample_mesh_surface_with_faces<R: Rng + ?Sized>(
    mesh: &TriangleMesh,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<Point>, Vec<usize>)> {
    let total = mesh.total_area();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::EmptyMesh);
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let mut cumulative = Vec::with_capacity(mesh.areas.len());
    let mut acc = 0.0;
    for a in &mesh.areas {
        acc += a;
        cumulative.push(acc);
    }
    let mut points = Vec::with_capacity(n);
    let mut faces = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.random::<f64>() * acc;
        let mut t = cumulative.partition_point(|&c| c <= r);
        if t >= cumulative.len() {
            t = cumulative.len() - 1;
        }
        // Skip zero-area triangles that share a cumulative value.
        while mesh.areas[t] == 0.0 && t + 1 < cumulative.len() {
            t += 1;
        }
        let [a, b, c] = mesh.corners(t);
        let s = rng.random::<f64>().sqrt();
        let u = rng.random::<f64>();
        let p = a * (1.0 - s) + b * (s * (1.0 - u)) + c * (s * u);
        points.push(p);
        faces.push(t);
    }
    Ok((points, faces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64, z: f64) -> Point {
        Point::new(x, y, z)
    }

    #[test]
    fn normalize_already_normalized() {
        let pc = PointCloud::new(vec![p(1., 0., 0.), p(-1., 0., 0.)]).unwrap();
        let (out, t) = normalize_unit_sphere(&pc).unwrap();
        assert_eq!(out.points(), pc.points());
        assert_eq!(t.centroid, Point::zeros());
        assert_eq!(t.scale, 1.0);
    }

    #[test]
    fn normalize_shifted_pair() {
        let pc = PointCloud::new(vec![p(2., 2., 2.), p(4., 2., 2.)]).unwrap();
        let (out, t) = normalize_unit_sphere(&pc).unwrap();
        assert_eq!(out.points(), &[p(-1., 0., 0.), p(1., 0., 0.)]);
        assert_eq!(t.centroid, p(3., 2., 2.));
        assert_eq!(t.scale, 1.0);
    }

    #[test]
    fn normalize_random_box_hits_unit_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = (0..1024)
            .map(|_| {
                p(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                )
            })
            .collect();
        let pc = PointCloud::new(pts).unwrap();
        let (out, t) = normalize_unit_sphere(&pc).unwrap();
        let max = out.points().iter().map(|q| q.norm()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() <= 4.0 * f64::EPSILON, "{max}");
        assert!(out.centroid().norm() < 1e-12);
        for (a, b) in pc.points().iter().zip(out.points()) {
            let back = t.invert(b);
            for k in 0..3 {
                assert!((back[k] - a[k]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn normalize_rejects_coincident() {
        let pc = PointCloud::new(vec![p(1., 1., 1.); 4]).unwrap();
        assert!(matches!(
            normalize_unit_sphere(&pc),
            Err(Error::DegenerateCloud)
        ));
    }

    #[test]
    fn cloud_rejects_nan_and_empty() {
        assert!(matches!(PointCloud::new(vec![]), Err(Error::EmptyCloud)));
        assert!(matches!(
            PointCloud::new(vec![p(0., 0., 0.), p(f64::NAN, 0., 0.)]),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn resample_equal_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pc = PointCloud::new((0..1024).map(|i| p(i as f64, 0., 0.)).collect()).unwrap();
        let out = resample_to_count(&pc, 1024, 1e-4, &mut rng).unwrap();
        assert_eq!(out, pc);
    }

    #[test]
    fn resample_duplicates_keep_originals() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pc = PointCloud::new(vec![p(0., 0., 0.), p(1., 0., 0.)]).unwrap();
        let out = resample_to_count(&pc, 5, 0.0, &mut rng).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.points().iter().all(|q| pc.points().contains(q)));
        assert!(pc.points().iter().all(|q| out.points().contains(q)));
    }

    #[test]
    fn resample_subset_is_deterministic() {
        let pc = PointCloud::new((0..2048).map(|i| p(i as f64, 1., 2.)).collect()).unwrap();
        let a = resample_to_count(&pc, 1024, 1e-4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = resample_to_count(&pc, 1024, 1e-4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1024);
        let mut xs: Vec<f64> = a.points().iter().map(|q| q.x).collect();
        xs.dedup();
        assert_eq!(xs.len(), 1024, "subsample must be without replacement");
    }

    #[test]
    fn mesh_rejects_out_of_range_index() {
        let err = TriangleMesh::new(vec![p(0., 0., 0.)], vec![[0, 0, 1]]).unwrap_err();
        assert!(matches!(err, Error::BadTriangle { index: 1, .. }));
    }

    #[test]
    fn sample_single_triangle_stays_inside() {
        let mesh = TriangleMesh::new(
            vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pc = sample_mesh_surface(&mesh, 1000, &mut rng).unwrap();
        for q in pc.points() {
            // barycentric w.r.t. the unit right triangle
            let (b1, b2) = (q.x, q.y);
            let b0 = 1.0 - b1 - b2;
            assert_eq!(q.z, 0.0);
            for b in [b0, b1, b2] {
                assert!((-1e-12..=1.0 + 1e-12).contains(&b));
            }
        }
    }

    #[test]
    fn sample_zero_area_mesh_fails() {
        let mesh = TriangleMesh::new(
            vec![p(0., 0., 0.), p(1., 0., 0.), p(2., 0., 0.)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(matches!(
            sample_mesh_surface(&mesh, 10, &mut rng),
            Err(Error::EmptyMesh)
        ));
    }
}
