//! Mesh-based restoration: extract the occupancy iso-surface with Marching
//! Cubes and resample points on it.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{project_to_level, OccupancyField};
use crate::geometry::{sample_mesh_surface, Point, PointCloud, TriangleMesh};
use crate::mc_tables::{CORNERS, EDGES, TRIANGLES};
use crate::restoration::RestorationConfig;

/// Regular sampling grid: `resolution` cells per axis over `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub resolution: usize,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 64,
            min: [-1.1; 3],
            max: [1.1; 3],
        }
    }
}

impl GridSpec {
    pub fn with_resolution(resolution: usize) -> Self {
        Self {
            resolution,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid resolution {} is below 8",
                self.resolution
            )));
        }
        if !(0..3).all(|a| {
            self.min[a].is_finite() && self.max[a].is_finite() && self.max[a] > self.min[a]
        }) {
            return Err(Error::InvalidParameter("grid bounds are degenerate".into()));
        }
        Ok(())
    }

    pub fn cell_size(&self) -> Point {
        Point::from_fn(|a, _| (self.max[a] - self.min[a]) / self.resolution as f64)
    }

    /// Largest cell edge length.
    pub fn max_cell_size(&self) -> f64 {
        self.cell_size().max()
    }

    fn position(&self, i: usize, j: usize, k: usize) -> Point {
        let c = self.cell_size();
        Point::new(
            self.min[0] + i as f64 * c.x,
            self.min[1] + j as f64 * c.y,
            self.min[2] + k as f64 * c.z,
        )
    }
}

/// Marching Cubes over `grid` at occupancy level `iso`.
///
/// Vertices are shared between neighboring cells, so closed surfaces come
/// out watertight. Triangles wind so that face normals point toward lower
/// occupancy.
pub fn marching_cubes<F: OccupancyField + ?Sized>(
    field: &F,
    grid: &GridSpec,
    iso: f64,
) -> Result<TriangleMesh> {
    grid.validate()?;
    if !(iso > 0.0 && iso < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "iso level {iso} outside (0, 1)"
        )));
    }
    let n = grid.resolution + 1;
    let idx = |i: usize, j: usize, k: usize| (k * n + j) * n + i;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|k| (0..n).flat_map(move |j| (0..n).map(move |i| (i, j, k))))
        .map(|(i, j, k)| field.occupancy(&grid.position(i, j, k)))
        .collect();

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    let res = grid.resolution;
    for k in 0..res {
        for j in 0..res {
            for i in 0..res {
                let mut corner_ids = [0usize; 8];
                let mut case = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    let id = idx(i + off[0], j + off[1], k + off[2]);
                    corner_ids[c] = id;
                    if values[id] < iso {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let mut edge_ids = [usize::MAX; 12];
                let row = &TRIANGLES[case];
                for &e in row.iter().take_while(|&&e| e >= 0) {
                    let e = e as usize;
                    if edge_ids[e] != usize::MAX {
                        continue;
                    }
                    let (a, b) = (corner_ids[EDGES[e].0], corner_ids[EDGES[e].1]);
                    let key = (a.min(b), a.max(b));
                    let v = *edge_vertex.entry(key).or_insert_with(|| {
                        let pa = grid_point(grid, n, key.0);
                        let pb = grid_point(grid, n, key.1);
                        let (va, vb) = (values[key.0], values[key.1]);
                        let t = if vb != va {
                            (iso - va) / (vb - va)
                        } else {
                            0.5
                        };
                        vertices.push(pa + (pb - pa) * t);
                        vertices.len() - 1
                    });
                    edge_ids[e] = v;
                }
                for tri in row.chunks_exact(3).take_while(|t| t[0] >= 0) {
                    // Table winding puts normals on the below-iso side,
                    // which for occupancy is the outside.
                    triangles.push([
                        edge_ids[tri[0] as usize],
                        edge_ids[tri[1] as usize],
                        edge_ids[tri[2] as usize],
                    ]);
                }
            }
        }
    }
    if triangles.is_empty() {
        return Err(Error::EmptySurface { iso });
    }
    TriangleMesh::new(vertices, triangles)
}

fn grid_point(grid: &GridSpec, n: usize, id: usize) -> Point {
    let i = id % n;
    let j = (id / n) % n;
    let k = id / (n * n);
    grid.position(i, j, k)
}

/// Re-meshing restoration: iso-surface at `cfg.tau`, then
/// `cfg.target_count` area-weighted surface samples.
pub fn remesh_defense<F: OccupancyField + ?Sized, R: Rng + ?Sized>(
    field: &F,
    grid: &GridSpec,
    cfg: &RestorationConfig,
    rng: &mut R,
) -> Result<PointCloud> {
    cfg.validate()?;
    let mesh = marching_cubes(field, grid, cfg.tau)?;
    sample_mesh_surface(&mesh, cfg.target_count, rng)
}

/// Uniform samples on the `level` iso-surface: Marching Cubes, area-weighted
/// sampling, then each sample is snapped onto the exact level set along
/// the occupancy gradient.
pub fn sample_iso_surface<F: OccupancyField + ?Sized, R: Rng + ?Sized>(
    field: &F,
    level: f64,
    n: usize,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<PointCloud> {
    let mesh = marching_cubes(field, grid, level)?;
    let raw = sample_mesh_surface(&mesh, n, rng)?;
    let step = grid.max_cell_size();
    let points = raw
        .points()
        .iter()
        .map(|p| project_to_level(field, p, level, step).unwrap_or(*p))
        .collect();
    PointCloud::new(points)
}

/// Edge-use counts keyed by undirected vertex pair.
pub fn edge_use_counts(mesh: &TriangleMesh) -> HashMap<(usize, usize), usize> {
    let mut counts = HashMap::new();
    for t in mesh.triangles() {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    counts
}

/// True when every edge belongs to exactly two triangles.
pub fn is_watertight(mesh: &TriangleMesh) -> bool {
    edge_use_counts(mesh).values().all(|&c| c == 2)
}
