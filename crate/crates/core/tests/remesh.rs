use ifdefense::field::{AnalyticField, Csg, Fixture, OccupancyField};
use ifdefense::remesh::{is_watertight, marching_cubes, remesh_defense, GridSpec};
use ifdefense::restoration::RestorationConfig;
use ifdefense::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ISO: f64 = 0.2;

#[test]
fn fixtures_mesh_watertight() {
    for fixture in Fixture::ALL {
        let mesh = marching_cubes(&fixture.field(), &GridSpec::default(), ISO).unwrap();
        assert!(is_watertight(&mesh), "{}", fixture.name());
    }
}

#[test]
fn vertex_occupancy_residual_is_small() {
    let field = Fixture::Sphere.field();
    let mesh = marching_cubes(&field, &GridSpec::default(), ISO).unwrap();
    let worst = mesh
        .vertices()
        .iter()
        .map(|v| (field.occupancy(v) - ISO).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.05, "{worst}");
}

#[test]
fn normals_point_toward_lower_occupancy() {
    // Creased shapes put some face centroids beside the other sheet's
    // gradient, so the per-face check uses the smooth fixtures.
    for fixture in [Fixture::Sphere, Fixture::Torus, Fixture::TwoSpheres] {
        let field = fixture.field();
        let mesh = marching_cubes(&field, &GridSpec::with_resolution(48), ISO).unwrap();
        let mut agree = 0;
        for t in 0..mesh.triangles().len() {
            let [a, b, c] = mesh.corners(t);
            let centroid = (a + b + c) / 3.0;
            if mesh.face_normal(t).dot(&field.gradient(&centroid)) < 0.0 {
                agree += 1;
            }
        }
        assert!(
            agree as f64 >= 0.999 * mesh.triangles().len() as f64,
            "{} {agree}/{}",
            fixture.name(),
            mesh.triangles().len()
        );
    }
}

#[test]
fn enclosed_volume_is_positive() {
    for fixture in Fixture::ALL {
        let mesh = marching_cubes(&fixture.field(), &GridSpec::default(), ISO).unwrap();
        let volume: f64 = (0..mesh.triangles().len())
            .map(|t| {
                let [a, b, c] = mesh.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum();
        assert!(volume > 0.0, "{}", fixture.name());
    }
    let mesh = marching_cubes(&Fixture::Sphere.field(), &GridSpec::default(), ISO).unwrap();
    let volume: f64 = (0..mesh.triangles().len())
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            a.dot(&b.cross(&c)) / 6.0
        })
        .sum();
    let r = 0.5 + 4.0_f64.ln() / 50.0;
    let exact = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    assert!((volume - exact).abs() / exact < 0.01, "{volume} vs {exact}");
}

#[test]
fn torus_vertices_track_analytic_surface() {
    let field = Fixture::Torus.field();
    let grid = GridSpec::default();
    let mesh = marching_cubes(&field, &grid, ISO).unwrap();
    let offset = field.iso_offset(ISO);
    for v in mesh.vertices() {
        let dev = (field.signed_distance(v) - offset).abs();
        assert!(dev <= 2.0 * grid.max_cell_size(), "{dev}");
    }
}

#[test]
fn constant_field_has_no_surface() {
    let huge = AnalyticField::new(Csg::sphere([0.0; 3], 5.0), 50.0).unwrap();
    assert!(matches!(
        marching_cubes(&huge, &GridSpec::default(), ISO),
        Err(Error::EmptySurface { .. })
    ));
}

#[test]
fn remesh_defense_examples() {
    let cfg = RestorationConfig::default();
    let grid = GridSpec::default();
    let two_cells = 2.0 * grid.max_cell_size();
    for fixture in [Fixture::Sphere, Fixture::Torus] {
        let field = fixture.field();
        let offset = field.iso_offset(ISO);
        let a = remesh_defense(&field, &grid, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = remesh_defense(&field, &grid, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1024);
        for p in a.points() {
            assert!((field.signed_distance(p) - offset).abs() <= two_cells);
        }
    }
}
