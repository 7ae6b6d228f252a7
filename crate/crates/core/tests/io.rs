use ifdefense::geometry::{Point, PointCloud, TriangleMesh};
use ifdefense::io::{
    read_cloud, read_obj, read_ply, read_xyz, write_cloud, write_obj, write_ply, CloudFormat,
};
use ifdefense::Error;
use proptest::prelude::*;

fn cloud_strategy() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(
        (any::<f64>(), any::<f64>(), any::<f64>()).prop_filter("finite", |(x, y, z)| {
            x.is_finite() && y.is_finite() && z.is_finite()
        }),
        1..100,
    )
    .prop_map(|v| v.into_iter().map(|(x, y, z)| Point::new(x, y, z)).collect())
}

fn f32_cloud_strategy() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((-1e6f32..1e6, -1e6f32..1e6, -1e6f32..1e6), 1..100).prop_map(|v| {
        v.into_iter()
            .map(|(x, y, z)| Point::new(x as f64, y as f64, z as f64))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn xyz_round_trip_is_bit_exact(pts in cloud_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.xyz");
        let pc = PointCloud::new(pts).unwrap();
        write_cloud(&path, &pc, CloudFormat::Xyz).unwrap();
        prop_assert_eq!(read_xyz(&path).unwrap(), pc);
    }

    #[test]
    fn ply_round_trip_is_exact_in_single_precision(pts in f32_cloud_strategy(), binary in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let pc = PointCloud::new(pts).unwrap();
        write_ply(&path, &pc, binary).unwrap();
        prop_assert_eq!(read_ply(&path).unwrap(), pc.clone());
        prop_assert_eq!(read_cloud(&path).unwrap(), pc);
    }
}

#[test]
fn ply_with_foreign_elements_and_properties() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ply");
    let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\nproperty float x\nproperty uchar red\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n1 255 2 3\n-0.5 0 0.25 8\n3 0 1 1\n";
    std::fs::write(&path, text).unwrap();
    let pc = read_ply(&path).unwrap();
    assert_eq!(
        pc.points(),
        &[Point::new(1.0, 2.0, 3.0), Point::new(-0.5, 0.25, 8.0)]
    );
}

#[test]
fn xyz_lines_are_plain() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.xyz");
    let pc = PointCloud::new(vec![Point::new(1.0, -0.5, 0.1)]).unwrap();
    write_cloud(&path, &pc, CloudFormat::Xyz).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "1 -0.5 0.1\n");
    std::fs::write(&path, "1 2 3\n4 five 6\n").unwrap();
    assert!(matches!(read_xyz(&path), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn obj_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.obj");
    let mesh = TriangleMesh::new(
        vec![
            Point::zeros(),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ],
        vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
    )
    .unwrap();
    write_obj(&path, &mesh).unwrap();
    let back = read_obj(&path).unwrap();
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.triangles(), mesh.triangles());
}
