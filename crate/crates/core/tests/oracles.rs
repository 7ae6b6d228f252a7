mod common;

use ifdefense::geometry::{Point, PointCloud};
use ifdefense::metrics::{chamfer, hausdorff, uniformity_cv};
use ifdefense::outlier::{sor_filter, SorConfig};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn kept(pc: &PointCloud, cfg: &SorConfig) -> Vec<usize> {
    let out = sor_filter(pc, cfg).unwrap();
    let kept: Vec<usize> = (0..pc.len()).filter(|i| !out.removed.contains(i)).collect();
    let retained: Vec<Point> = kept.iter().map(|&i| pc.points()[i]).collect();
    assert_eq!(out.cloud.points(), &retained[..]);
    kept
}

#[test]
fn sor_matches_brute_force_on_1000_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for t in 0..1000 {
        let n = rng.random_range(4..160);
        let mut pts = if t % 5 == 0 {
            lattice_points(&mut rng, n, 4)
        } else {
            random_points(&mut rng, n, 1.0)
        };
        for _ in 0..rng.random_range(0..4) {
            pts.push(random_points(&mut rng, 1, 4.0)[0]);
        }
        let k = rng.random_range(1..6).min(pts.len() - 1);
        let alpha = rng.random_range(0.0..2.5);
        let pc = cloud(pts.clone());
        assert_eq!(
            kept(&pc, &SorConfig { k, alpha }),
            brute_sor(&pts, k, alpha),
            "cloud {t}"
        );
    }
}

#[test]
fn sor_examples() {
    let cube: Vec<Point> = (0..8)
        .map(|i| Point::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    assert!(sor_filter(&cloud(cube), &SorConfig::default())
        .unwrap()
        .removed
        .is_empty());

    let mut line: Vec<Point> = (0..20).map(|i| Point::new(i as f64, 0.0, 0.0)).collect();
    line.push(Point::new(119.0, 0.0, 0.0));
    let out = sor_filter(&cloud(line), &SorConfig::default()).unwrap();
    assert_eq!(out.removed, vec![20]);
}

#[test]
fn metrics_match_brute_force_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let (na, nb) = (rng.random_range(1..512), rng.random_range(1..512));
        let a = random_points(&mut rng, na, 1.0);
        let b = random_points(&mut rng, nb, 1.0);
        let (pa, pb) = (cloud(a.clone()), cloud(b.clone()));
        assert!((chamfer(&pa, &pb).unwrap() - brute_chamfer(&a, &b)).abs() <= 1e-12);
        assert!((hausdorff(&pa, &pb).unwrap() - brute_hausdorff(&a, &b)).abs() <= 1e-12);
    }
}

#[test]
fn metric_examples() {
    let o = cloud(vec![Point::zeros()]);
    let x = cloud(vec![Point::new(1.0, 0.0, 0.0)]);
    assert_eq!(chamfer(&o, &x).unwrap(), 2.0);
    assert_eq!(chamfer(&x, &x).unwrap(), 0.0);
    let ox = cloud(vec![Point::new(1.0, 0.0, 0.0), Point::zeros()]);
    assert_eq!(hausdorff(&o, &ox).unwrap(), 1.0);
    assert_eq!(hausdorff(&ox, &ox).unwrap(), 0.0);

    let s = 1.0 / 3.0_f64.sqrt();
    let mut tet = vec![
        Point::new(s, s, s),
        Point::new(s, -s, -s),
        Point::new(-s, s, -s),
        Point::new(-s, -s, s),
    ];
    assert!(uniformity_cv(&cloud(tet.clone()), 3).unwrap() < 1e-15);
    tet.push(tet[0]);
    assert!(uniformity_cv(&cloud(tet), 3).unwrap() > 0.0);
}

#[test]
fn subset_hausdorff_is_the_far_side() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let b = random_points(&mut rng, 100, 1.0);
    let a = b[..30].to_vec();
    let far = b
        .iter()
        .map(|p| {
            a.iter()
                .map(|q| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    assert_eq!(hausdorff(&cloud(a), &cloud(b)).unwrap(), far);
}

fn points(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), n)
        .prop_map(|v| v.into_iter().map(|(x, y, z)| Point::new(x, y, z)).collect())
}

proptest! {
    #[test]
    fn metrics_symmetric_nonnegative_and_rigid(
        a in points(1..80),
        b in points(1..80),
        axis in (-1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64),
        angle in -3.0..3.0f64,
        shift in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64),
    ) {
        let (pa, pb) = (cloud(a.clone()), cloud(b.clone()));
        let cd = chamfer(&pa, &pb).unwrap();
        let hd = hausdorff(&pa, &pb).unwrap();
        prop_assert_eq!(cd, chamfer(&pb, &pa).unwrap());
        prop_assert_eq!(hd, hausdorff(&pb, &pa).unwrap());
        prop_assert!(cd >= 0.0 && hd >= 0.0);
        let rot = Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(Vector3::new(axis.0, axis.1, axis.2)),
            angle,
        );
        let t = Vector3::new(shift.0, shift.1, shift.2);
        let moved = |v: &[Point]| cloud(v.iter().map(|p| rot * p + t).collect());
        prop_assert!((chamfer(&moved(&a), &moved(&b)).unwrap() - cd).abs() <= 1e-9);
        prop_assert!((hausdorff(&moved(&a), &moved(&b)).unwrap() - hd).abs() <= 1e-9);
    }

    #[test]
    fn metrics_vanish_on_permuted_copies(a in points(1..80), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut b = a.clone();
        b.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(chamfer(&cloud(a.clone()), &cloud(b.clone())).unwrap(), 0.0);
        prop_assert_eq!(hausdorff(&cloud(a), &cloud(b)).unwrap(), 0.0);
    }

    #[test]
    fn sor_is_rotation_and_scale_invariant(
        a in points(6..120),
        angle in -3.0..3.0f64,
        scale in 0.1..10.0f64,
    ) {
        let cfg = SorConfig::default();
        let base = kept(&cloud(a.clone()), &cfg);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
        let moved = cloud(a.iter().map(|p| rot * p * scale).collect());
        let got = kept(&moved, &cfg);
        // Rounding can only flip points sitting on the threshold itself.
        let sym: Vec<_> = base.iter().filter(|i| !got.contains(i)).chain(got.iter().filter(|i| !base.contains(i))).collect();
        prop_assert!(sym.len() <= 1, "{:?}", sym);
    }
}
