use std::ffi::{CStr, CString};
use std::ptr;

use ifdefense_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ifd_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn fixture_remesh_sor_restore_round() {
    unsafe {
        let mut field = ptr::null_mut();
        assert_eq!(
            ifd_field_fixture(cstr("sphere").as_ptr(), &mut field),
            IfdStatus::Ok
        );

        let mut clean = ptr::null_mut();
        assert_eq!(
            ifd_remesh(field, 48, 0.2, 512, 1, &mut clean),
            IfdStatus::Ok
        );
        assert_eq!(ifd_cloud_len(clean), 512);

        let mut noisy = ptr::null_mut();
        let spec = cstr("outliers(0.1,0.3)");
        assert_eq!(
            ifd_corrupt(clean, field, spec.as_ptr(), 0.2, 2, &mut noisy),
            IfdStatus::Ok
        );

        let mut filtered = ptr::null_mut();
        assert_eq!(ifd_sor(noisy, 2, 1.1, &mut filtered), IfdStatus::Ok);
        assert!(ifd_cloud_len(filtered) < 512);

        let mut params = ifd_restore_params_default();
        assert_eq!(
            (params.tau, params.lambda, params.k_rep, params.iterations),
            (0.2, 500.0, 5, 200)
        );
        params.lambda = 0.0;
        params.iterations = 50;
        params.target_count = 512;
        let mut restored = ptr::null_mut();
        assert_eq!(
            ifd_restore(filtered, field, &params, 3, &mut restored),
            IfdStatus::Ok
        );

        let (mut before, mut after, mut hd) = (0.0, 0.0, 0.0);
        assert_eq!(ifd_chamfer(noisy, clean, &mut before), IfdStatus::Ok);
        assert_eq!(ifd_chamfer(restored, clean, &mut after), IfdStatus::Ok);
        assert_eq!(ifd_hausdorff(restored, clean, &mut hd), IfdStatus::Ok);
        assert!(after < before);
        assert!(hd > 0.0);

        for c in [clean, noisy, filtered, restored] {
            ifd_cloud_free(c);
        }
        ifd_field_free(field);
    }
}

#[test]
fn cloud_copy_and_files() {
    let xyz = [0.0, 0.0, 0.0, 1.0, 2.0, 3.0];
    let dir = tempfile::tempdir().unwrap();
    let path = cstr(dir.path().join("c.xyz").to_str().unwrap());
    unsafe {
        let mut cloud = ptr::null_mut();
        assert_eq!(ifd_cloud_new(xyz.as_ptr(), 2, &mut cloud), IfdStatus::Ok);
        let mut small = [0.0; 5];
        assert_eq!(
            ifd_cloud_copy(cloud, small.as_mut_ptr(), 5),
            IfdStatus::BufferTooSmall
        );
        let mut buf = [0.0; 6];
        assert_eq!(ifd_cloud_copy(cloud, buf.as_mut_ptr(), 6), IfdStatus::Ok);
        assert_eq!(buf, xyz);
        assert_eq!(ifd_cloud_write(cloud, path.as_ptr()), IfdStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ifd_cloud_read(path.as_ptr(), &mut back), IfdStatus::Ok);
        let mut cd = -1.0;
        assert_eq!(ifd_chamfer(cloud, back, &mut cd), IfdStatus::Ok);
        assert_eq!(cd, 0.0);
        ifd_cloud_free(cloud);
        ifd_cloud_free(back);
    }
}

#[test]
fn fields_from_json_and_weights() {
    let json =
        cstr(r#"{"sharpness": 50, "csg": {"op": "sphere", "center": [0,0,0], "radius": 0.5}}"#);
    let weights = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/tests/data/reference_mlp.bin"
    );
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(ifd_field_from_json(json.as_ptr(), &mut f), IfdStatus::Ok);
        let (mut p, mut g) = (0.0, [0.0; 3]);
        let x = [0.5, 0.0, 0.0];
        assert_eq!(
            ifd_field_occupancy(f, x.as_ptr(), &mut p, g.as_mut_ptr()),
            IfdStatus::Ok
        );
        assert_eq!(p, 0.5);
        assert!(g[0] < 0.0);
        ifd_field_free(f);

        let mut m = ptr::null_mut();
        assert_eq!(
            ifd_field_load_mlp(cstr(weights).as_ptr(), &mut m),
            IfdStatus::Ok
        );
        let origin = [0.0; 3];
        assert_eq!(
            ifd_field_occupancy(m, origin.as_ptr(), &mut p, ptr::null_mut()),
            IfdStatus::Ok
        );
        assert!((p - 0.461_064_201_427_743_7).abs() < 1e-6);
        ifd_field_free(m);
    }
}

#[test]
fn errors_map_to_codes_and_messages() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(
            ifd_field_fixture(cstr("cube").as_ptr(), &mut f),
            IfdStatus::InvalidArgument
        );
        assert!(f.is_null());
        assert!(last_error().contains("fixture"));

        let bad = cstr(r#"{"csg": {"op": "sphere", "center": [0,0,0], "radius": -1}}"#);
        assert_eq!(ifd_field_from_json(bad.as_ptr(), &mut f), IfdStatus::Parse);
        assert!(last_error().contains("$.csg"));

        let mut c = ptr::null_mut();
        assert_eq!(
            ifd_cloud_read(cstr("/nonexistent/x.xyz").as_ptr(), &mut c),
            IfdStatus::Io
        );
        assert_eq!(
            ifd_cloud_new(ptr::null(), 3, &mut c),
            IfdStatus::NullArgument
        );
        let xyz = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(
            ifd_cloud_new(xyz.as_ptr(), 0, &mut c),
            IfdStatus::EmptyInput
        );
        assert_eq!(ifd_cloud_new(xyz.as_ptr(), 2, &mut c), IfdStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(ifd_sor(c, 5, 1.1, &mut out), IfdStatus::TooFewPoints);
        assert_eq!(
            ifd_sor(ptr::null(), 5, 1.1, &mut out),
            IfdStatus::NullArgument
        );
        let mut d = 0.0;
        assert_eq!(ifd_chamfer(c, ptr::null(), &mut d), IfdStatus::NullArgument);
        assert_eq!(ifd_cloud_len(ptr::null()), 0);
        ifd_cloud_free(c);
        ifd_cloud_free(ptr::null_mut());
        ifd_field_free(ptr::null_mut());

        let mut big = ptr::null_mut();
        assert_eq!(
            ifd_field_fixture(cstr("sphere").as_ptr(), &mut big),
            IfdStatus::Ok
        );
        let json = cstr(r#"{"csg": {"op": "sphere", "center": [0,0,0], "radius": 5}}"#);
        let mut huge = ptr::null_mut();
        assert_eq!(ifd_field_from_json(json.as_ptr(), &mut huge), IfdStatus::Ok);
        assert_eq!(
            ifd_remesh(huge, 16, 0.2, 10, 0, &mut out),
            IfdStatus::EmptySurface
        );
        ifd_field_free(big);
        ifd_field_free(huge);
    }
    assert!(!unsafe { CStr::from_ptr(ifd_version()) }
        .to_bytes()
        .is_empty());
}
