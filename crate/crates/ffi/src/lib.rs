//! C interface. Objects are opaque heap handles released with the matching
//! `*_free`; every fallible call returns an [`IfdStatus`] and leaves the
//! detail for [`ifd_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ifdefense::corruption::CorruptionSpec;
use ifdefense::field::{AnalyticField, Fixture, MlpField, OccupancyField};
use ifdefense::geometry::{Point, PointCloud};
use ifdefense::metrics::{chamfer, hausdorff};
use ifdefense::outlier::sor_filter;
use ifdefense::remesh::remesh_defense;
use ifdefense::restoration::restore;
use ifdefense::{Error, GridSpec, RestorationConfig, SorConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IfdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    EmptyInput = 5,
    TooFewPoints = 6,
    EmptySurface = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque point cloud.
pub struct IfdCloud(PointCloud);

/// Opaque occupancy field.
pub struct IfdField(Box<dyn OccupancyField>);

/// Restoration settings; start from [`ifd_restore_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IfdRestoreParams {
    pub tau: f64,
    pub lambda: f64,
    pub h: f64,
    pub k_rep: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub target_count: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> IfdStatus {
    match e {
        Error::Io(_) => IfdStatus::Io,
        Error::Parse { .. }
        | Error::Json(_)
        | Error::BadMagic { .. }
        | Error::TruncatedFile { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidSpec { .. } => IfdStatus::Parse,
        Error::EmptyCloud | Error::EmptyMesh | Error::CloudAnnihilated => IfdStatus::EmptyInput,
        Error::TooFewPoints { .. } => IfdStatus::TooFewPoints,
        Error::EmptySurface { .. } => IfdStatus::EmptySurface,
        _ => IfdStatus::InvalidArgument,
    }
}

struct Fail(IfdStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_error(e.to_string());
        Fail(status_of(&e))
    }
}

fn fail(status: IfdStatus, msg: &str) -> Fail {
    set_error(msg);
    Fail(status)
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> IfdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => IfdStatus::Ok,
        Ok(Err(Fail(s))) => s,
        Err(_) => {
            set_error("internal panic");
            IfdStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| fail(IfdStatus::NullArgument, "null handle"))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(IfdStatus::NullArgument, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(IfdStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(fail(IfdStatus::NullArgument, "null output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ifd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a cloud from `count` xyz triples.
///
/// # Safety
/// `xyz` must point to `3 * count` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_cloud_new(
    xyz: *const f64,
    count: usize,
    out: *mut *mut IfdCloud,
) -> IfdStatus {
    guard(|| {
        if xyz.is_null() {
            return Err(fail(IfdStatus::NullArgument, "null coordinates"));
        }
        let flat = std::slice::from_raw_parts(xyz, count * 3);
        let pts = flat
            .chunks_exact(3)
            .map(|c| Point::new(c[0], c[1], c[2]))
            .collect();
        emit(out, IfdCloud(PointCloud::new(pts)?))
    })
}

/// Reads an XYZ or PLY file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_cloud_read(path: *const c_char, out: *mut *mut IfdCloud) -> IfdStatus {
    guard(|| emit(out, IfdCloud(ifdefense::io::read_cloud(text(path)?)?)))
}

/// Writes a cloud; the format follows the extension (`.xyz` or `.ply`).
///
/// # Safety
/// `cloud` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ifd_cloud_write(cloud: *const IfdCloud, path: *const c_char) -> IfdStatus {
    guard(|| {
        let cloud = borrow(cloud)?;
        let path = text(path)?;
        let format = if path.ends_with(".ply") { "ply" } else { "xyz" };
        ifdefense::io::write_cloud(path, &cloud.0, format.parse()?)?;
        Ok(())
    })
}

/// Number of points; 0 for a null handle.
///
/// # Safety
/// `cloud` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ifd_cloud_len(cloud: *const IfdCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// Copies coordinates as xyz triples into `dst`, which holds `capacity`
/// doubles.
///
/// # Safety
/// `dst` must be writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ifd_cloud_copy(
    cloud: *const IfdCloud,
    dst: *mut f64,
    capacity: usize,
) -> IfdStatus {
    guard(|| {
        let cloud = borrow(cloud)?;
        if dst.is_null() {
            return Err(fail(IfdStatus::NullArgument, "null destination"));
        }
        if capacity < cloud.0.len() * 3 {
            return Err(fail(IfdStatus::BufferTooSmall, "destination too small"));
        }
        let dst = std::slice::from_raw_parts_mut(dst, capacity);
        for (slot, p) in dst.chunks_exact_mut(3).zip(cloud.0.points()) {
            slot.copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `cloud` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ifd_cloud_free(cloud: *mut IfdCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Built-in field: `sphere`, `torus`, `two-spheres` or `box-minus-sphere`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_field_fixture(
    name: *const c_char,
    out: *mut *mut IfdField,
) -> IfdStatus {
    guard(|| {
        let name = text(name)?;
        let f = Fixture::parse(name)
            .ok_or_else(|| fail(IfdStatus::InvalidArgument, "unknown fixture"))?;
        emit(out, IfdField(Box::new(f.field())))
    })
}

/// Analytic CSG field from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_field_from_json(
    json: *const c_char,
    out: *mut *mut IfdField,
) -> IfdStatus {
    guard(|| {
        emit(
            out,
            IfdField(Box::new(AnalyticField::from_json_str(text(json)?)?)),
        )
    })
}

/// MLP field from a binary weight file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_field_load_mlp(
    path: *const c_char,
    out: *mut *mut IfdField,
) -> IfdStatus {
    guard(|| emit(out, IfdField(Box::new(MlpField::load(text(path)?)?))))
}

/// Occupancy at `xyz`; the gradient is written to `grad` when it is not null.
///
/// # Safety
/// `xyz` must hold 3 doubles, `occupancy` be writable, `grad` null or
/// writable for 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn ifd_field_occupancy(
    field: *const IfdField,
    xyz: *const f64,
    occupancy: *mut f64,
    grad: *mut f64,
) -> IfdStatus {
    guard(|| {
        let field = borrow(field)?;
        if xyz.is_null() || occupancy.is_null() {
            return Err(fail(IfdStatus::NullArgument, "null coordinate or output"));
        }
        let x = std::slice::from_raw_parts(xyz, 3);
        let (p, g) = field
            .0
            .occupancy_and_gradient(&Point::new(x[0], x[1], x[2]));
        *occupancy = p;
        if !grad.is_null() {
            std::slice::from_raw_parts_mut(grad, 3).copy_from_slice(g.as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ifd_field_free(field: *mut IfdField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Statistical outlier removal with `k` neighbors and threshold multiplier
/// `alpha`.
///
/// # Safety
/// `cloud` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_sor(
    cloud: *const IfdCloud,
    k: usize,
    alpha: f64,
    out: *mut *mut IfdCloud,
) -> IfdStatus {
    guard(|| {
        let cloud = borrow(cloud)?;
        emit(
            out,
            IfdCloud(sor_filter(&cloud.0, &SorConfig { k, alpha })?.cloud),
        )
    })
}

#[no_mangle]
pub extern "C" fn ifd_restore_params_default() -> IfdRestoreParams {
    let c = RestorationConfig::default();
    IfdRestoreParams {
        tau: c.tau,
        lambda: c.lambda,
        h: c.h,
        k_rep: c.k_rep,
        learning_rate: c.learning_rate,
        iterations: c.iterations,
        target_count: c.target_count,
    }
}

fn config(p: &IfdRestoreParams) -> RestorationConfig {
    RestorationConfig {
        tau: p.tau,
        lambda: p.lambda,
        h: p.h,
        k_rep: p.k_rep,
        learning_rate: p.learning_rate,
        iterations: p.iterations,
        target_count: p.target_count,
        ..RestorationConfig::default()
    }
}

/// Optimizes point coordinates against the field. A null `params` uses the
/// defaults.
///
/// # Safety
/// Handles must be live; `params` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_restore(
    cloud: *const IfdCloud,
    field: *const IfdField,
    params: *const IfdRestoreParams,
    seed: u64,
    out: *mut *mut IfdCloud,
) -> IfdStatus {
    guard(|| {
        let cloud = borrow(cloud)?;
        let field = borrow(field)?;
        let params = params
            .as_ref()
            .copied()
            .unwrap_or_else(|| ifd_restore_params_default());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = restore(&cloud.0, &field.0, &config(&params), &mut rng)?;
        emit(out, IfdCloud(trace.cloud))
    })
}

/// Marching Cubes at level `tau` on a `resolution`-cell grid over
/// [-1.1, 1.1]^3, then `count` area-weighted surface samples.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_remesh(
    field: *const IfdField,
    resolution: usize,
    tau: f64,
    count: usize,
    seed: u64,
    out: *mut *mut IfdCloud,
) -> IfdStatus {
    guard(|| {
        let field = borrow(field)?;
        let cfg = RestorationConfig {
            tau,
            target_count: count,
            ..RestorationConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::with_resolution(resolution);
        emit(
            out,
            IfdCloud(remesh_defense(&field.0, &grid, &cfg, &mut rng)?),
        )
    })
}

/// Applies a corruption chain such as `outliers(0.1,0.3)+jitter(0.02)`.
///
/// # Safety
/// Handles must be live, `spec` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_corrupt(
    cloud: *const IfdCloud,
    field: *const IfdField,
    spec: *const c_char,
    tau: f64,
    seed: u64,
    out: *mut *mut IfdCloud,
) -> IfdStatus {
    guard(|| {
        let cloud = borrow(cloud)?;
        let field = borrow(field)?;
        let spec: CorruptionSpec = text(spec)?.parse()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        emit(
            out,
            IfdCloud(spec.apply(&cloud.0, &field.0, tau, &mut rng)?),
        )
    })
}

/// Mean squared nearest-neighbor distance, summed over both directions.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_chamfer(
    a: *const IfdCloud,
    b: *const IfdCloud,
    out: *mut f64,
) -> IfdStatus {
    guard(|| metric(a, b, out, chamfer))
}

/// Symmetric Hausdorff distance.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ifd_hausdorff(
    a: *const IfdCloud,
    b: *const IfdCloud,
    out: *mut f64,
) -> IfdStatus {
    guard(|| metric(a, b, out, hausdorff))
}

unsafe fn metric(
    a: *const IfdCloud,
    b: *const IfdCloud,
    out: *mut f64,
    f: fn(&PointCloud, &PointCloud) -> ifdefense::Result<f64>,
) -> Result<(), Fail> {
    let (a, b) = (borrow(a)?, borrow(b)?);
    if out.is_null() {
        return Err(fail(IfdStatus::NullArgument, "null output pointer"));
    }
    *out = f(&a.0, &b.0)?;
    Ok(())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ifd_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    VERSION.as_ptr()
}
