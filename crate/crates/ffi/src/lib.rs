//! C interface. Handles are opaque pointers owned by the caller and released with the
//! matching `*_free`. Every function returns an [`IlStatus`]; on failure a message is
//! kept per thread and can be copied out with [`il_last_error_message`].
//!
//! Points are passed as `2n` doubles, interleaved `re, im` per coordinate.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use intrinsic_lab::caratheodory::{best_lower_bound, FamilyConfig};
use intrinsic_lab::domain::{theorem_a_window, theorem_b_window, DomainPoint, DomainSpec, ThresholdReport};
use intrinsic_lab::hyperbolic::{poincare_distance, DiskPoint};
use intrinsic_lab::kahler_einstein::{ke_distance_estimate, solve_ke, GridConfig, MetricGrid};
use intrinsic_lab::kobayashi::{chain_upper_bound, lempert_upper_bound, LempertOutcome, OptConfig, WaypointStrategy};
use intrinsic_lab::LabError;
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    DimensionMismatch = 3,
    OutsideDomain = 4,
    Precondition = 5,
    NonConvergence = 6,
    HessianLoss = 7,
    NoValidDisk = 8,
    BracketViolation = 9,
    Panic = 10,
}

/// Parameter window `x_lower < |x| < x_upper`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IlWindow {
    pub epsilon: f64,
    pub epsilon_bound: f64,
    pub x_lower: f64,
    pub x_upper: f64,
    pub window_nonempty: bool,
    pub parameters_valid: bool,
}

/// Opaque domain handle.
pub struct IlDomain {
    spec: DomainSpec,
}

/// Opaque solved metric grid.
pub struct IlMetricGrid {
    grid: MetricGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &LabError) -> IlStatus {
    match e {
        LabError::InvalidParameter(_) => IlStatus::InvalidParameter,
        LabError::DimensionMismatch { .. } => IlStatus::DimensionMismatch,
        LabError::OutsideDomain(_) => IlStatus::OutsideDomain,
        LabError::Precondition(_) => IlStatus::Precondition,
        LabError::NonConvergence { .. } => IlStatus::NonConvergence,
        LabError::HessianLoss { .. } => IlStatus::HessianLoss,
        LabError::NoValidDisk(_) => IlStatus::NoValidDisk,
        LabError::BracketViolation(_) => IlStatus::BracketViolation,
    }
}

/// Runs `f`, recording the error message and mapping panics to [`IlStatus::Panic`].
fn guard<F: FnOnce() -> Result<(), IlError>>(f: F) -> IlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IlStatus::Ok,
        Ok(Err(IlError::Lab(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(IlError::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            IlStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            IlStatus::Panic
        }
    }
}

enum IlError {
    Lab(LabError),
    Null(&'static str),
}

impl From<LabError> for IlError {
    fn from(e: LabError) -> Self {
        IlError::Lab(e)
    }
}

fn non_null<T>(p: *const T, what: &'static str) -> Result<(), IlError> {
    if p.is_null() {
        Err(IlError::Null(what))
    } else {
        Ok(())
    }
}

/// # Safety
/// `coords` must point to `2n` readable doubles.
unsafe fn read_point(coords: *const f64, n: usize, what: &'static str) -> Result<DomainPoint, IlError> {
    non_null(coords, what)?;
    let raw = std::slice::from_raw_parts(coords, 2 * n);
    Ok(DomainPoint::new(raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()))
}

/// # Safety
/// `p` must be null or a handle from `il_domain_new` that has not been freed.
unsafe fn domain_ref<'a>(p: *const IlDomain) -> Result<&'a DomainSpec, IlError> {
    non_null(p, "domain")?;
    Ok(&(*p).spec)
}

/// Creates the domain `{|z_i| < R, |z_1⋯z_n| < ε}` with inner radius `r`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn il_domain_new(n: usize, r: f64, big_r: f64, epsilon: f64, out: *mut *mut IlDomain) -> IlStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec = DomainSpec::new(n, r, big_r, epsilon)?;
        *out = Box::into_raw(Box::new(IlDomain { spec }));
        Ok(())
    })
}

/// Releases a domain handle. Null is ignored.
///
/// # Safety
/// `d` must be null or a live handle from `il_domain_new`.
#[no_mangle]
pub unsafe extern "C" fn il_domain_free(d: *mut IlDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Writes whether the point lies in the domain.
///
/// # Safety
/// `d` must be a live handle, `z` must hold `2n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_domain_contains(d: *const IlDomain, z: *const f64, n: usize, out: *mut bool) -> IlStatus {
    guard(|| {
        let spec = domain_ref(d)?;
        non_null(out, "out")?;
        let p = read_point(z, n, "z")?;
        *out = spec.contains(&p)?;
        Ok(())
    })
}

/// Poincaré distance `artanh |(a - b)/(1 - āb)|` in the unit disk.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_poincare_distance(a_re: f64, a_im: f64, b_re: f64, b_im: f64, out: *mut f64) -> IlStatus {
    guard(|| {
        non_null(out, "out")?;
        let a = DiskPoint::new(Complex64::new(a_re, a_im))?;
        let b = DiskPoint::new(Complex64::new(b_re, b_im))?;
        *out = poincare_distance(a, b).value;
        Ok(())
    })
}

fn window(rep: ThresholdReport) -> IlWindow {
    IlWindow {
        epsilon: rep.epsilon,
        epsilon_bound: rep.epsilon_bound,
        x_lower: rep.x_lower,
        x_upper: rep.x_upper,
        window_nonempty: rep.window_nonempty,
        parameters_valid: rep.parameters_valid,
    }
}

/// Theorem A window for `(n, r, ε)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_theorem_a_window(n: usize, r: f64, epsilon: f64, out: *mut IlWindow) -> IlStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = window(theorem_a_window(n, r, epsilon)?);
        Ok(())
    })
}

/// Theorem B window for `(n, r)`; `epsilon` is set to `rⁿ`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_theorem_b_window(n: usize, r: f64, out: *mut IlWindow) -> IlStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = window(theorem_b_window(n, r)?);
        Ok(())
    })
}

/// Certified lower bound for the Carathéodory distance with the default map families.
///
/// # Safety
/// `d` must be a live handle, `x` and `y` must hold `2n` doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_caratheodory_lower(
    d: *const IlDomain,
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> IlStatus {
    guard(|| {
        let spec = domain_ref(d)?;
        non_null(out, "out")?;
        let (x, y) = (read_point(x, n, "x")?, read_point(y, n, "y")?);
        *out = best_lower_bound(spec, &x, &y, &FamilyConfig::default())?.value();
        Ok(())
    })
}

/// Certified upper bound for the Lempert function; `IL_STATUS_NO_VALID_DISK` when no
/// disk could be certified.
///
/// # Safety
/// As for [`il_caratheodory_lower`].
#[no_mangle]
pub unsafe extern "C" fn il_lempert_upper(
    d: *const IlDomain,
    x: *const f64,
    y: *const f64,
    n: usize,
    seed: u64,
    out: *mut f64,
) -> IlStatus {
    guard(|| {
        let spec = domain_ref(d)?;
        non_null(out, "out")?;
        let (x, y) = (read_point(x, n, "x")?, read_point(y, n, "y")?);
        let cfg = OptConfig { seed, ..OptConfig::default() };
        match lempert_upper_bound(spec, &x, &y, &cfg)? {
            LempertOutcome::Certified(c) => {
                *out = c.value();
                Ok(())
            }
            LempertOutcome::NoValidDisk { best_violation } => Err(IlError::Lab(LabError::NoValidDisk(format!(
                "smallest constraint violation {best_violation:.3e}"
            )))),
        }
    })
}

/// Certified upper bound for `k^(m)` from chains of at most `m` disks.
///
/// # Safety
/// As for [`il_caratheodory_lower`].
#[no_mangle]
pub unsafe extern "C" fn il_chain_upper(
    d: *const IlDomain,
    m: usize,
    x: *const f64,
    y: *const f64,
    n: usize,
    seed: u64,
    out: *mut f64,
) -> IlStatus {
    guard(|| {
        let spec = domain_ref(d)?;
        non_null(out, "out")?;
        let (x, y) = (read_point(x, n, "x")?, read_point(y, n, "y")?);
        let cfg = OptConfig { seed, ..OptConfig::default() };
        *out = chain_upper_bound(spec, m, &x, &y, &WaypointStrategy::Axis, &cfg)?.value();
        Ok(())
    })
}

/// Solves for the Kähler-Einstein potential of a two-dimensional domain on a
/// `resolution × resolution` grid.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn il_ke_solve(d: *const IlDomain, resolution: usize, out: *mut *mut IlMetricGrid) -> IlStatus {
    guard(|| {
        let spec = domain_ref(d)?;
        non_null(out, "out")?;
        let cfg = GridConfig { resolution, ..GridConfig::default() };
        let grid = solve_ke(spec, &cfg)?;
        *out = Box::into_raw(Box::new(IlMetricGrid { grid }));
        Ok(())
    })
}

/// Releases a grid handle. Null is ignored.
///
/// # Safety
/// `g` must be null or a live handle from `il_ke_solve`.
#[no_mangle]
pub unsafe extern "C" fn il_ke_free(g: *mut IlMetricGrid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Writes the diagonal metric entries at the origin and their error estimate.
///
/// # Safety
/// `g` must be a live handle, `out` must hold two doubles and `margin` be writable.
#[no_mangle]
pub unsafe extern "C" fn il_ke_origin_metric(g: *const IlMetricGrid, out: *mut f64, margin: *mut f64) -> IlStatus {
    guard(|| {
        non_null(g, "grid")?;
        non_null(out, "out")?;
        non_null(margin, "margin")?;
        let grid = &(*g).grid;
        *out = grid.origin_metric[0];
        *out.add(1) = grid.origin_metric[1];
        *margin = grid.origin_margin;
        Ok(())
    })
}

/// Metric distance estimate between two points of the solved domain.
///
/// # Safety
/// `g` must be a live handle, `x` and `y` must hold four doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn il_ke_distance(g: *const IlMetricGrid, x: *const f64, y: *const f64, out: *mut f64) -> IlStatus {
    guard(|| {
        non_null(g, "grid")?;
        non_null(out, "out")?;
        let (x, y) = (read_point(x, 2, "x")?, read_point(y, 2, "y")?);
        *out = ke_distance_estimate(&(*g).grid, &x, &y)?.value();
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn il_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn il_status_string(status: IlStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        IlStatus::Ok => b"ok\0",
        IlStatus::NullPointer => b"null pointer\0",
        IlStatus::InvalidParameter => b"invalid parameter\0",
        IlStatus::DimensionMismatch => b"dimension mismatch\0",
        IlStatus::OutsideDomain => b"point outside the domain\0",
        IlStatus::Precondition => b"precondition failed\0",
        IlStatus::NonConvergence => b"solver did not converge\0",
        IlStatus::HessianLoss => b"Hessian lost positivity\0",
        IlStatus::NoValidDisk => b"no valid disk found\0",
        IlStatus::BracketViolation => b"certified bracket violated\0",
        IlStatus::Panic => b"internal panic\0",
    };
    s.as_ptr() as *const c_char
}
