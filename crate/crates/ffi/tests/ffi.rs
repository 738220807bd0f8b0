use std::ffi::CStr;
use std::ptr;

use intrinsic_lab_ffi::*;

fn polydisk() -> *mut IlDomain {
    let mut d = ptr::null_mut();
    let st = unsafe { il_domain_new(2, 0.5, 1.0, 1.0, &mut d) };
    assert_eq!(st, IlStatus::Ok);
    assert!(!d.is_null());
    d
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let len = unsafe { il_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(len > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn poincare_matches_closed_form() {
    let mut out = 0.0;
    let st = unsafe { il_poincare_distance(0.3, 0.0, -0.3, 0.0, &mut out) };
    assert_eq!(st, IlStatus::Ok);
    let oracle = (0.6f64 / 1.09).atanh();
    assert!((out - oracle).abs() < 1e-14);
}

#[test]
fn null_pointers_are_reported() {
    let st = unsafe { il_poincare_distance(0.0, 0.0, 0.1, 0.0, ptr::null_mut()) };
    assert_eq!(st, IlStatus::NullPointer);
    assert!(last_error().contains("null"));

    let mut inside = false;
    let z = [0.0; 4];
    let st = unsafe { il_domain_contains(ptr::null(), z.as_ptr(), 2, &mut inside) };
    assert_eq!(st, IlStatus::NullPointer);

    let st = unsafe { il_domain_new(2, 0.5, 1.0, 1.0, ptr::null_mut()) };
    assert_eq!(st, IlStatus::NullPointer);

    // freeing null is a no-op
    unsafe {
        il_domain_free(ptr::null_mut());
        il_ke_free(ptr::null_mut());
    }
}

#[test]
fn invalid_domain_is_rejected() {
    let mut d = ptr::null_mut();
    let st = unsafe { il_domain_new(2, 0.5, -1.0, 1.0, &mut d) };
    assert_eq!(st, IlStatus::InvalidParameter);
    assert!(d.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn containment_and_outside_points() {
    let d = polydisk();
    let mut inside = false;
    let a = [0.3, 0.1, -0.2, 0.0];
    assert_eq!(unsafe { il_domain_contains(d, a.as_ptr(), 2, &mut inside) }, IlStatus::Ok);
    assert!(inside);
    let b = [1.2, 0.0, 0.0, 0.0];
    assert_eq!(unsafe { il_domain_contains(d, b.as_ptr(), 2, &mut inside) }, IlStatus::Ok);
    assert!(!inside);

    let mut out = 0.0;
    let st = unsafe { il_caratheodory_lower(d, a.as_ptr(), b.as_ptr(), 2, &mut out) };
    assert_eq!(st, IlStatus::OutsideDomain);
    unsafe { il_domain_free(d) };
}

#[test]
fn polydisk_bounds_agree() {
    let d = polydisk();
    let x = [0.0; 4];
    let y = [0.3, 0.0, 0.3, 0.0];
    let oracle = 0.3f64.atanh();
    let (mut c, mut l, mut k2) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(il_caratheodory_lower(d, x.as_ptr(), y.as_ptr(), 2, &mut c), IlStatus::Ok);
        assert_eq!(il_lempert_upper(d, x.as_ptr(), y.as_ptr(), 2, 7, &mut l), IlStatus::Ok);
        assert_eq!(il_chain_upper(d, 2, x.as_ptr(), y.as_ptr(), 2, 7, &mut k2), IlStatus::Ok);
        il_domain_free(d);
    }
    assert!((c - oracle).abs() < 1e-6, "c = {c}");
    assert!((l - oracle).abs() < 1e-6, "l = {l}");
    assert!(c <= k2 && k2 <= l);
}

#[test]
fn theorem_windows() {
    let mut w = IlWindow::default();
    assert_eq!(unsafe { il_theorem_a_window(2, 0.8, 0.05, &mut w) }, IlStatus::Ok);
    assert!(w.parameters_valid);
    assert!(w.x_lower < w.x_upper);
    // Theorem B fixes eps = r^n
    assert_eq!(unsafe { il_theorem_b_window(3, 0.05, &mut w) }, IlStatus::Ok);
    assert!((w.epsilon - 0.05f64.powi(3)).abs() < 1e-18);
    assert_eq!(unsafe { il_theorem_a_window(2, 0.8, 0.05, ptr::null_mut()) }, IlStatus::NullPointer);
}

#[test]
fn ke_polydisk_origin_metric() {
    let d = polydisk();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { il_ke_solve(d, 32, &mut g) }, IlStatus::Ok);
    let mut m = [0.0; 2];
    let mut margin = 0.0;
    assert_eq!(unsafe { il_ke_origin_metric(g, m.as_mut_ptr(), &mut margin) }, IlStatus::Ok);
    // disk density 2/(1-|z|^2)^2 at the origin
    assert!((m[0] - 2.0).abs() < 1e-2 && (m[1] - 2.0).abs() < 1e-2, "{m:?}");
    let x = [0.0; 4];
    let y = [0.4, 0.0, 0.0, 0.0];
    let mut dist = 0.0;
    assert_eq!(unsafe { il_ke_distance(g, x.as_ptr(), y.as_ptr(), &mut dist) }, IlStatus::Ok);
    assert!(dist.is_finite() && dist > 0.0);
    unsafe {
        il_ke_free(g);
        il_domain_free(d);
    }
}

#[test]
fn status_strings_are_static() {
    let s = unsafe { CStr::from_ptr(il_status_string(IlStatus::NoValidDisk)) };
    assert_eq!(s.to_str().unwrap(), "no valid disk found");
    let s = unsafe { CStr::from_ptr(il_status_string(IlStatus::Ok)) };
    assert_eq!(s.to_str().unwrap(), "ok");
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/intrinsic_lab.h")).unwrap();
    for name in [
        "il_domain_new",
        "il_domain_free",
        "il_domain_contains",
        "il_poincare_distance",
        "il_theorem_a_window",
        "il_theorem_b_window",
        "il_caratheodory_lower",
        "il_lempert_upper",
        "il_chain_upper",
        "il_ke_solve",
        "il_ke_free",
        "il_ke_origin_metric",
        "il_ke_distance",
        "il_last_error_message",
        "il_status_string",
        "IL_STATUS_OK",
        "typedef struct IlDomain IlDomain",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
