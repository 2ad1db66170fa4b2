use std::ffi::{CStr, CString};
use std::ptr;

use chford_ffi::*;

fn last_error() -> String {
    let p = chf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn base_point_generators_and_sphere_of_c() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(chf_moduli_base_point(&mut p), CHF_OK);
        let (mut h, mut t, mut slice, mut det) = (0.0, 0.0, 0, 0.0);
        assert_eq!(chf_moduli_info(p, &mut h, &mut t, &mut slice, &mut det), CHF_OK);
        assert!((h - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(slice, 1);
        // det of the Gram matrix vanishes on the slice curve
        assert!(det.abs() < 1e-12);

        let mut g = ptr::null_mut();
        assert_eq!(chf_generators_new(p, 2, &mut g), CHF_OK);
        let word = CString::new("C").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(chf_generators_eval(g, word.as_ptr(), &mut m), CHF_OK);
        let mut dim = 0usize;
        assert_eq!(chf_matrix_dim(m, &mut dim), CHF_OK);
        assert_eq!(dim, 3);

        let mut center = [0.0; 3];
        let mut radius = 0.0;
        assert_eq!(chf_matrix_isometric_sphere(m, center.as_mut_ptr(), 3, &mut radius), CHF_OK);
        assert!((radius - 2.0).abs() < 1e-12);
        assert!((center[0] + 1.0).abs() < 1e-12 && center[1].abs() < 1e-12);
        assert!((center[2] + 15f64.sqrt() / 2.0).abs() < 1e-12);

        let mut kind = -1;
        let mut disc = 0.0;
        assert_eq!(chf_matrix_classify(m, &mut kind, &mut disc), CHF_OK);
        assert_eq!(kind, CHF_KIND_REGULAR_ELLIPTIC);
        assert!(disc < 0.0);

        chf_matrix_free(m);
        chf_generators_free(g);
        chf_moduli_free(p);
    }
}

#[test]
fn matrix_entries_are_row_major_pairs() {
    unsafe {
        let mut p = ptr::null_mut();
        chf_moduli_base_point(&mut p);
        let mut g = ptr::null_mut();
        assert_eq!(chf_generators_new(p, 3, &mut g), CHF_OK);
        let word = CString::new("A").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(chf_generators_eval(g, word.as_ptr(), &mut m), CHF_OK);
        let mut buf = [0.0; 32];
        assert_eq!(chf_matrix_entries(m, buf.as_mut_ptr(), 32), CHF_OK);
        // A is unipotent with unit diagonal
        for i in 0..4 {
            assert!((buf[2 * (i * 4 + i)] - 1.0).abs() < 1e-12);
            assert!(buf[2 * (i * 4 + i) + 1].abs() < 1e-12);
        }
        let mut kind = -1;
        let mut disc = 0.0;
        assert_eq!(chf_matrix_classify(m, &mut kind, &mut disc), CHF_OK);
        assert_eq!(kind, CHF_KIND_PARABOLIC_UNIPOTENT);
        assert_eq!(chf_matrix_entries(m, buf.as_mut_ptr(), 31), CHF_ERR_BUFFER);
        assert!(last_error().contains("need 32"));
        chf_matrix_free(m);
        chf_generators_free(g);
        chf_moduli_free(p);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(chf_moduli_new(0.2, 1.0, &mut p), CHF_ERR_INVALID_MODULI);
        assert!(p.is_null());
        assert!(last_error().contains("outside"));

        assert_eq!(chf_moduli_new(1.0, 1.0, ptr::null_mut()), CHF_ERR_NULL);

        assert_eq!(chf_moduli_new(1.3, 0.7, &mut p), CHF_OK);
        assert!(chf_last_error().is_null());
        let mut g = ptr::null_mut();
        // off the slice there is no 3x3 representation
        assert_eq!(chf_generators_new(p, 2, &mut g), CHF_ERR_INVALID_MODULI);
        assert_eq!(chf_generators_new(p, 3, &mut g), CHF_OK);

        let bad = CString::new("AXB").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(chf_generators_eval(g, bad.as_ptr(), &mut m), CHF_ERR_SYNTAX);
        let a = CString::new("A").unwrap();
        assert_eq!(chf_generators_eval(g, a.as_ptr(), &mut m), CHF_OK);
        let mut c = [0.0; 5];
        let mut r = 0.0;
        assert_eq!(chf_matrix_isometric_sphere(m, c.as_mut_ptr(), 5, &mut r), CHF_ERR_FIXES_INFINITY);

        chf_matrix_free(m);
        chf_generators_free(g);
        chf_moduli_free(p);
        chf_moduli_free(ptr::null_mut());
    }
}

#[test]
fn verify_and_tangency() {
    unsafe {
        let mut p = ptr::null_mut();
        chf_moduli_base_point(&mut p);
        let mut verdict = -1;
        assert_eq!(chf_verify(p, 0, 3, &mut verdict), CHF_OK);
        assert_eq!(verdict, 1);
        chf_moduli_free(p);
        let mut h1 = 0.0;
        assert_eq!(chf_tangency_h1(&mut h1), CHF_OK);
        assert!((h1 - 1.29326).abs() < 1e-3);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/chford.h")).unwrap();
    for name in [
        "chf_last_error",
        "chf_moduli_new",
        "chf_moduli_base_point",
        "chf_moduli_free",
        "chf_moduli_info",
        "chf_generators_new",
        "chf_generators_free",
        "chf_generators_eval",
        "chf_matrix_free",
        "chf_matrix_dim",
        "chf_matrix_entries",
        "chf_matrix_classify",
        "chf_matrix_isometric_sphere",
        "chf_verify",
        "chf_tangency_h1",
        "typedef struct ChfModuli ChfModuli",
        "#define CHF_ERR_INVALID_MODULI -4",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
