//! C ABI over `chford`.
//!
//! Objects are opaque heap handles with `_new`/`_free` pairs. Fallible calls
//! return an `int32_t` status (`CHF_OK` or a negative `CHF_ERR_*` code) and write
//! results through out-pointers. After a failure, `chf_last_error` returns a
//! message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chford::classify::{classify, IsometryKind};
use chford::ford::{full_audit, neighborhood_audit, tangency_scan};
use chford::group::{gram_matrix, generators, GeneratorSet, ModuliPoint};
use chford::heisenberg::isometric_sphere;
use chford::{Error, GroupElement, Tolerances};

pub const CHF_OK: i32 = 0;
pub const CHF_ERR_NULL: i32 = -1;
pub const CHF_ERR_USAGE: i32 = -2;
pub const CHF_ERR_INVALID_INPUT: i32 = -3;
pub const CHF_ERR_INVALID_MODULI: i32 = -4;
pub const CHF_ERR_SYNTAX: i32 = -5;
pub const CHF_ERR_FIXES_INFINITY: i32 = -6;
pub const CHF_ERR_DEGENERATE: i32 = -7;
pub const CHF_ERR_OUT_OF_SCOPE: i32 = -8;
pub const CHF_ERR_NO_SIGN_CHANGE: i32 = -9;
pub const CHF_ERR_IO: i32 = -10;
pub const CHF_ERR_CONFIG: i32 = -11;
pub const CHF_ERR_BUFFER: i32 = -12;
pub const CHF_ERR_UTF8: i32 = -13;
pub const CHF_ERR_PANIC: i32 = -14;

pub const CHF_KIND_REGULAR_ELLIPTIC: i32 = 0;
pub const CHF_KIND_SPECIAL_ELLIPTIC: i32 = 1;
pub const CHF_KIND_LOXODROMIC: i32 = 2;
pub const CHF_KIND_PARABOLIC_UNIPOTENT: i32 = 3;
pub const CHF_KIND_PARABOLIC_OTHER: i32 = 4;
pub const CHF_KIND_BOUNDARY_UNDETERMINED: i32 = 5;

/// A point `(h, t)` of the moduli space.
pub struct ChfModuli(ModuliPoint);

/// Generators I1..I4, A, B, C at a moduli point.
pub struct ChfGenerators(GeneratorSet);

/// A group element (complex square matrix with its word).
pub struct ChfMatrix(GroupElement);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn code_of(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => CHF_ERR_USAGE,
        Error::InvalidInput(_) => CHF_ERR_INVALID_INPUT,
        Error::InvalidModuli(_) => CHF_ERR_INVALID_MODULI,
        Error::Syntax { .. } => CHF_ERR_SYNTAX,
        Error::FixesInfinity(_) => CHF_ERR_FIXES_INFINITY,
        Error::DegenerateChart(_) => CHF_ERR_DEGENERATE,
        Error::OutOfScope(_) => CHF_ERR_OUT_OF_SCOPE,
        Error::NoSignChange(_) => CHF_ERR_NO_SIGN_CHANGE,
        Error::Io(_) => CHF_ERR_IO,
        Error::Config(_) => CHF_ERR_CONFIG,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (i32, String)>>(f: F) -> i32 {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CHF_OK,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            CHF_ERR_PANIC
        }
    }
}

fn lib(e: Error) -> (i32, String) {
    (code_of(&e), e.to_string())
}

fn null(name: &str) -> (i32, String) {
    (CHF_ERR_NULL, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (i32, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn slot_of<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (i32, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next `chf_*` call on the same thread.
#[no_mangle]
pub extern "C" fn chf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Create a moduli point; fails with `CHF_ERR_INVALID_MODULI` outside the moduli space.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chf_moduli_new(h: f64, t: f64, out: *mut *mut ChfModuli) -> i32 {
    guard(|| {
        let slot = slot_of(out, "out")?;
        let p = ModuliPoint::checked(h, t).map_err(lib)?;
        *slot = Box::into_raw(Box::new(ChfModuli(p)));
        Ok(())
    })
}

/// The base point `(sqrt 2, arccos(-7/8))`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chf_moduli_base_point(out: *mut *mut ChfModuli) -> i32 {
    guard(|| {
        *slot_of(out, "out")? = Box::into_raw(Box::new(ChfModuli(ModuliPoint::base_point())));
        Ok(())
    })
}

/// # Safety
/// `p` must come from `chf_moduli_*` and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn chf_moduli_free(p: *mut ChfModuli) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `h`, `t`, whether the point is on the 2D slice, and the Gram determinant.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chf_moduli_info(
    p: *const ChfModuli,
    h: *mut f64,
    t: *mut f64,
    is_2d_slice: *mut i32,
    gram_det: *mut f64,
) -> i32 {
    guard(|| {
        let p = &deref(p, "point")?.0;
        let (h, t, s, d) = (slot_of(h, "h")?, slot_of(t, "t")?, slot_of(is_2d_slice, "is_2d_slice")?, slot_of(gram_det, "gram_det")?);
        *h = p.h;
        *t = p.t;
        *s = i32::from(p.status().is_2d_slice);
        *d = gram_matrix(p).matrix().determinant().re;
        Ok(())
    })
}

/// Build generators; `dim` is 2 (3x3, on the slice only) or 3 (4x4).
///
/// # Safety
/// `p` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chf_generators_new(p: *const ChfModuli, dim: u32, out: *mut *mut ChfGenerators) -> i32 {
    guard(|| {
        let p = &deref(p, "point")?.0;
        let slot = slot_of(out, "out")?;
        let g = generators(p, dim as usize).map_err(lib)?;
        *slot = Box::into_raw(Box::new(ChfGenerators(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must come from `chf_generators_new`; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn chf_generators_free(g: *mut ChfGenerators) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Evaluate a word in `A B C a b c I1..I4` (powers with `^`).
///
/// # Safety
/// `g`, `word` (NUL-terminated) and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chf_generators_eval(
    g: *const ChfGenerators,
    word: *const c_char,
    out: *mut *mut ChfMatrix,
) -> i32 {
    guard(|| {
        let g = &deref(g, "generators")?.0;
        if word.is_null() {
            return Err(null("word"));
        }
        let w = CStr::from_ptr(word)
            .to_str()
            .map_err(|_| (CHF_ERR_UTF8, "word is not UTF-8".to_string()))?;
        let slot = slot_of(out, "out")?;
        let m = g.eval(w).map_err(lib)?;
        *slot = Box::into_raw(Box::new(ChfMatrix(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from `chf_generators_eval`; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn chf_matrix_free(m: *mut ChfMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of rows (= columns).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chf_matrix_dim(m: *const ChfMatrix, dim: *mut usize) -> i32 {
    guard(|| {
        *slot_of(dim, "dim")? = deref(m, "matrix")?.0.dim();
        Ok(())
    })
}

/// Copy the entries row-major as interleaved `(re, im)`; `len` must be at least `2 dim^2`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn chf_matrix_entries(m: *const ChfMatrix, buf: *mut f64, len: usize) -> i32 {
    guard(|| {
        let m = deref(m, "matrix")?.0.matrix();
        let n = m.nrows();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < 2 * n * n {
            return Err((CHF_ERR_BUFFER, format!("buffer holds {len} doubles, need {}", 2 * n * n)));
        }
        let dst = std::slice::from_raw_parts_mut(buf, 2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                dst[2 * (i * n + j)] = z.re;
                dst[2 * (i * n + j) + 1] = z.im;
            }
        }
        Ok(())
    })
}

/// Classify with default tolerances; `kind` receives a `CHF_KIND_*` value.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chf_matrix_classify(m: *const ChfMatrix, kind: *mut i32, discriminant: *mut f64) -> i32 {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        let (k, d) = (slot_of(kind, "kind")?, slot_of(discriminant, "discriminant")?);
        let c = classify(m, &Tolerances::default()).map_err(lib)?;
        *k = match c.kind {
            IsometryKind::RegularElliptic => CHF_KIND_REGULAR_ELLIPTIC,
            IsometryKind::SpecialElliptic => CHF_KIND_SPECIAL_ELLIPTIC,
            IsometryKind::Loxodromic => CHF_KIND_LOXODROMIC,
            IsometryKind::ParabolicUnipotent => CHF_KIND_PARABOLIC_UNIPOTENT,
            IsometryKind::ParabolicOther => CHF_KIND_PARABOLIC_OTHER,
            IsometryKind::BoundaryUndetermined => CHF_KIND_BOUNDARY_UNDETERMINED,
        };
        *d = c.discriminant;
        Ok(())
    })
}

/// Isometric sphere: center `(Re z_1, Im z_1, ..., t)` into `center` (length
/// `2 (dim - 2) + 1`) and the Cygan radius.
///
/// # Safety
/// `center` must hold `len` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chf_matrix_isometric_sphere(
    m: *const ChfMatrix,
    center: *mut f64,
    len: usize,
    radius: *mut f64,
) -> i32 {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        let r = slot_of(radius, "radius")?;
        if center.is_null() {
            return Err(null("center"));
        }
        let s = isometric_sphere(m).map_err(lib)?;
        let need = 2 * s.center.z.len() + 1;
        if len < need {
            return Err((CHF_ERR_BUFFER, format!("buffer holds {len} doubles, need {need}")));
        }
        let dst = std::slice::from_raw_parts_mut(center, need);
        for (k, z) in s.center.z.iter().enumerate() {
            dst[2 * k] = z.re;
            dst[2 * k + 1] = z.im;
        }
        dst[need - 1] = s.center.t;
        *r = s.radius;
        Ok(())
    })
}

/// Run the audit at `p`: the full 3x3 audit when `full` is nonzero, otherwise
/// the neighborhood audit. `verdict` is 1 on pass, 0 on fail.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chf_verify(p: *const ChfModuli, full: i32, k_max: i32, verdict: *mut i32) -> i32 {
    guard(|| {
        let p = &deref(p, "point")?.0;
        let v = slot_of(verdict, "verdict")?;
        let tol = Tolerances::default();
        let pass = if full != 0 {
            full_audit(p, k_max, &tol).map_err(lib)?.verdict
        } else {
            neighborhood_audit(p, k_max, &tol).map_err(lib)?.verdict
        };
        *v = i32::from(pass);
        Ok(())
    })
}

/// `h` on the slice curve where I(B) becomes internally tangent to I(C).
///
/// # Safety
/// `h1` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chf_tangency_h1(h1: *mut f64) -> i32 {
    guard(|| {
        *slot_of(h1, "h1")? = tangency_scan().map_err(lib)?.h1;
        Ok(())
    })
}
