//! Trace-based classification of isometries in SU(2,1) and SU(3,1).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{max_abs, scalar_equiv_matrix, C64, CMatrix, GroupElement};
use crate::tol::Tolerances;

/// Goldman's discriminant `|z|^4 - 8 Re(z^3) + 18|z|^2 - 27`.
pub fn goldman_g(z: C64) -> f64 {
    let a = z.norm_sqr();
    a * a - 8.0 * (z * z * z).re + 18.0 * a - 27.0
}

/// Resultant of `X^4 - tau X^3 + sigma X^2 - conj(tau) X + 1`, in the normalisation
/// `4(s^2/3 - |t|^2 + 4)^3 - 27(2s^3/27 - |t|^2 s/3 - 8s/3 + t^2 + conj(t)^2)^2`.
pub fn holy_grail_h(tau: C64, sigma: f64) -> f64 {
    let a = tau.norm_sqr();
    let s = sigma;
    let p = s * s / 3.0 - a + 4.0;
    let q = 2.0 * s * s * s / 27.0 - a * s / 3.0 - 8.0 * s / 3.0 + 2.0 * (tau * tau).re;
    4.0 * p * p * p - 27.0 * q * q
}

/// Trace data of an SU-normalised matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceInvariants {
    pub tau: C64,
    /// `(tr^2 - tr(M^2)) / 2`; real for SU(3,1).
    pub sigma: f64,
    /// Imaginary part dropped from sigma (a consistency diagnostic).
    pub sigma_imag: f64,
}

pub fn trace_invariants(m: &CMatrix) -> TraceInvariants {
    let tau = m.trace();
    let s = (tau * tau - (m * m).trace()) * 0.5;
    TraceInvariants {
        tau,
        sigma: s.re,
        sigma_imag: s.im,
    }
}

/// The primitive cube root of unity relating the three SU(2,1) lifts.
pub fn omega() -> C64 {
    C64::from_polar(1.0, 2.0 * PI / 3.0)
}

/// Scale `M` to determinant one. Among the `n+1` roots, the one with argument in
/// `[-pi/(n+1), pi/(n+1))` is used, so a determinant of `-1` gives `e^{-i pi/(n+1)}`.
pub fn su_normalize(m: &GroupElement) -> Result<GroupElement> {
    let k = m.dim() as f64;
    let det = m.det();
    // entries of loxodromic words grow fast while det stays of unit size, so
    // test the conditioning rather than det against the entry scale
    let sv = m.matrix().clone().svd(false, false).singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    if !(hi > 0.0 && lo > 1e-14 * hi) || det.norm() == 0.0 {
        return Err(Error::InvalidInput(format!(
            "cannot normalise singular matrix (word {})",
            m.word()
        )));
    }
    let mut arg = det.arg();
    if (arg + PI).abs() < 1e-12 {
        arg = PI;
    }
    let lambda = C64::from_polar(det.norm().powf(-1.0 / k), -arg / k);
    Ok(m.scaled(lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsometryKind {
    RegularElliptic,
    /// Elliptic with a repeated eigenvalue (complex reflections, involutions, identity).
    SpecialElliptic,
    Loxodromic,
    ParabolicUnipotent,
    /// Non-diagonalisable with a repeated eigenvalue that is not unipotent (ellipto-parabolic).
    ParabolicOther,
    BoundaryUndetermined,
}

/// Result of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryClass {
    pub kind: IsometryKind,
    /// Goldman's G(tau) for 3x3 input, the holy-grail H(tau, sigma) for 4x4 input.
    pub discriminant: f64,
    pub invariants: TraceInvariants,
    /// Eigenvalues of the SU-normalised matrix.
    pub eigenvalues: Vec<C64>,
    /// Set when the eigenstructure was inspected (discriminant in the zero band).
    pub diagonalisable: Option<bool>,
    pub in_boundary_band: bool,
}

/// Eigenvalues via complex Schur decomposition.
///
/// Near-scalar input (relations such as `C^3`) is answered directly: the
/// unshifted QR iteration crawls on it.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mu = m.trace() / n as f64;
    let shifted = m - CMatrix::identity(n, n) * mu;
    if max_abs(&shifted) <= 1e-12 * max_abs(m) {
        return vec![mu; n];
    }
    let limit = 1000 * n;
    let diag = |t: CMatrix, add: C64| (0..n).map(|i| t[(i, i)] + add).collect::<Vec<_>>();
    if let Some(s) = m.clone().try_schur(f64::EPSILON, limit) {
        return diag(s.unpack().1, C64::new(0.0, 0.0));
    }
    if let Some(s) = shifted.clone().try_schur(f64::EPSILON, limit) {
        return diag(s.unpack().1, mu);
    }
    // last resort, no iteration cap
    diag(shifted.schur().unpack().1, mu)
}

fn clusters(ev: &[C64], rel: f64) -> Vec<Vec<usize>> {
    let n = ev.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = ev[i].norm().max(ev[j].norm()).max(1.0);
            if (ev[i] - ev[j]).norm() < rel * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => groups[k].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

enum Diag {
    Yes,
    No,
    Unclear,
}

fn diagonalisable(m: &CMatrix, ev: &[C64], groups: &[Vec<usize>]) -> Diag {
    let n = m.nrows();
    let scale = max_abs(m).max(1.0);
    let mut all = true;
    for g in groups.iter().filter(|g| g.len() > 1) {
        let mu: C64 = g.iter().map(|&i| ev[i]).sum::<C64>() / g.len() as f64;
        let shifted = m - CMatrix::identity(n, n) * mu;
        let sv = shifted.singular_values();
        let small = sv.iter().filter(|&&s| s < 1e-7 * scale).count();
        let large = sv.iter().filter(|&&s| s > 1e-4 * scale).count();
        if small + large != n {
            return Diag::Unclear;
        }
        if small < g.len() {
            all = false;
        }
    }
    if all {
        Diag::Yes
    } else {
        Diag::No
    }
}

fn off_unit_circle(ev: &[C64]) -> bool {
    ev.iter().any(|z| (z.norm() - 1.0).abs() > 1e-6)
}

/// `M` is `zeta * (unipotent)` for a root of unity `zeta`; returns `Some(true)` for
/// the identity class, `Some(false)` for a nontrivial unipotent.
fn unipotent_test(m: &CMatrix, tol: &Tolerances) -> Option<bool> {
    let n = m.nrows();
    let k = n as f64;
    let id = CMatrix::identity(n, n);
    for j in 0..n {
        let zeta = C64::from_polar(1.0, 2.0 * PI * j as f64 / k);
        let nil = m * zeta - &id;
        let size = max_abs(&nil);
        if size < tol.identity {
            return Some(true);
        }
        let mut p = nil.clone();
        for _ in 1..n {
            p = &p * &nil;
        }
        if max_abs(&p) < 1e-9 * (1.0 + size).powi(n as i32) {
            return Some(false);
        }
    }
    None
}

/// Classify an isometry by its trace discriminant, inspecting the eigenstructure
/// only inside the zero band.
pub fn classify(m: &GroupElement, tol: &Tolerances) -> Result<IsometryClass> {
    let dim = m.dim();
    if dim != 3 && dim != 4 {
        return Err(Error::Usage(format!("classify needs a 3x3 or 4x4 matrix, got {dim}x{dim}")));
    }
    let su = su_normalize(m)?;
    let mhat = su.matrix();
    let inv = trace_invariants(mhat);
    let disc = if dim == 3 {
        goldman_g(inv.tau)
    } else {
        holy_grail_h(inv.tau, inv.sigma)
    };
    let ev = eigenvalues(mhat);
    let band = tol.boundary_band * (1.0 + inv.tau.norm().powi(6));
    let mut out = IsometryClass {
        kind: IsometryKind::BoundaryUndetermined,
        discriminant: disc,
        invariants: inv,
        eigenvalues: ev.clone(),
        diagonalisable: None,
        in_boundary_band: false,
    };
    // G < 0 and H > 0 both mean regular elliptic.
    let elliptic_sign = if dim == 3 { -1.0 } else { 1.0 };
    if disc.abs() > band {
        out.kind = if disc * elliptic_sign > 0.0 {
            IsometryKind::RegularElliptic
        } else {
            IsometryKind::Loxodromic
        };
        return Ok(out);
    }
    out.in_boundary_band = true;
    match unipotent_test(mhat, tol) {
        Some(true) => {
            out.kind = IsometryKind::SpecialElliptic;
            out.diagonalisable = Some(true);
            return Ok(out);
        }
        Some(false) => {
            out.kind = IsometryKind::ParabolicUnipotent;
            out.diagonalisable = Some(false);
            return Ok(out);
        }
        None => {}
    }
    let groups = clusters(&ev, tol.cluster);
    if groups.iter().all(|g| g.len() == 1) {
        out.diagonalisable = Some(true);
        out.kind = if off_unit_circle(&ev) {
            IsometryKind::Loxodromic
        } else {
            IsometryKind::RegularElliptic
        };
        return Ok(out);
    }
    match diagonalisable(mhat, &ev, &groups) {
        Diag::Unclear => {}
        Diag::Yes => {
            out.diagonalisable = Some(true);
            out.kind = if off_unit_circle(&ev) {
                IsometryKind::Loxodromic
            } else {
                IsometryKind::SpecialElliptic
            };
        }
        Diag::No => {
            out.diagonalisable = Some(false);
            out.kind = IsometryKind::ParabolicOther;
        }
    }
    Ok(out)
}

/// Smallest `k <= max_k` with `M^k` a scalar matrix.
pub fn projective_order(m: &GroupElement, max_k: u32, tol: f64) -> Option<u32> {
    let n = m.dim();
    let id = CMatrix::identity(n, n);
    let mut p = m.matrix().clone();
    for k in 1..=max_k {
        if scalar_equiv_matrix(&p, &id, tol) {
            return Some(k);
        }
        p = &p * m.matrix();
    }
    None
}

/// Smallest `k <= max_k` such that every eigenvalue ratio `lambda_i / lambda_0`
/// is a k-th root of unity (and all eigenvalues have modulus one).
pub fn eigen_order(eigs: &[C64], max_k: u32, tol: f64) -> Option<u32> {
    if eigs.is_empty() || off_unit_circle(eigs) {
        return None;
    }
    let l0 = eigs[0];
    (1..=max_k).find(|&k| {
        eigs.iter()
            .all(|&l| ((l / l0).powu(k) - C64::new(1.0, 0.0)).norm() < tol)
    })
}

/// Eigenvalue arguments relative to the first eigenvalue, as fractions of a full turn in `(-1/2, 1/2]`.
pub fn relative_turns(eigs: &[C64]) -> Vec<f64> {
    let Some(&l0) = eigs.first() else {
        return Vec::new();
    };
    eigs.iter()
        .map(|&l| {
            let a = (l / l0).arg() / (2.0 * PI);
            if a <= -0.5 {
                a + 1.0
            } else {
                a
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{cmat, ONE, ZERO};

    #[test]
    fn goldman_values() {
        assert_eq!(goldman_g(C64::new(3.0, 0.0)), 0.0);
        assert_eq!(goldman_g(ZERO), -27.0);
        let w = omega() * 3.0;
        assert!(goldman_g(w).abs() < 1e-12);
    }

    #[test]
    fn holy_grail_identity_is_zero() {
        assert_eq!(holy_grail_h(C64::new(4.0, 0.0), 6.0), 0.0);
    }

    #[test]
    fn holy_grail_repeated_eigenvalue() {
        // eigenvalues e^{i a}, e^{i a}, e^{i b}, e^{-i(2a+b)}
        let (a, b) = (0.4f64, -1.1f64);
        let ev = [a, a, b, -(2.0 * a + b)].map(|x| C64::from_polar(1.0, x));
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&ev));
        let inv = trace_invariants(&m);
        assert!(inv.sigma_imag.abs() < 1e-12);
        assert!(holy_grail_h(inv.tau, inv.sigma).abs() < 1e-9);
    }

    #[test]
    fn su_normalize_identity_and_sign() {
        let id = GroupElement::identity(4);
        let n = su_normalize(&id).unwrap();
        assert!(max_abs(&(n.matrix() - id.matrix())) < 1e-15);
        let neg = GroupElement::new(CMatrix::from_diagonal_element(4, 4, -ONE), "m");
        let n = su_normalize(&neg.scaled(ONE)).unwrap();
        // det(-I) = 1 for 4x4, so nothing changes
        assert!(max_abs(&(n.matrix() - neg.matrix())) < 1e-15);
    }

    #[test]
    fn su_normalize_rejects_singular() {
        let z = GroupElement::new(CMatrix::zeros(3, 3), "0");
        assert!(su_normalize(&z).is_err());
    }

    #[test]
    fn unipotent_heisenberg_translation() {
        let two = C64::new(2.0, 0.0);
        let a = GroupElement::new(cmat(&[&[ONE, two, -two], &[ZERO, ONE, -two], &[ZERO, ZERO, ONE]]), "A");
        let c = classify(&a, &Tolerances::default()).unwrap();
        assert_eq!(c.kind, IsometryKind::ParabolicUnipotent);
    }

    #[test]
    fn eigen_order_of_rotation() {
        let ev: Vec<C64> = [0.0, 1.0, 2.0].iter().map(|k| C64::from_polar(1.0, k * PI / 3.0)).collect();
        assert_eq!(eigen_order(&ev, 12, 1e-9), Some(6));
        let t = relative_turns(&ev);
        assert!((t[1] - 1.0 / 6.0).abs() < 1e-12);
    }
}
