//! Horospherical coordinates, the Cygan metric and isometric spheres.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{herm_inner, max_abs, C64, CVector, GroupElement, HermitianForm, ONE, ZERO};
use crate::tol::Tolerances;

/// A point of the closed complex hyperbolic space in horospherical coordinates
/// `(z, t, u)`, or the point at infinity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeisenbergPoint {
    pub z: Vec<C64>,
    pub t: f64,
    pub u: f64,
    pub at_infinity: bool,
}

impl HeisenbergPoint {
    pub fn new(z: Vec<C64>, t: f64, u: f64) -> Result<Self> {
        if !(u >= 0.0) || !t.is_finite() || z.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "horospherical coordinates need finite z, t and u >= 0 (u = {u})"
            )));
        }
        Ok(HeisenbergPoint {
            z,
            t,
            u,
            at_infinity: false,
        })
    }

    /// A boundary point `(z, t, 0)` of the Heisenberg group.
    pub fn boundary(z: Vec<C64>, t: f64) -> Self {
        HeisenbergPoint {
            z,
            t,
            u: 0.0,
            at_infinity: false,
        }
    }

    /// Boundary point of the 2-dimensional Heisenberg group from `(x, y, t)`, `z = x + iy`.
    pub fn from_xyt(x: f64, y: f64, t: f64) -> Self {
        HeisenbergPoint::boundary(vec![C64::new(x, y)], t)
    }

    /// q_inf for the complex hyperbolic space of complex dimension `n`.
    pub fn infinity(n: usize) -> Self {
        HeisenbergPoint {
            z: vec![ZERO; n.saturating_sub(1)],
            t: 0.0,
            u: 0.0,
            at_infinity: true,
        }
    }

    /// Complex dimension `n` of the ambient space (vectors have length `n + 1`).
    pub fn n(&self) -> usize {
        self.z.len() + 1
    }
}

/// Standard lift `((-|z|^2 - u + it)/2, z, 1)`; q_inf lifts to `(1, 0, ..., 0)`.
pub fn lift(p: &HeisenbergPoint) -> CVector {
    let len = p.z.len() + 2;
    let mut v = CVector::zeros(len);
    if p.at_infinity {
        v[0] = ONE;
        return v;
    }
    let zz: f64 = p.z.iter().map(|w| w.norm_sqr()).sum();
    v[0] = C64::new(-zz - p.u, p.t) * 0.5;
    for (k, w) in p.z.iter().enumerate() {
        v[k + 1] = *w;
    }
    v[len - 1] = ONE;
    v
}

/// Horospherical coordinates of a non-positive vector. Rounding-level negative
/// `u` is clamped to zero; clearly positive vectors are rejected.
pub fn project(v: &CVector) -> Result<HeisenbergPoint> {
    let len = v.len();
    if len < 3 {
        return Err(Error::Usage(format!("project needs length >= 3, got {len}")));
    }
    let scale = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let last = v[len - 1];
    if last.norm() <= 1e-13 * scale {
        return Ok(HeisenbergPoint::infinity(len - 1));
    }
    let w = v.map(|x| x / last);
    let z: Vec<C64> = (1..len - 1).map(|k| w[k]).collect();
    let zz: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let t = 2.0 * w[0].im;
    let mut u = -2.0 * w[0].re - zz;
    let wscale = w.iter().fold(1.0f64, |a, z| a.max(z.norm_sqr()));
    if u < 0.0 {
        if u > -1e-9 * wscale {
            u = 0.0;
        } else {
            return Err(Error::InvalidInput(format!(
                "vector is positive (u = {u:.3e}); it has no horospherical coordinates"
            )));
        }
    }
    Ok(HeisenbergPoint {
        z,
        t,
        u,
        at_infinity: false,
    })
}

/// Extended Cygan distance `| |z-w|^2 + |u-v| + i(t - s + 2 Im(z . conj w)) |^{1/2}`.
pub fn cygan_distance(p: &HeisenbergPoint, q: &HeisenbergPoint) -> Result<f64> {
    if p.at_infinity || q.at_infinity {
        return Err(Error::InvalidInput("Cygan distance to q_inf is undefined".into()));
    }
    if p.z.len() != q.z.len() {
        return Err(Error::Usage("points live in different dimensions".into()));
    }
    let mut d2 = (p.u - q.u).abs();
    let mut cross = 0.0;
    for (a, b) in p.z.iter().zip(q.z.iter()) {
        d2 += (a - b).norm_sqr();
        cross += (a * b.conj()).im;
    }
    Ok(C64::new(d2, p.t - q.t + 2.0 * cross).norm().sqrt())
}

/// Heisenberg group law `[z,t].[w,s] = [z+w, t+s+2 Im(z . conj w)]` on boundary points.
pub fn heisenberg_product(p: &HeisenbergPoint, q: &HeisenbergPoint) -> HeisenbergPoint {
    let z: Vec<C64> = p.z.iter().zip(q.z.iter()).map(|(a, b)| a + b).collect();
    let cross: f64 = p.z.iter().zip(q.z.iter()).map(|(a, b)| (a * b.conj()).im).sum();
    HeisenbergPoint::boundary(z, p.t + q.t + 2.0 * cross)
}

/// k-fold action of A: `(z, t) -> (z - 2, t + 4 Im z)` on the first coordinate
/// (left translation by `[-2, 0]`); `u` is unchanged.
pub fn a_action(p: &HeisenbergPoint, k: i32) -> HeisenbergPoint {
    if p.at_infinity || p.z.is_empty() {
        return p.clone();
    }
    let mut out = p.clone();
    let step = if k >= 0 { -2.0 } else { 2.0 };
    for _ in 0..k.unsigned_abs() {
        let z0 = out.z[0];
        out.t += 2.0 * (C64::new(step, 0.0) * z0.conj()).im;
        out.z[0] = z0 + step;
    }
    out
}

/// Isometric sphere: a Cygan sphere on the boundary plus the word that owns it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyganSphere {
    pub center: HeisenbergPoint,
    pub radius: f64,
    pub word: String,
}

/// `I(g)`: center `g^{-1}(q_inf)` and radius `sqrt(2/|g_{n+1,1}|)`.
pub fn isometric_sphere(g: &GroupElement) -> Result<CyganSphere> {
    let m = g.matrix();
    let n1 = m.nrows();
    let last = n1 - 1;
    let g1 = m[(last, 0)];
    if g1.norm() <= 1e-12 * (1.0 + max_abs(m)) {
        return Err(Error::FixesInfinity(g.word().to_string()));
    }
    let gc = g1.conj();
    let z: Vec<C64> = (1..last).map(|j| m[(last, j)].conj() / gc).collect();
    let t = 2.0 * (m[(last, last)].conj() / gc).im;
    Ok(CyganSphere {
        center: HeisenbergPoint::boundary(z, t),
        radius: (2.0 / g1.norm()).sqrt(),
        word: g.word().to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereRelation {
    Disjoint,
    Tangent,
    Overlapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereRelationResult {
    pub relation: SphereRelation,
    /// Cygan distance between centers minus the sum of radii.
    pub gap: f64,
    pub distance: f64,
}

/// Compare the center distance with the sum of radii.
///
/// `Overlapping` only means "not certified disjoint": the Cygan metric is not a
/// length metric, so a negative gap does not by itself force an intersection.
pub fn sphere_relation(s1: &CyganSphere, s2: &CyganSphere, tol: &Tolerances) -> Result<SphereRelationResult> {
    let d = cygan_distance(&s1.center, &s2.center)?;
    let gap = d - (s1.radius + s2.radius);
    let relation = if gap.abs() < tol.geometric {
        SphereRelation::Tangent
    } else if gap > 0.0 {
        SphereRelation::Disjoint
    } else {
        SphereRelation::Overlapping
    };
    Ok(SphereRelationResult {
        relation,
        gap,
        distance: d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Interior,
    On,
    Exterior,
}

/// `|<p, g^{-1} q_inf>| / |<p, q_inf>| - 1` for standard lifts, rebuilt from the
/// sphere record: the lift of the center scaled by `2/r^2` has the same modulus
/// as `g^{-1}(q_inf)`. Negative inside, zero on, positive outside the sphere.
pub fn membership_value(p: &HeisenbergPoint, s: &CyganSphere) -> f64 {
    if p.at_infinity {
        return f64::INFINITY;
    }
    let form = HermitianForm::standard(p.z.len() + 2);
    let lp = lift(p);
    let lc = lift(&s.center);
    let ip = herm_inner(&lp, &lc, &form).expect("matching dimensions");
    ip.norm() * 2.0 / (s.radius * s.radius) - 1.0
}

pub fn sphere_membership(p: &HeisenbergPoint, s: &CyganSphere, tol: &Tolerances) -> Membership {
    let v = membership_value(p, s);
    if v.abs() < tol.geometric {
        Membership::On
    } else if v < 0.0 {
        Membership::Interior
    } else {
        Membership::Exterior
    }
}

/// `| |z - z0|^2 + u + i(t - t0 + 2 Im(z . conj z0)) | - r^2`, zero on the sphere.
pub fn cygan_sphere_residual(p: &HeisenbergPoint, s: &CyganSphere) -> f64 {
    let mut re = p.u;
    let mut cross = 0.0;
    for (a, b) in p.z.iter().zip(s.center.z.iter()) {
        re += (a - b).norm_sqr();
        cross += (a * b.conj()).im;
    }
    C64::new(re, p.t - s.center.t + 2.0 * cross).norm() - s.radius * s.radius
}

/// Point of the spinal sphere `{ |z-z0|^2 = r^2 cos(phi) }` in `(phi, psi)` coordinates,
/// `phi in [-pi/2, pi/2]`, for the 2-dimensional Heisenberg group.
pub fn spinal_sphere_point(s: &CyganSphere, phi: f64, psi: f64) -> HeisenbergPoint {
    let r2 = s.radius * s.radius;
    let z0 = s.center.z[0];
    let z = z0 + C64::from_polar(s.radius * phi.cos().max(0.0).sqrt(), psi);
    let t = r2 * phi.sin() + s.center.t - 2.0 * (z * z0.conj()).im;
    HeisenbergPoint::from_xyt(z.re, z.im, t)
}
