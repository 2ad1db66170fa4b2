//! Linear algebra over C^{n,1} with the anti-diagonal Hermitian form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Build a complex vector from a slice.
pub fn cvec(entries: &[C64]) -> CVector {
    CVector::from_column_slice(entries)
}

/// Build a complex matrix from rows.
pub fn cmat(rows: &[&[C64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// The point q_inf = (1, 0, ..., 0) with its standard lift.
pub fn q_inf(len: usize) -> CVector {
    let mut v = CVector::zeros(len);
    v[0] = ONE;
    v
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// A Hermitian form on C^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    matrix: CMatrix,
}

impl HermitianForm {
    /// Wrap a matrix, checking that it is square and Hermitian.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(Error::Usage(format!(
                "Hermitian form must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = 1.0 + max_abs(&matrix);
        let defect = max_abs(&(&matrix - matrix.adjoint()));
        if defect > 1e-9 * scale {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(HermitianForm { matrix })
    }

    /// The form with ones on the anti-diagonal corners and identity in the middle,
    /// acting on vectors of length `len` (3 or 4).
    pub fn standard(len: usize) -> Self {
        let mut m = CMatrix::zeros(len, len);
        m[(0, len - 1)] = ONE;
        m[(len - 1, 0)] = ONE;
        for i in 1..len - 1 {
            m[(i, i)] = ONE;
        }
        HermitianForm { matrix: m }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// `<z, w> = w^* H z`.
    pub fn inner(&self, z: &CVector, w: &CVector) -> Result<C64> {
        herm_inner(z, w, self)
    }

    /// Real eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// (positive, negative, zero) eigenvalue counts with the given tolerance.
    pub fn signature(&self, tol: f64) -> (usize, usize, usize) {
        let ev = self.eigenvalues();
        let scale = 1.0 + ev.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let pos = ev.iter().filter(|&&x| x > tol * scale).count();
        let neg = ev.iter().filter(|&&x| x < -tol * scale).count();
        (pos, neg, ev.len() - pos - neg)
    }
}

impl Serialize for HermitianForm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_matrix(&self.matrix, s)
    }
}

/// Matrices serialize as rows of `[re, im]` pairs.
pub fn serialize_matrix<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    rows.serialize(s)
}

pub fn serialize_opt_matrix<S: Serializer>(m: &Option<CMatrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match m {
        Some(m) => serialize_matrix(m, s),
        None => s.serialize_none(),
    }
}

/// Vectors serialize as lists of `[re, im]` pairs.
pub fn serialize_vector<S: Serializer>(v: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    let xs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
    xs.serialize(s)
}

pub fn serialize_vectors<S: Serializer>(vs: &[CVector], s: S) -> std::result::Result<S::Ok, S::Error> {
    let xs: Vec<Vec<[f64; 2]>> = vs.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect();
    xs.serialize(s)
}

/// `<z, w> = w^* H z`.
pub fn herm_inner(z: &CVector, w: &CVector, h: &HermitianForm) -> Result<C64> {
    let n = h.len();
    if z.len() != n || w.len() != n {
        return Err(Error::Usage(format!(
            "inner product needs vectors of length {n}, got {} and {}",
            z.len(),
            w.len()
        )));
    }
    let hz = h.matrix() * z;
    Ok(w.iter().zip(hz.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// Hermitian cross product for the standard 3x3 form.
///
/// The result is H-orthogonal to both arguments and vanishes iff they are
/// linearly dependent. It is conjugate-linear in each slot.
pub fn box_cross(p: &CVector, q: &CVector) -> Result<CVector> {
    if p.len() != 3 || q.len() != 3 {
        return Err(Error::Usage(format!(
            "box_cross needs length-3 vectors, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    box_cross_general(p, q, &HermitianForm::standard(3))
}

/// Hermitian cross product with respect to an arbitrary 3x3 form `hl`.
///
/// With covectors a = x^* H_L and b = y^* H_L (as column vectors), the result is
/// the Euclidean cross product a x b. Then `<result, x>_{H_L} = a . (a x b) = 0`.
pub fn box_cross_general(x: &CVector, y: &CVector, hl: &HermitianForm) -> Result<CVector> {
    if x.len() != 3 || y.len() != 3 || hl.len() != 3 {
        return Err(Error::Usage(format!(
            "cross product needs length-3 vectors and a 3x3 form, got {}, {}, {}x{}",
            x.len(),
            y.len(),
            hl.len(),
            hl.len()
        )));
    }
    let a = hl.matrix().transpose() * x.map(|z| z.conj());
    let b = hl.matrix().transpose() * y.map(|z| z.conj());
    Ok(cvec(&[
        a[1] * b[2] - b[1] * a[2],
        a[2] * b[0] - b[2] * a[0],
        a[0] * b[1] - b[0] * a[1],
    ]))
}

/// A matrix together with the word that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: CMatrix,
    word: String,
}

impl GroupElement {
    pub fn new(matrix: CMatrix, word: impl Into<String>) -> Self {
        GroupElement {
            matrix,
            word: word.into(),
        }
    }

    pub fn identity(len: usize) -> Self {
        GroupElement::new(CMatrix::identity(len, len), "")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_word(mut self, word: impl Into<String>) -> Self {
        self.word = word.into();
        self
    }

    /// Product `self * other`; words are concatenated.
    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        let word = match (self.word.is_empty(), other.word.is_empty()) {
            (true, _) => other.word.clone(),
            (_, true) => self.word.clone(),
            _ => format!("{} {}", self.word, other.word),
        };
        GroupElement::new(&self.matrix * &other.matrix, word)
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput(format!("singular matrix for word {}", self.word)))?;
        Ok(GroupElement::new(inv, format!("({})^-1", self.word)))
    }

    pub fn pow(&self, k: i32) -> Result<GroupElement> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut out = CMatrix::identity(self.dim(), self.dim());
        for _ in 0..k.unsigned_abs() {
            out = &out * base.matrix();
        }
        Ok(GroupElement::new(out, format!("({})^{k}", self.word)))
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    pub fn det(&self) -> C64 {
        self.matrix.determinant()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `max |M^* H M - H|`.
    pub fn form_defect(&self, h: &HermitianForm) -> f64 {
        max_abs(&(self.matrix.adjoint() * h.matrix() * &self.matrix - h.matrix()))
    }

    pub fn preserves(&self, h: &HermitianForm, tol: f64) -> bool {
        self.form_defect(h) < tol
    }

    /// Scale the matrix by a complex number.
    pub fn scaled(&self, lambda: C64) -> GroupElement {
        GroupElement::new(self.matrix.map(|z| z * lambda), self.word.clone())
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        struct M<'a>(&'a CMatrix);
        impl Serialize for M<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                serialize_matrix(self.0, s)
            }
        }
        let mut st = s.serialize_struct("GroupElement", 2)?;
        st.serialize_field("word", &self.word)?;
        st.serialize_field("matrix", &M(&self.matrix))?;
        st.end()
    }
}

/// Index of the entry of largest modulus (first one on ties).
fn argmax_abs<'a>(it: impl Iterator<Item = &'a C64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in it.enumerate() {
        let a = z.norm();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best
}

/// True iff `M = lambda N` for a unit-modulus `lambda`, within `tol` entrywise
/// after dividing both matrices by their entry at the largest-modulus position of `M`.
pub fn scalar_equiv(m: &GroupElement, n: &GroupElement, tol: f64) -> bool {
    scalar_equiv_matrix(m.matrix(), n.matrix(), tol)
}

pub fn scalar_equiv_matrix(m: &CMatrix, n: &CMatrix, tol: f64) -> bool {
    if m.shape() != n.shape() {
        return false;
    }
    let Some((k, mk)) = argmax_abs(m.iter()) else {
        return true;
    };
    let nk = n.as_slice()[k];
    if mk == 0.0 || nk.norm() < tol * mk {
        return false;
    }
    let lambda = m.as_slice()[k] / nk;
    if (lambda.norm() - 1.0).abs() > tol {
        return false;
    }
    let mk_c = m.as_slice()[k];
    m.iter()
        .zip(n.iter())
        .all(|(a, b)| (a / mk_c - b / nk).norm() < tol)
}

/// Projective equality of vectors: normalise both by the entry where `v` is largest.
pub fn projectively_equal(v: &CVector, w: &CVector, tol: f64) -> bool {
    projective_distance(v, w) < tol
}

/// Max entrywise difference after normalising both vectors at the largest entry of `v`.
pub fn projective_distance(v: &CVector, w: &CVector) -> f64 {
    if v.len() != w.len() {
        return f64::INFINITY;
    }
    let Some((k, vk)) = argmax_abs(v.iter()) else {
        return f64::INFINITY;
    };
    let wk = w[k];
    if vk == 0.0 || wk.norm() < 1e-300 {
        return f64::INFINITY;
    }
    let a = v[k];
    v.iter()
        .zip(w.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x / a - y / wk).norm()))
}

/// Divide a vector by its entry of largest modulus.
pub fn normalize_projective(v: &CVector) -> CVector {
    match argmax_abs(v.iter()) {
        Some((k, a)) if a > 0.0 => {
            let d = v[k];
            v.map(|z| z / d)
        }
        _ => v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn standard_form_shape() {
        let h = HermitianForm::standard(4);
        assert_eq!(h.matrix()[(0, 3)], ONE);
        assert_eq!(h.matrix()[(1, 1)], ONE);
        assert_eq!(h.matrix()[(0, 0)], ZERO);
        assert_eq!(h.signature(1e-12), (3, 1, 0));
        assert_eq!(HermitianForm::standard(3).signature(1e-12), (2, 1, 0));
    }

    #[test]
    fn q_inf_is_null() {
        let h = HermitianForm::standard(3);
        let q = q_inf(3);
        assert_eq!(herm_inner(&q, &q, &h).unwrap(), ZERO);
    }

    #[test]
    fn inner_rejects_mismatch() {
        let h = HermitianForm::standard(3);
        let err = herm_inner(&q_inf(3), &q_inf(4), &h).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = cmat(&[&[ONE, I], &[I, ONE]]);
        assert!(HermitianForm::new(m).is_err());
    }

    #[test]
    fn cross_of_equal_vectors_vanishes() {
        let p = cvec(&[c(1.0, 2.0), c(-0.5, 0.3), c(0.7, -1.1)]);
        let x = box_cross(&p, &p).unwrap();
        assert!(max_abs_vec(&x) < 1e-15);
    }

    #[test]
    fn cross_rejects_length_four() {
        assert!(box_cross(&q_inf(4), &q_inf(4)).is_err());
    }

    #[test]
    fn cross_is_orthogonal() {
        let h = HermitianForm::standard(3);
        let p = cvec(&[c(1.0, 2.0), c(-0.5, 0.3), c(0.7, -1.1)]);
        let q = cvec(&[c(-0.2, 0.9), c(1.5, 0.0), c(0.1, 0.4)]);
        let x = box_cross(&p, &q).unwrap();
        assert!(herm_inner(&x, &p, &h).unwrap().norm() < 1e-14);
        assert!(herm_inner(&x, &q, &h).unwrap().norm() < 1e-14);
    }

    #[test]
    fn scalar_equiv_basics() {
        let m = GroupElement::new(cmat(&[&[ONE, c(2.0, 0.0)], &[ZERO, ONE]]), "A");
        let rotated = m.scaled(C64::from_polar(1.0, 0.7));
        assert!(scalar_equiv(&m, &rotated, 1e-12));
        assert!(!scalar_equiv(&m, &GroupElement::identity(2), 1e-9));
        assert!(!scalar_equiv(&m, &m.scaled(c(2.0, 0.0)), 1e-9));
    }

    #[test]
    fn projective_equality_ignores_scale() {
        let v = cvec(&[c(1.0, 1.0), c(0.0, 2.0), c(-3.0, 0.5)]);
        let w = v.map(|z| z * c(-0.3, 4.0));
        assert!(projectively_equal(&v, &w, 1e-12));
        let mut u = w.clone();
        u[1] += c(1e-3, 0.0);
        assert!(!projectively_equal(&v, &u, 1e-9));
    }
}
