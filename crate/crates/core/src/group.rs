//! Moduli points, Gram matrix, polar vectors, the generators and word evaluation.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{herm_inner, C64, CMatrix, CVector, GroupElement, HermitianForm, ONE, ZERO};

/// A point `(h, t)` of the parameter plane. Construction does not validate;
/// use [`ModuliPoint::checked`] or [`ModuliPoint::status`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModuliPoint {
    pub h: f64,
    pub t: f64,
}

/// Membership and degeneracy flags of a moduli point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModuliStatus {
    pub in_moduli: bool,
    /// `t = 0`: every generator is real.
    pub is_real_slice: bool,
    /// `t` on the upper boundary curve: the group preserves a complex hyperbolic plane.
    pub is_2d_slice: bool,
    /// `h < 1`, where the mirrors of I2, I3 (and I3, I4) meet at an angle.
    pub below_one: bool,
}

const SLICE_TOL: f64 = 1e-9;

impl ModuliPoint {
    pub fn new(h: f64, t: f64) -> Self {
        ModuliPoint { h, t }
    }

    /// `(sqrt 2, arccos(-7/8))`, the point on the upper boundary where the Ford
    /// domain is computed in detail.
    pub fn base_point() -> Self {
        ModuliPoint::new(2f64.sqrt(), (-7.0f64 / 8.0).acos())
    }

    /// Upper bound of `t` for a given `h`: `arccos(-(3h^2+1)/(4h^2))`, with the
    /// argument clamped to `[-1, 1]` (for `h < 1` every `t` in `[0, pi]` is allowed).
    pub fn t_max(h: f64) -> f64 {
        (-(3.0 * h * h + 1.0) / (4.0 * h * h)).clamp(-1.0, 1.0).acos()
    }

    /// The point on the upper boundary curve with this `h`.
    pub fn on_2d_slice(h: f64) -> Self {
        ModuliPoint::new(h, Self::t_max(h))
    }

    /// `D^2 = 4h^2 cos t + 3h^2 + 1`.
    pub fn d_squared(&self) -> f64 {
        4.0 * self.h * self.h * self.t.cos() + 3.0 * self.h * self.h + 1.0
    }

    /// `D`, with rounding-level negative radicands clamped to zero.
    pub fn d(&self) -> f64 {
        self.d_squared().max(0.0).sqrt()
    }

    pub fn status(&self) -> ModuliStatus {
        let h = self.h;
        let scale = 1.0 + 7.0 * h * h;
        let d2 = self.d_squared();
        let finite = h.is_finite() && self.t.is_finite();
        let in_moduli = finite
            && h >= 0.5 - 1e-12
            && self.t >= -1e-12
            && self.t <= PI + 1e-12
            && d2 >= -SLICE_TOL * scale;
        ModuliStatus {
            in_moduli,
            is_real_slice: self.t.abs() < 1e-12,
            is_2d_slice: in_moduli && d2.abs() <= SLICE_TOL * scale,
            below_one: h < 1.0,
        }
    }

    /// Return the point if it lies in the moduli space.
    pub fn checked(h: f64, t: f64) -> Result<Self> {
        let p = ModuliPoint::new(h, t);
        if p.status().in_moduli {
            Ok(p)
        } else {
            Err(Error::InvalidModuli(format!(
                "(h, t) = ({h}, {t}) is outside the moduli space (need h >= 1/2, 0 <= t <= {:.12})",
                Self::t_max(h)
            )))
        }
    }
}

/// The Gram matrix `(<n_i, n_j>)` of the four mirrors.
pub fn gram_matrix(p: &ModuliPoint) -> HermitianForm {
    let h = C64::new(p.h, 0.0);
    let e = C64::from_polar(1.0, p.t);
    let half = C64::new(0.5, 0.0);
    let m = CMatrix::from_row_slice(
        4,
        4,
        &[
            ONE, -ONE, ZERO, -e * half,
            -ONE, ONE, -h, ZERO,
            ZERO, -h, ONE, -h,
            -e.conj() * half, ZERO, -h, ONE,
        ],
    );
    HermitianForm::new(m).expect("Gram matrix is Hermitian by construction")
}

/// Polar vectors `n_1..n_4` in C^{3,1}, normalised as in the construction.
pub fn polar_vectors(p: &ModuliPoint) -> Result<[CVector; 4]> {
    if !p.status().in_moduli {
        return Err(Error::InvalidModuli(format!(
            "polar vectors need (h, t) in the moduli space, got ({}, {}); D^2 = {:.6}",
            p.h,
            p.t,
            p.d_squared()
        )));
    }
    let h = p.h;
    let em = C64::from_polar(1.0, -p.t);
    let r = |x: f64| C64::new(x, 0.0);
    let n1 = CVector::from_column_slice(&[ZERO, ONE, ZERO, ZERO]);
    let n2 = CVector::from_column_slice(&[ONE, -ONE, ZERO, ZERO]);
    let n3 = CVector::from_column_slice(&[r(-1.0 / (2.0 * h)), ZERO, ZERO, r(-h)]);
    let n4 = CVector::from_column_slice(&[
        (r(4.0 * h * h) + em) / (4.0 * h * h),
        -em * 0.5,
        r(p.d() / (2.0 * h)),
        -em * 0.5,
    ]);
    Ok([n1, n2, n3, n4])
}

/// The complex reflection `z -> -z + (1 - e^{i theta}) <z,n>/<n,n> n` as a matrix.
pub fn complex_reflection(n: &CVector, theta: f64, form: &HermitianForm) -> Result<GroupElement> {
    let nn = herm_inner(n, n, form)?;
    let scale = 1.0 + n.iter().fold(0.0f64, |a, z| a.max(z.norm_sqr()));
    if nn.re <= 1e-12 * scale {
        return Err(Error::InvalidInput(format!(
            "complex reflection needs a positive polar vector, <n,n> = {:.3e}",
            nn.re
        )));
    }
    let len = n.len();
    let coef = (ONE - C64::from_polar(1.0, theta)) / nn.re;
    // <z,n> = n^* H z, so the map is -I + coef * n (n^* H).
    let row = n.adjoint() * form.matrix();
    let m = -CMatrix::identity(len, len) + (n * row) * coef;
    Ok(GroupElement::new(m, ""))
}

/// Generator matrices for one moduli point.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub point: ModuliPoint,
    /// 2 for the PU(2,1) slice (3x3), 3 for PU(3,1) (4x4).
    pub dim: usize,
    pub form: HermitianForm,
    pub n: [CVector; 4],
    pub i: [GroupElement; 4],
    pub a: GroupElement,
    pub b: GroupElement,
    pub c: GroupElement,
    pub a_inv: GroupElement,
    pub b_inv: GroupElement,
    pub c_inv: GroupElement,
    pub d: f64,
}

/// Build I1..I4, A = I1 I2, B = I3 I1, C = I4 I1.
///
/// `dim = 2` deletes the third row and column; it is only allowed on the upper
/// boundary curve, where every generator preserves the complementary plane.
pub fn generators(p: &ModuliPoint, dim: usize) -> Result<GeneratorSet> {
    if dim != 2 && dim != 3 {
        return Err(Error::Usage(format!("dim must be 2 or 3, got {dim}")));
    }
    let status = p.status();
    if !status.in_moduli {
        return Err(Error::InvalidModuli(format!(
            "({}, {}) is outside the moduli space",
            p.h, p.t
        )));
    }
    if dim == 2 && !status.is_2d_slice {
        return Err(Error::InvalidModuli(format!(
            "dim 2 needs t = arccos(-(3h^2+1)/(4h^2)) = {:.12}, got t = {}",
            ModuliPoint::t_max(p.h),
            p.t
        )));
    }
    let form4 = HermitianForm::standard(4);
    let n4 = polar_vectors(p)?;
    let mut refl = Vec::with_capacity(4);
    for (k, n) in n4.iter().enumerate() {
        refl.push(complex_reflection(n, PI, &form4)?.with_word(format!("I{}", k + 1)));
    }
    let (form, n, i) = if dim == 3 {
        let i: [GroupElement; 4] = refl.try_into().expect("four reflections");
        (form4, n4, i)
    } else {
        let keep = [0usize, 1, 3];
        let shrink_m = |g: &GroupElement| {
            GroupElement::new(
                CMatrix::from_fn(3, 3, |r, c| g.matrix()[(keep[r], keep[c])]),
                g.word(),
            )
        };
        let shrink_v = |v: &CVector| CVector::from_fn(3, |r, _| v[keep[r]]);
        let i = [
            shrink_m(&refl[0]),
            shrink_m(&refl[1]),
            shrink_m(&refl[2]),
            shrink_m(&refl[3]),
        ];
        let n = [
            shrink_v(&n4[0]),
            shrink_v(&n4[1]),
            shrink_v(&n4[2]),
            shrink_v(&n4[3]),
        ];
        (HermitianForm::standard(3), n, i)
    };
    let a = i[0].mul(&i[1]).with_word("A");
    let b = i[2].mul(&i[0]).with_word("B");
    let c = i[3].mul(&i[0]).with_word("C");
    let a_inv = a.inverse()?.with_word("a");
    let b_inv = b.inverse()?.with_word("b");
    let c_inv = c.inverse()?.with_word("c");
    Ok(GeneratorSet {
        point: *p,
        dim,
        form,
        n,
        i,
        a,
        b,
        c,
        a_inv,
        b_inv,
        c_inv,
        d: p.d(),
    })
}

impl GeneratorSet {
    pub fn len(&self) -> usize {
        self.form.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.len())
    }

    /// Standard lift of q_inf in this dimension.
    pub fn q_inf(&self) -> CVector {
        crate::hermitian::q_inf(self.len())
    }

    fn atom(&self, atom: Atom) -> &GroupElement {
        match atom {
            Atom::A => &self.a,
            Atom::B => &self.b,
            Atom::C => &self.c,
            Atom::AInv => &self.a_inv,
            Atom::BInv => &self.b_inv,
            Atom::CInv => &self.c_inv,
            Atom::I(k) => &self.i[k],
        }
    }

    /// Evaluate a word; see [`parse_word`] for the grammar.
    pub fn eval(&self, word: &str) -> Result<GroupElement> {
        eval_word(word, self)
    }

    /// Apply the element named by `word` to q_inf.
    pub fn image_of_q_inf(&self, word: &str) -> Result<CVector> {
        Ok(self.eval(word)?.apply(&self.q_inf()))
    }
}

/// One letter of the word alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Atom {
    A,
    B,
    C,
    AInv,
    BInv,
    CInv,
    /// Reflection `I_{k+1}`.
    I(usize),
}

impl Atom {
    fn inverse(self) -> Atom {
        match self {
            Atom::A => Atom::AInv,
            Atom::B => Atom::BInv,
            Atom::C => Atom::CInv,
            Atom::AInv => Atom::A,
            Atom::BInv => Atom::B,
            Atom::CInv => Atom::C,
            Atom::I(k) => Atom::I(k),
        }
    }
}

/// Parse a word into letters with signed powers.
///
/// Grammar: letters `A B C` (lowercase = inverse) and `I1`..`I4`, each optionally
/// followed by `^n`, `^-n` or `^{n}`. Letters may be run together (`CBc`) or
/// separated by whitespace. The empty word is the identity.
pub fn parse_word(word: &str) -> Result<Vec<(Atom, i32)>> {
    let chars: Vec<char> = word.chars().collect();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let ch = chars[pos];
        if ch.is_whitespace() {
            pos += 1;
            continue;
        }
        let atom = match ch {
            'A' => Atom::A,
            'B' => Atom::B,
            'C' => Atom::C,
            'a' => Atom::AInv,
            'b' => Atom::BInv,
            'c' => Atom::CInv,
            'I' => {
                let d = chars.get(pos + 1).and_then(|c| c.to_digit(10));
                match d {
                    Some(k @ 1..=4) => {
                        pos += 1;
                        Atom::I(k as usize - 1)
                    }
                    _ => {
                        return Err(Error::Syntax {
                            pos: pos + 1,
                            msg: "expected reflection index 1-4 after 'I'".into(),
                        })
                    }
                }
            }
            other => {
                return Err(Error::Syntax {
                    pos,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        };
        pos += 1;
        let mut power = 1i32;
        if chars.get(pos) == Some(&'^') {
            pos += 1;
            let braced = chars.get(pos) == Some(&'{');
            if braced {
                pos += 1;
            }
            let start = pos;
            if matches!(chars.get(pos), Some('-') | Some('+')) {
                pos += 1;
            }
            let digits_start = pos;
            while chars.get(pos).is_some_and(|c| c.is_ascii_digit()) {
                pos += 1;
            }
            if pos == digits_start {
                return Err(Error::Syntax {
                    pos,
                    msg: "expected integer exponent".into(),
                });
            }
            let text: String = chars[start..pos].iter().collect();
            power = text.parse().map_err(|_| Error::Syntax {
                pos: start,
                msg: format!("exponent '{text}' out of range"),
            })?;
            if braced {
                if chars.get(pos) != Some(&'}') {
                    return Err(Error::Syntax {
                        pos,
                        msg: "expected '}'".into(),
                    });
                }
                pos += 1;
            }
        }
        out.push((atom, power));
    }
    Ok(out)
}

/// Left-to-right product of the letters of `word`.
pub fn eval_word(word: &str, gens: &GeneratorSet) -> Result<GroupElement> {
    let atoms = parse_word(word)?;
    let mut m = CMatrix::identity(gens.len(), gens.len());
    for (atom, power) in atoms {
        let (atom, n) = if power < 0 {
            (atom.inverse(), power.unsigned_abs())
        } else {
            (atom, power as u32)
        };
        let g = gens.atom(atom).matrix();
        for _ in 0..n {
            m = &m * g;
        }
    }
    Ok(GroupElement::new(m, word.trim()))
}

/// The word `A^k w A^-k`, written so that `parse_word` reads it back.
pub fn conjugate_by_a(k: i32, w: &str) -> String {
    match k {
        0 => w.to_string(),
        _ => format!("A^{k} {w} A^{}", -k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{max_abs, scalar_equiv};

    #[test]
    fn parse_runs_and_powers() {
        let w = parse_word("CBc").unwrap();
        assert_eq!(w, vec![(Atom::C, 1), (Atom::B, 1), (Atom::CInv, 1)]);
        let w = parse_word("A^-3 I2 C^{2}").unwrap();
        assert_eq!(w, vec![(Atom::A, -3), (Atom::I(1), 1), (Atom::C, 2)]);
        assert!(parse_word("").unwrap().is_empty());
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_word("A Q") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_word("I7") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_word("A^"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse_word("A^{2"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn t_max_clamps_below_one() {
        assert!((ModuliPoint::t_max(0.6) - PI).abs() < 1e-15);
        assert!((ModuliPoint::t_max(2f64.sqrt()) - (-7.0f64 / 8.0).acos()).abs() < 1e-15);
    }

    #[test]
    fn status_flags() {
        let s = ModuliPoint::base_point().status();
        assert!(s.in_moduli && s.is_2d_slice && !s.is_real_slice && !s.below_one);
        let s = ModuliPoint::new(1.2, 0.0).status();
        assert!(s.in_moduli && s.is_real_slice && !s.is_2d_slice);
        let s = ModuliPoint::new(0.7, 1.0).status();
        assert!(s.in_moduli && s.below_one);
        assert!(!ModuliPoint::new(0.4, 1.0).status().in_moduli);
        assert!(!ModuliPoint::new(1.5, 3.0).status().in_moduli);
    }

    #[test]
    fn dim_two_rejected_off_the_curve() {
        let err = generators(&ModuliPoint::new(1.5, 1.0), 2).unwrap_err();
        assert!(matches!(err, Error::InvalidModuli(_)));
    }

    #[test]
    fn reflection_rejects_negative_vector() {
        let h = HermitianForm::standard(3);
        let v = CVector::from_column_slice(&[ONE, ZERO, -ONE]);
        assert!(complex_reflection(&v, PI, &h).is_err());
    }

    #[test]
    fn reflection_of_n1_is_diagonal() {
        let p = ModuliPoint::new(1.3, 0.4);
        let g = generators(&p, 3).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_column_slice(&[-ONE, ONE, -ONE, -ONE]));
        assert!(max_abs(&(g.i[0].matrix() - expected)) < 1e-15);
    }

    #[test]
    fn empty_word_is_identity() {
        let g = generators(&ModuliPoint::base_point(), 2).unwrap();
        let e = eval_word("", &g).unwrap();
        assert!(scalar_equiv(&e, &g.identity(), 1e-15));
    }

    #[test]
    fn conjugate_word_roundtrip() {
        let g = generators(&ModuliPoint::base_point(), 2).unwrap();
        let w = conjugate_by_a(-2, "C B c");
        let m = eval_word(&w, &g).unwrap();
        let direct = g.a_inv.mul(&g.a_inv).mul(&g.c).mul(&g.b).mul(&g.c_inv).mul(&g.a).mul(&g.a);
        assert!(max_abs(&(m.matrix() - direct.matrix())) < 1e-12);
    }
}
