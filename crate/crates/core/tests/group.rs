use std::f64::consts::PI;

use chford::classify::{classify, eigen_order, su_normalize, IsometryKind};
use chford::group::{generators, gram_matrix, parse_word, polar_vectors, ModuliPoint};
use chford::hermitian::{box_cross, box_cross_general, herm_inner, max_abs, scalar_equiv};
use chford::{CVector, Error, HermitianForm, Tolerances, C64};
use proptest::prelude::*;

fn moduli() -> impl Strategy<Value = ModuliPoint> {
    (0.5f64..3.0, 0.0f64..1.0).prop_map(|(h, f)| ModuliPoint::new(h, f * ModuliPoint::t_max(h)))
}

fn cvec3() -> impl Strategy<Value = CVector> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3)
        .prop_map(|v| CVector::from_iterator(3, v.into_iter().map(|(a, b)| C64::new(a, b))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_preserve_the_form(p in moduli()) {
        let g = generators(&p, 3).unwrap();
        for m in g.i.iter().chain([&g.a, &g.b, &g.c]) {
            prop_assert!(m.form_defect(&g.form) < 1e-9);
        }
    }

    #[test]
    fn gram_signature_is_three_one(p in moduli()) {
        // stay off the degenerate boundary curve
        prop_assume!(p.d_squared() > 1e-3);
        let det = gram_matrix(&p).matrix().determinant().re;
        prop_assert!((det - (-0.75 * p.h * p.h - 0.25 - p.h * p.h * p.t.cos())).abs() < 1e-12);
        prop_assert_eq!(gram_matrix(&p).signature(1e-9), (3, 1, 0));
    }

    #[test]
    fn polar_vectors_realise_the_gram_matrix(p in moduli()) {
        let g = generators(&p, 3).unwrap();
        let n = polar_vectors(&p).unwrap();
        let gram = gram_matrix(&p);
        for i in 0..4 {
            for j in 0..4 {
                let x = herm_inner(&n[i], &n[j], &g.form).unwrap();
                prop_assert!((x - gram.matrix()[(j, i)]).norm() < 1e-9 || (x - gram.matrix()[(i, j)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn cross_product_is_orthogonal_to_both(x in cvec3(), y in cvec3()) {
        let h = HermitianForm::standard(3);
        let z = box_cross(&x, &y).unwrap();
        let scale = 1.0 + x.norm() * y.norm() * (x.norm() + y.norm());
        prop_assert!(herm_inner(&z, &x, &h).unwrap().norm() < 1e-12 * scale);
        prop_assert!(herm_inner(&z, &y, &h).unwrap().norm() < 1e-12 * scale);
    }

    #[test]
    fn general_cross_product_is_orthogonal(x in cvec3(), y in cvec3(), d in (0.5f64..3.0, 0.5f64..3.0)) {
        let m = chford::CMatrix::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) => C64::new(d.0, 0.0),
            (1, 1) => C64::new(d.1, 0.0),
            (2, 2) => C64::new(-1.0, 0.0),
            (0, 1) => C64::new(0.2, 0.3),
            (1, 0) => C64::new(0.2, -0.3),
            _ => C64::new(0.0, 0.0),
        });
        let h = HermitianForm::new(m).unwrap();
        let z = box_cross_general(&x, &y, &h).unwrap();
        let scale = 1.0 + 10.0 * x.norm() * y.norm() * (x.norm() + y.norm());
        prop_assert!(herm_inner(&z, &x, &h).unwrap().norm() < 1e-12 * scale);
        prop_assert!(herm_inner(&z, &y, &h).unwrap().norm() < 1e-12 * scale);
    }

    #[test]
    fn classification_is_conjugation_invariant(p in moduli(), w in "[ABCabc]{1,4}", c in "[ABC]{1,2}") {
        let g = generators(&p, 3).unwrap();
        let tol = Tolerances::default();
        let m = g.eval(&w).unwrap();
        let k = g.eval(&c).unwrap();
        let k_inv = k.inverse().unwrap();
        let conj = k.mul(&m).mul(&k_inv);
        let a = classify(&m, &tol).unwrap();
        let b = classify(&conj, &tol).unwrap();
        // rounding in the conjugate grows with the conditioning of k
        let kappa = 16.0 * max_abs(k.matrix()) * max_abs(k_inv.matrix()) * max_abs(m.matrix());
        prop_assert!((a.invariants.tau - b.invariants.tau).norm() < 1e-9 * kappa);
        prop_assert!((a.invariants.sigma - b.invariants.sigma).abs() < 1e-9 * kappa * kappa);
        // the kind only needs to agree away from the zero band
        let margin = 1e-6 * (1.0 + a.invariants.tau.norm()).powi(6);
        if a.discriminant.abs() > margin && b.discriminant.abs() > margin {
            prop_assert_eq!(a.kind, b.kind);
        }
    }

    #[test]
    fn su_normalize_has_unit_determinant(p in moduli(), w in "[ABCI1234]{1,8}") {
        prop_assume!(parse_word(&w).is_ok());
        let g = generators(&p, 3).unwrap();
        let m = su_normalize(&g.eval(&w).unwrap()).unwrap();
        prop_assert!((m.det() - C64::new(1.0, 0.0)).norm() < 1e-9);
    }
}

#[test]
fn relations_hold_on_the_real_and_complex_slices() {
    for p in [ModuliPoint::new(1.7, 0.0), ModuliPoint::on_2d_slice(1.7), ModuliPoint::base_point()] {
        for dim in [2, 3] {
            let Ok(g) = generators(&p, dim) else {
                assert_eq!(dim, 2, "4x4 generators exist everywhere");
                continue;
            };
            let id = g.identity();
            for w in ["I1I1", "I2I2", "I3I3", "I4I4", "I1I3I1I3", "I2I4I2I4", "I1I4I1I4I1I4", "B^2", "C^3", "ACAC"] {
                assert!(scalar_equiv(&g.eval(w).unwrap(), &id, 1e-9), "{w} at {p:?}, dim {dim}");
            }
        }
    }
}

#[test]
fn a_is_unipotent_and_c_has_order_three() {
    let tol = Tolerances::default();
    let g = generators(&ModuliPoint::base_point(), 3).unwrap();
    assert_eq!(classify(&g.a, &tol).unwrap().kind, IsometryKind::ParabolicUnipotent);
    let c = classify(&g.c, &tol).unwrap();
    assert_eq!(eigen_order(&c.eigenvalues, 12, tol.cluster), Some(3));
}

#[test]
fn order_six_word_at_the_corner() {
    let tol = Tolerances::default();
    let g = generators(&ModuliPoint::new(0.5, 2.0 * PI / 3.0), 3).unwrap();
    let c = classify(&g.eval("I1I4I1I2I1I4I3").unwrap(), &tol).unwrap();
    assert_eq!(c.kind, IsometryKind::RegularElliptic);
    assert_eq!(eigen_order(&c.eigenvalues, 60, tol.cluster), Some(6));
}

#[test]
fn bad_words_and_points_are_rejected() {
    let g = generators(&ModuliPoint::base_point(), 3).unwrap();
    assert!(matches!(g.eval("AB?C"), Err(Error::Syntax { pos: 2, .. })));
    assert!(matches!(g.eval("I5"), Err(Error::Syntax { .. })));
    assert!(matches!(ModuliPoint::checked(0.4, 1.0), Err(Error::InvalidModuli(_))));
    assert!(matches!(ModuliPoint::checked(1.0, 3.2), Err(Error::InvalidModuli(_))));
    assert!(ModuliPoint::checked(0.6, 3.0).is_ok());
}
