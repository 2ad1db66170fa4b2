use chford::ford::{full_audit, neighborhood_audit, RidgeKind};
use chford::group::ModuliPoint;
use chford::{Error, Tolerances};

#[test]
fn full_audit_passes_at_the_base_point() {
    let tol = Tolerances::default();
    let r = full_audit(&ModuliPoint::base_point(), 5, &tol).unwrap();
    assert!(r.verdict, "{:?}", r.failures);
    assert!(r.failures.is_empty());
    let count = |k: RidgeKind| r.ridges.iter().filter(|x| x.kind == k).count();
    assert_eq!(count(RidgeKind::GiraudDisk), 1);
    assert_eq!(count(RidgeKind::TwoSectors), 6);
    assert_eq!(count(RidgeKind::TangentPoint), 1);
    assert_eq!(count(RidgeKind::Flagged), 0);
    assert!(r.sample_points.checks.iter().all(|c| c.pass));
}

#[test]
fn reports_are_deterministic() {
    let tol = Tolerances::default();
    let p = ModuliPoint::base_point();
    let a = serde_json::to_string(&full_audit(&p, 3, &tol).unwrap()).unwrap();
    let b = serde_json::to_string(&full_audit(&p, 3, &tol).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn neighborhood_audit_passes_near_the_base_point() {
    let tol = Tolerances::default();
    let base = ModuliPoint::base_point();
    let r = neighborhood_audit(&ModuliPoint::new(base.h + 0.02, base.t - 0.02), 5, &tol).unwrap();
    assert!(r.verdict, "{:?}", r.failures);
    // the four points stay coplanar off the slice too
    assert!(r.coplanar_defect < 1e-9);
}

#[test]
fn neighborhood_audit_rejects_bad_points() {
    let tol = Tolerances::default();
    assert!(matches!(
        neighborhood_audit(&ModuliPoint::new(0.6, 3.0), 3, &tol),
        Err(Error::InvalidModuli(_))
    ));
    assert!(matches!(
        neighborhood_audit(&ModuliPoint::new(0.3, 1.0), 3, &tol),
        Err(Error::InvalidModuli(_))
    ));
}
