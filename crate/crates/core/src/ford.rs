//! Ford domain audits: sphere pairs, containments, ridges, sample points,
//! ridge cycles, side pairings and the nearby-parameter check.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::giraud::{
    certified_max, certified_max_with, coplanar_defect, disk_nonempty, make_chart, modulus_form, negative_components,
    restricted_slice_chart, slice_basis, span_chart, slice_factorization, solve_triple, vv_form, CertifyOptions, GiraudChart,
    angle_distance, line_intersections, LineFamily, SliceFactorization, TorusFunction, TorusTrigForm,
};
use crate::group::{conjugate_by_a, generators, GeneratorSet, ModuliPoint};
use crate::heisenberg::{
    cygan_distance, isometric_sphere, lift, membership_value, project, sphere_relation, spinal_sphere_point,
    CyganSphere, HeisenbergPoint, SphereRelation,
};
use crate::hermitian::{projective_distance, scalar_equiv_matrix, CMatrix, CVector, GroupElement, C64};
use crate::tol::Tolerances;

/// The five conjugacy families of sphere-owning words.
pub const FAMILY_WORDS: [&str; 5] = ["C", "CBC", "cBc", "cBC", "CBc"];

pub fn family_label(f: usize) -> &'static str {
    ["C", "CBC", "C^-1BC^-1", "C^-1BC", "CBC^-1"][f]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordEntry {
    pub family: usize,
    pub k: i32,
    pub word: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct WordSet {
    pub k_max: i32,
    pub words: Vec<WordEntry>,
    /// Words not in the set whose spheres coincide with a member's.
    pub aliases: Vec<(String, String)>,
}

/// `A^k w A^-k` for the five families and `|k| <= k_max`.
pub fn build_word_set(k_max: i32) -> WordSet {
    let k_max = k_max.max(0);
    let mut words = Vec::new();
    for (family, w) in FAMILY_WORDS.iter().enumerate() {
        for k in -k_max..=k_max {
            words.push(WordEntry {
                family,
                k,
                word: conjugate_by_a(k, w),
            });
        }
    }
    let aliases = if k_max >= 1 {
        vec![("c".to_string(), conjugate_by_a(-1, "C"))]
    } else {
        Vec::new()
    };
    WordSet { k_max, words, aliases }
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereEntry {
    pub entry: WordEntry,
    #[serde(skip)]
    pub element: GroupElement,
    pub sphere: CyganSphere,
    /// `g^-1(q_inf)` with the lift fixed by the matrix.
    #[serde(skip)]
    pub center_lift: CVector,
}

pub fn sphere_table(gens: &GeneratorSet, ws: &WordSet) -> Result<Vec<SphereEntry>> {
    ws.words
        .iter()
        .map(|e| {
            let g = gens.eval(&e.word)?;
            let sphere = isometric_sphere(&g)?;
            let center_lift = g.inverse()?.apply(&gens.q_inf());
            Ok(SphereEntry {
                entry: e.clone(),
                element: g,
                sphere,
                center_lift,
            })
        })
        .collect()
}

/// Unordered pair of families up to the A-action: `I(X) ∩ I(A^dk Y A^-dk)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FamilyPair {
    pub a: usize,
    pub b: usize,
    pub dk: i32,
}

impl FamilyPair {
    pub fn normalize(fa: usize, ka: i32, fb: usize, kb: i32) -> Self {
        match fa.cmp(&fb) {
            std::cmp::Ordering::Less => FamilyPair { a: fa, b: fb, dk: kb - ka },
            std::cmp::Ordering::Greater => FamilyPair { a: fb, b: fa, dk: ka - kb },
            std::cmp::Ordering::Equal => FamilyPair {
                a: fa,
                b: fb,
                dk: (kb - ka).abs(),
            },
        }
    }

    pub fn words(&self) -> (String, String) {
        (FAMILY_WORDS[self.a].to_string(), conjugate_by_a(self.dk, FAMILY_WORDS[self.b]))
    }

    pub fn label(&self) -> String {
        let second = match self.dk {
            0 => family_label(self.b).to_string(),
            k => format!("A^{k} {} A^{}", family_label(self.b), -k),
        };
        format!("I({}) & I({second})", family_label(self.a))
    }
}

impl Serialize for FamilyPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// Intersecting families whose ridges bound the domain.
pub fn expected_visible() -> Vec<FamilyPair> {
    let mut v = vec![
        FamilyPair { a: 0, b: 0, dk: 1 },
        FamilyPair { a: 0, b: 4, dk: 0 },
        FamilyPair { a: 0, b: 2, dk: 0 },
        FamilyPair { a: 0, b: 3, dk: 1 },
        FamilyPair { a: 0, b: 1, dk: 1 },
        FamilyPair { a: 1, b: 3, dk: 0 },
        FamilyPair { a: 2, b: 4, dk: 0 },
    ];
    v.sort();
    v
}

/// Intersecting families whose Giraud disks are hidden inside a third sphere.
pub fn expected_hidden() -> Vec<FamilyPair> {
    let mut v = vec![
        FamilyPair { a: 0, b: 1, dk: 0 },
        FamilyPair { a: 0, b: 3, dk: 0 },
        FamilyPair { a: 0, b: 4, dk: 1 },
        FamilyPair { a: 0, b: 2, dk: 1 },
    ];
    v.sort();
    v
}

pub fn expected_tangent() -> Vec<FamilyPair> {
    vec![FamilyPair { a: 0, b: 0, dk: 2 }]
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    pub a: String,
    pub b: String,
    pub relation: SphereRelation,
    pub gap: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairwiseAudit {
    pub pairs: usize,
    pub overlapping: Vec<FamilyPair>,
    pub tangent: Vec<FamilyPair>,
    /// Verdicts agree for `(g, g')` and `(A g A^-1, A g' A^-1)`, with gaps within 1e-9.
    pub a_equivariant: bool,
    pub max_equivariance_defect: f64,
    pub matches_expected: bool,
    pub records: Vec<PairRecord>,
}

pub fn pairwise_audit(table: &[SphereEntry], tol: &Tolerances) -> Result<PairwiseAudit> {
    let mut records = Vec::new();
    let mut verdicts = std::collections::HashMap::new();
    let mut overlapping = std::collections::BTreeSet::new();
    let mut tangent = std::collections::BTreeSet::new();
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            let (x, y) = (&table[i], &table[j]);
            let rel = sphere_relation(&x.sphere, &y.sphere, tol)?;
            let fam = FamilyPair::normalize(x.entry.family, x.entry.k, y.entry.family, y.entry.k);
            match rel.relation {
                SphereRelation::Overlapping => {
                    overlapping.insert(fam);
                }
                SphereRelation::Tangent => {
                    tangent.insert(fam);
                }
                SphereRelation::Disjoint => {}
            }
            verdicts.insert(
                (x.entry.family, x.entry.k, y.entry.family, y.entry.k),
                (rel.relation, rel.gap),
            );
            records.push(PairRecord {
                a: x.entry.word.clone(),
                b: y.entry.word.clone(),
                relation: rel.relation,
                gap: rel.gap,
                distance: rel.distance,
            });
        }
    }
    let mut equivariant = true;
    let mut defect: f64 = 0.0;
    for (&(fa, ka, fb, kb), &(rel, gap)) in &verdicts {
        if let Some(&(rel2, gap2)) = verdicts.get(&(fa, ka + 1, fb, kb + 1)) {
            defect = defect.max((gap - gap2).abs());
            if rel != rel2 {
                equivariant = false;
            }
        }
    }
    equivariant &= defect < 1e-9;
    let overlapping: Vec<FamilyPair> = overlapping.into_iter().collect();
    let tangent: Vec<FamilyPair> = tangent.into_iter().collect();
    let mut expected = expected_visible();
    expected.extend(expected_hidden());
    expected.sort();
    let matches_expected = overlapping == expected && tangent == expected_tangent();
    Ok(PairwiseAudit {
        pairs: records.len(),
        overlapping,
        tangent,
        a_equivariant: equivariant,
        max_equivariance_defect: defect,
        matches_expected,
        records,
    })
}

pub fn entry<'a>(table: &'a [SphereEntry], word: &str) -> Result<&'a SphereEntry> {
    table
        .iter()
        .find(|e| e.entry.word == word)
        .ok_or_else(|| Error::InvalidInput(format!("word '{word}' is not in the word set")))
}

/// Chart of `I(a) ∩ I(b)` through the centers `q_inf, a^-1(q_inf), b^-1(q_inf)`.
pub fn pair_chart(gens: &GeneratorSet, a: &SphereEntry, b: &SphereEntry) -> Result<GiraudChart> {
    span_chart(&gens.q_inf(), &a.center_lift, &b.center_lift, &gens.form)
}

/// `|<V, q_inf>|^2 - |<V, w^-1 q_inf>|^2`: negative exactly outside `I(w)`.
pub fn outside_form(chart: &GiraudChart, q: &CVector, center: &CVector) -> Result<TorusTrigForm> {
    Ok(modulus_form(chart, q)? - modulus_form(chart, center)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ContainmentCertificate {
    pub ridge: FamilyPair,
    pub container: Option<String>,
    /// `ratio`: max of `|<V, w^-1 q_inf>|^2` against the constant `|<V, q_inf>|^2`;
    /// `difference`: max of their difference against 0.
    pub mode: &'static str,
    pub upper_bound: f64,
    pub best_value: f64,
    pub threshold: f64,
    pub certified: bool,
    pub sample: Option<(f64, f64)>,
    pub sample_interior: bool,
}

fn screen_options() -> CertifyOptions {
    CertifyOptions {
        grid: 256,
        threshold: Some(0.0),
        ..CertifyOptions::default()
    }
}

/// Feasible sample points of a chart on a coarse grid.
fn feasible_samples(vv: &TorusTrigForm, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (r, s) = (
                -PI + 2.0 * PI * (i as f64 + 0.5) / n as f64,
                -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64,
            );
            if vv.eval(r, s) < 0.0 {
                out.push((r, s));
            }
        }
    }
    out
}

/// Spheres whose center distance to both `a` and `b` is below the radius sum.
fn neighbours<'a>(table: &'a [SphereEntry], a: &SphereEntry, b: &SphereEntry) -> Vec<&'a SphereEntry> {
    table
        .iter()
        .filter(|w| w.entry != a.entry && w.entry != b.entry)
        .filter(|w| {
            let near = |x: &SphereEntry| {
                cygan_distance(&w.sphere.center, &x.sphere.center)
                    .map(|d| d < w.sphere.radius + x.sphere.radius + 1e-9)
                    .unwrap_or(false)
            };
            near(a) && near(b)
        })
        .collect()
}

/// Certify that the Giraud disk of each hidden family lies inside a third sphere.
/// Certify that each hidden ridge lies inside a neighbouring sphere.
///
/// In the 4x4 setting the check runs on the complex plane through `q_inf` and
/// the two centers, which is the whole picture in the 3x3 case.
pub fn containment_audit(gens: &GeneratorSet, table: &[SphereEntry], hidden: &[FamilyPair]) -> Result<Vec<ContainmentCertificate>> {
    let q = gens.q_inf();
    let mut out = Vec::new();
    for fam in hidden {
        let (wa, wb) = fam.words();
        let (a, b) = (entry(table, &wa)?, entry(table, &wb)?);
        let chart = pair_chart(gens, a, b)?;
        let vv = vv_form(&chart);
        let samples = feasible_samples(&vv, 48);
        let qf = modulus_form(&chart, &q)?;
        let constant_q = qf.amplitude_sum() <= 1e-12 * qf.constant.abs().max(1.0);
        let mut cert = ContainmentCertificate {
            ridge: *fam,
            container: None,
            mode: "difference",
            upper_bound: f64::INFINITY,
            best_value: f64::NAN,
            threshold: 0.0,
            certified: false,
            sample: None,
            sample_interior: false,
        };
        for w in neighbours(table, a, b) {
            let wf = modulus_form(&chart, &w.center_lift)?;
            let inside = wf.clone() - qf.clone();
            if !samples.iter().all(|&(r, s)| inside.eval(r, s) < 0.0) {
                continue;
            }
            let (objective, threshold, mode) = if constant_q {
                (wf, qf.constant, "ratio")
            } else {
                (inside.clone(), 0.0, "difference")
            };
            let m = certified_max(&objective, &vv);
            let witness = disk_nonempty(&chart).witness;
            let sample_interior = witness.is_some_and(|(r, s)| inside.eval(r, s) < 0.0);
            cert = ContainmentCertificate {
                ridge: *fam,
                container: Some(w.entry.word.clone()),
                mode,
                upper_bound: m.upper_bound,
                best_value: m.best_value,
                threshold,
                certified: m.upper_bound < threshold,
                sample: witness,
                sample_interior,
            };
            if cert.certified && cert.sample_interior {
                break;
            }
        }
        out.push(cert);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RidgeKind {
    Empty,
    GiraudDisk,
    TwoSectors,
    TangentPoint,
    /// Geometry not matching any of the above; reported as a failure.
    Flagged,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutRecord {
    pub word: String,
    pub lines: Vec<(LineFamily, f64)>,
    pub segments: usize,
    pub branch_points: usize,
    /// Branch points that lie outside every other cutter, i.e. on the ridge boundary.
    pub visible_branch_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RidgeRecord {
    pub ridge: FamilyPair,
    pub words: (String, String),
    pub kind: RidgeKind,
    /// Components of the part of the disk outside every cutting sphere.
    pub components: usize,
    pub disjoint_from: Vec<(String, f64)>,
    pub cut_by: Vec<CutRecord>,
}

/// Classify the visible ridges, plus the tangent family.
pub fn ridge_catalog(
    gens: &GeneratorSet,
    table: &[SphereEntry],
    visible: &[FamilyPair],
    tangent: &[FamilyPair],
    tol: &Tolerances,
) -> Result<Vec<RidgeRecord>> {
    if gens.dim != 2 {
        return Err(Error::OutOfScope("torus charts need the 3x3 slice".into()));
    }
    let q = gens.q_inf();
    let mut out = Vec::new();
    for fam in tangent {
        out.push(RidgeRecord {
            ridge: *fam,
            words: fam.words(),
            kind: RidgeKind::TangentPoint,
            components: 0,
            disjoint_from: Vec::new(),
            cut_by: Vec::new(),
        });
    }
    for fam in visible {
        let (wa, wb) = fam.words();
        let (a, b) = (entry(table, &wa)?, entry(table, &wb)?);
        let chart = pair_chart(gens, a, b)?;
        let vv = vv_form(&chart);
        if !disk_nonempty(&chart).nonempty {
            out.push(RidgeRecord {
                ridge: *fam,
                words: (wa, wb),
                kind: RidgeKind::Empty,
                components: 0,
                disjoint_from: Vec::new(),
                cut_by: Vec::new(),
            });
            continue;
        }
        let mut disjoint_from = Vec::new();
        let mut cut_by = Vec::new();
        let mut cutters: Vec<TorusTrigForm> = Vec::new();
        let mut branches: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut flagged = false;
        for w in neighbours(table, a, b) {
            let f = outside_form(&chart, &q, &w.center_lift)?;
            let m = certified_max_with(&f, &vv, &screen_options());
            if m.upper_bound < 0.0 {
                disjoint_from.push((w.entry.word.clone(), m.upper_bound));
                continue;
            }
            let sol = solve_triple(&chart, &q, &w.center_lift)?;
            cut_by.push(CutRecord {
                word: w.entry.word.clone(),
                lines: sol.lines.iter().map(|l| (l.family, l.c)).collect(),
                segments: sol.segments.len(),
                branch_points: sol.branch_points.len(),
                visible_branch_points: 0,
            });
            branches.push(sol.branch_points);
            cutters.push(f);
        }
        // a curved trace only matters where no other cutter already hides it
        for (i, pts) in branches.iter().enumerate() {
            let visible = pts
                .iter()
                .filter(|&&(r, s)| {
                    cutters
                        .iter()
                        .enumerate()
                        .all(|(j, g)| j == i || g.eval(r, s) < tol.geometric)
                })
                .count();
            cut_by[i].visible_branch_points = visible;
            flagged |= visible > 0;
        }
        // sectors of a ridge may share a vertex where two segments cross
        let lines: Vec<(LineFamily, f64)> = cut_by.iter().flat_map(|c| c.lines.iter().copied()).collect();
        let mut vertices = Vec::new();
        for (i, &l1) in lines.iter().enumerate() {
            for &l2 in &lines[i + 1..] {
                vertices.extend(line_intersections(l1, l2).into_iter().filter(|&(r, s)| vv.eval(r, s) < 0.0));
            }
        }
        let region = RegionForm {
            vv: vv.clone(),
            cutters,
            vertices,
            hole: 8.0 * std::f64::consts::TAU / REGION_GRID as f64,
        };
        let components = negative_components(&region, REGION_GRID);
        let kind = if flagged {
            RidgeKind::Flagged
        } else if region.cutters.is_empty() {
            RidgeKind::GiraudDisk
        } else if components == 2 {
            RidgeKind::TwoSectors
        } else {
            RidgeKind::Flagged
        };
        out.push(RidgeRecord {
            ridge: *fam,
            words: (wa, wb),
            kind,
            components,
            disjoint_from,
            cut_by,
        });
    }
    Ok(out)
}

const REGION_GRID: usize = 256;

/// `max(vv, cutters)`, made non-negative on small disks around `vertices`.
struct RegionForm {
    vv: TorusTrigForm,
    cutters: Vec<TorusTrigForm>,
    vertices: Vec<(f64, f64)>,
    hole: f64,
}

impl TorusFunction for RegionForm {
    fn value(&self, r: f64, s: f64) -> f64 {
        if self
            .vertices
            .iter()
            .any(|&(a, b)| angle_distance(a, r).hypot(angle_distance(b, s)) < self.hole)
        {
            return 1.0;
        }
        self.cutters
            .iter()
            .fold(self.vv.eval(r, s), |m, f| m.max(f.eval(r, s)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SideFacets {
    pub side: String,
    pub ridges: Vec<(String, RidgeKind)>,
    pub sectors: usize,
}

/// Ridges on each family's side at `k = 0`, counted through the A-action.
pub fn side_facets(ridges: &[RidgeRecord]) -> Vec<SideFacets> {
    (0..FAMILY_WORDS.len())
        .map(|f| {
            let mut list = Vec::new();
            let mut sectors = 0;
            for r in ridges {
                if r.kind == RidgeKind::TangentPoint {
                    continue;
                }
                let other = if r.ridge.a == f {
                    Some(conjugate_by_a(r.ridge.dk, FAMILY_WORDS[r.ridge.b]))
                } else if r.ridge.b == f {
                    Some(conjugate_by_a(-r.ridge.dk, FAMILY_WORDS[r.ridge.a]))
                } else {
                    None
                };
                let mut push = |w: String| {
                    sectors += match r.kind {
                        RidgeKind::TwoSectors => 2,
                        RidgeKind::GiraudDisk => 1,
                        _ => 0,
                    };
                    list.push((w, r.kind));
                };
                if let Some(w) = other {
                    push(w);
                    // same family on both sides: the A-translate on the other side too
                    if r.ridge.a == r.ridge.b && r.ridge.dk != 0 {
                        push(conjugate_by_a(-r.ridge.dk, FAMILY_WORDS[f]));
                    }
                }
            }
            SideFacets {
                side: FAMILY_WORDS[f].to_string(),
                ridges: list,
                sectors,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Named charts and sample points

/// Charts of the four ridges with explicit coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedChart {
    /// `I(C) ∩ I(A^-1 C A)` through `(-q_inf, C q_inf, C^-1 q_inf)`.
    CWithCinv,
    /// `I(C^-1BC^-1) ∩ I(C)` through `(-q_inf, CBC q_inf, C^-1 q_inf)`.
    CinvBCinvWithC,
    /// `I(C^-1BC^-1) ∩ I(CBC^-1)` through `(q_inf, CBC q_inf, CBC^-1 q_inf)`.
    CinvBCinvWithCBCinv,
    /// `I(CBC^-1) ∩ I(C)` through `(q_inf, CBC^-1 q_inf, C^-1 q_inf)`.
    CBCinvWithC,
    /// `I(CBC) ∩ I(C^-1BC)` through `(q_inf, (CBC)^-1 q_inf, C^-1BC q_inf)`.
    CBCWithCinvBC,
}

pub fn named_chart(gens: &GeneratorSet, which: NamedChart) -> Result<GiraudChart> {
    let q = gens.q_inf();
    let neg = q.map(|z| -z);
    let im = |w: &str| gens.image_of_q_inf(w);
    let (p, a, b) = match which {
        NamedChart::CWithCinv => (neg, im("C")?, im("c")?),
        NamedChart::CinvBCinvWithC => (neg, im("CBC")?, im("c")?),
        NamedChart::CinvBCinvWithCBCinv => (q, im("CBC")?, im("CBc")?),
        NamedChart::CBCinvWithC => (q, im("CBc")?, im("c")?),
        NamedChart::CBCWithCinvBC => (q, im("cbc")?, im("cBC")?),
    };
    make_chart(&p, &a, &b, &gens.form)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedPoint {
    pub name: String,
    pub point: HeisenbergPoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplePointTable {
    pub reading: &'static str,
    pub points: Vec<NamedPoint>,
    pub checks: Vec<IdentityCheck>,
    pub pass: bool,
}

fn pt(x: f64, y: f64, t: f64) -> HeisenbergPoint {
    HeisenbergPoint::from_xyt(x, y, t)
}

/// Coordinates of `u_1..u_4` and `CBC(u_1)..CBC(u_4)`.
pub fn printed_u_points() -> ([HeisenbergPoint; 4], [HeisenbergPoint; 4]) {
    let (s3, s5, s6, s10, s15) = (3f64.sqrt(), 5f64.sqrt(), 6f64.sqrt(), 10f64.sqrt(), 15f64.sqrt());
    let u = [
        pt(0.25 - s5 / 4.0, s15 / 4.0 - s3 / 4.0, -s15 - 1.5 * s3),
        pt(0.25 + s5 / 4.0, s15 / 4.0 + s3 / 4.0, -s15 + 1.5 * s3),
        pt(-0.2 + s10 / 10.0, 2.0 * s15 / 5.0 + s6 / 10.0, -13.0 * s15 / 10.0 - s6 / 5.0),
        pt(-0.2 - s10 / 10.0, 2.0 * s15 / 5.0 - s6 / 10.0, -13.0 * s15 / 10.0 + s6 / 5.0),
    ];
    let cbc = [
        pt(-0.25 + s5 / 4.0, -s15 / 4.0 + s3 / 4.0, -s15 - 1.5 * s3),
        pt(-0.25 - s5 / 4.0, -(s15 / 4.0 + s3 / 4.0), -s15 + 1.5 * s3),
        pt(0.2 + s10 / 10.0, -2.0 * s15 / 5.0 + s6 / 10.0, -13.0 * s15 / 10.0 + s6 / 5.0),
        pt(0.2 - s10 / 10.0, -(2.0 * s15 / 5.0 + s6 / 10.0), -13.0 * s15 / 10.0 - s6 / 5.0),
    ];
    (u, cbc)
}

/// `w, C^-1(w), C^-1BC(w)` and `v, CBC(v), C^-1BC(v)` read as `(x, y, t)`.
pub fn printed_w_v_orbits() -> ([HeisenbergPoint; 3], [HeisenbergPoint; 3]) {
    let (s14, s15, s210) = (14f64.sqrt(), 15f64.sqrt(), 210f64.sqrt());
    let w = [
        pt(s210 / 18.0 + 1.0 / 3.0, 2.0 * s15 / 9.0 + s14 / 6.0, -17.0 * s15 / 18.0 + 5.0 * s14 / 9.0),
        pt(s210 / 54.0 - 1.0 / 9.0, -8.0 * s15 / 27.0 + s14 / 18.0, -59.0 * s15 / 54.0 - 7.0 * s14 / 9.0),
        pt(-s210 / 18.0 - 1.0 / 3.0, 4.0 * s15 / 9.0 - s14 / 6.0, -25.0 * s15 / 18.0 - 5.0 * s14 / 9.0),
    ];
    let v = [
        pt(s210 / 18.0 - 1.0 / 3.0, 4.0 * s15 / 9.0 + s14 / 6.0, -25.0 * s15 / 18.0 + 5.0 * s14 / 9.0),
        pt(-s210 / 54.0 - 1.0 / 9.0, -8.0 * s15 / 27.0 - s14 / 18.0, -59.0 * s15 / 54.0 + 7.0 * s14 / 9.0),
        pt(-s210 / 18.0 + 1.0 / 3.0, 2.0 * s15 / 9.0 - s14 / 6.0, -17.0 * s15 / 18.0 - 5.0 * s14 / 9.0),
    ];
    (w, v)
}

/// The point `V_{C^-1BC^-1, CBC^-1, C}` as a vector.
pub fn triple_point() -> CVector {
    let s15 = 15f64.sqrt();
    CVector::from_vec(vec![
        C64::new(17.0 / 16.0, -13.0 * s15 / 16.0),
        C64::new(1.25, -s15 / 4.0),
        C64::new(0.75, s15 / 4.0),
    ])
}

fn point_residual(a: &HeisenbergPoint, b: &HeisenbergPoint) -> f64 {
    let dz = a
        .z
        .iter()
        .zip(b.z.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    dz.max((a.t - b.t).abs()).max((a.u - b.u).abs())
}

fn image(g: &GroupElement, p: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    project(&g.apply(&lift(p)))
}

/// Check every displayed sample point identity at the base point.
pub fn sample_point_audit(gens: &GeneratorSet, tol: &Tolerances) -> Result<SamplePointTable> {
    if gens.dim != 2 {
        return Err(Error::OutOfScope("sample points live in the 3x3 slice".into()));
    }
    let eps = tol.identity;
    let mut checks = Vec::new();
    let mut points = Vec::new();
    let mut check = |name: String, residual: f64| {
        checks.push(IdentityCheck {
            pass: residual < eps,
            name,
            residual,
        });
    };
    let el = |w: &str| gens.eval(w);
    let sphere = |w: &str| -> Result<CyganSphere> { isometric_sphere(&gens.eval(w)?) };

    // u_i from the chart of I(CBC) ∩ I(C^-1BC)
    let (u, cbc_u) = printed_u_points();
    let uc = named_chart(gens, NamedChart::CBCWithCinvBC)?;
    let at = (2.0 * 6f64.sqrt()).atan();
    let params = [(0.0, PI / 3.0), (0.0, -PI / 3.0), (at, at), (-at, -at)];
    for (i, (&(r, s), p)) in params.iter().zip(u.iter()).enumerate() {
        let name = format!("u{}", i + 1);
        let from_chart = project(&uc.vector(r, s))?;
        check(format!("{name} = V({r:.6}, {s:.6}) on the I(CBC)/I(C^-1BC) chart"), point_residual(&from_chart, p));
        for w in ["CBC", "cBC"] {
            check(format!("{name} on I({w})"), membership_value(p, &sphere(w)?).abs());
        }
        points.push(NamedPoint {
            name,
            point: p.clone(),
        });
    }
    let cinv_bc = el("cBC")?;
    for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
        let img = image(&cinv_bc, &u[i])?;
        check(format!("C^-1BC(u{}) = u{}", i + 1, j + 1), point_residual(&img, &u[j]));
    }
    let cbc = el("CBC")?;
    for i in 0..4 {
        let img = image(&cbc, &u[i])?;
        check(format!("CBC(u{}) printed", i + 1), point_residual(&img, &cbc_u[i]));
        points.push(NamedPoint {
            name: format!("CBC(u{})", i + 1),
            point: cbc_u[i].clone(),
        });
    }
    // CBC(u_i) in the I(C^-1BC^-1) ∩ I(C) chart
    let c412 = named_chart(gens, NamedChart::CinvBCinvWithC)?;
    let expect412 = [(PI, 4.0 * PI / 3.0), (PI, 2.0 * PI / 3.0), (PI - at, PI), (PI + at, PI)];
    for i in 0..4 {
        let (r, s, defect) = c412.coordinates_of(&lift(&cbc_u[i]))?;
        let (er, es) = expect412[i];
        let res = defect
            .max(crate::giraud::angle_distance(r, er))
            .max(crate::giraud::angle_distance(s, es));
        check(format!("CBC(u{}) at chart point ({er:.6}, {es:.6})", i + 1), res);
    }

    // w and v orbits
    let (w, v) = printed_w_v_orbits();
    let c_inv = el("c")?;
    check("C^-1(w) printed".into(), point_residual(&image(&c_inv, &w[0])?, &w[1]));
    check("C^-1BC(w) printed".into(), point_residual(&image(&cinv_bc, &w[0])?, &w[2]));
    check("CBC(v) printed".into(), point_residual(&image(&cbc, &v[0])?, &v[1]));
    check("C^-1BC(v) printed".into(), point_residual(&image(&cinv_bc, &v[0])?, &v[2]));
    for wd in ["cBC", "c"] {
        check(format!("w on I({wd})"), membership_value(&w[0], &sphere(wd)?).abs());
    }
    for wd in ["cBC", "CBC"] {
        check(format!("v on I({wd})"), membership_value(&v[0], &sphere(wd)?).abs());
    }
    for (name, p) in ["w", "C^-1(w)", "C^-1BC(w)"].iter().zip(w.iter()) {
        points.push(NamedPoint {
            name: name.to_string(),
            point: p.clone(),
        });
    }
    for (name, p) in ["v", "CBC(v)", "C^-1BC(v)"].iter().zip(v.iter()) {
        points.push(NamedPoint {
            name: name.to_string(),
            point: p.clone(),
        });
    }

    // the triple point in three charts
    let tp = triple_point();
    for (which, (r, s), label) in [
        (NamedChart::CinvBCinvWithC, (PI, PI), "(pi, pi) on the I(C^-1BC^-1)/I(C) chart"),
        (NamedChart::CinvBCinvWithCBCinv, (0.0, 0.0), "(0, 0) on the I(C^-1BC^-1)/I(CBC^-1) chart"),
        (NamedChart::CBCinvWithC, (0.0, 0.0), "(0, 0) on the I(CBC^-1)/I(C) chart"),
    ] {
        let ch = named_chart(gens, which)?;
        let vtx = ch.vector(r, s);
        check(format!("triple point = {label}"), projective_distance(&vtx, &tp));
    }

    // u5 on the boundary of I(C) ∩ I(A^-1CA) and its images
    let c411 = named_chart(gens, NamedChart::CWithCinv)?;
    let vv411 = vv_form(&c411);
    let u5 = (PI, PI - 0.25f64.acos());
    let u5v = c411.vector(u5.0, u5.1);
    let scale = vv411.max_coefficient();
    check("u5 on the boundary circle".into(), vv411.eval(u5.0, u5.1).abs() / scale);
    for wd in ["C", "c"] {
        let img = el(wd)?.apply(&u5v);
        let (r, s, defect) = c411.coordinates_of(&img)?;
        let res = defect.max(vv411.eval(r, s).abs() / scale);
        check(format!("{wd}(u5) on the same boundary circle"), res);
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(SamplePointTable {
        reading: "(x, y, t) with z = x + iy",
        points,
        checks,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Ridge cycles and side pairings

/// The three points `q_inf, X^-1 q_inf, Y^-1 q_inf` spanning `s(X) ∩ s(Y)`.
pub fn ridge_triple(gens: &GeneratorSet, x: &str, y: &str) -> Result<[CVector; 3]> {
    let q = gens.q_inf();
    Ok([
        q.clone(),
        gens.eval(x)?.inverse()?.apply(&q),
        gens.eval(y)?.inverse()?.apply(&q),
    ])
}

/// Largest distance from a point of one triple to the nearest point of the other.
pub fn triple_set_distance(a: &[CVector; 3], b: &[CVector; 3]) -> f64 {
    let one_way = |a: &[CVector; 3], b: &[CVector; 3]| {
        a.iter()
            .map(|x| b.iter().map(|y| projective_distance(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

fn map_triple(g: &GroupElement, t: &[CVector; 3]) -> [CVector; 3] {
    [g.apply(&t[0]), g.apply(&t[1]), g.apply(&t[2])]
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleStep {
    pub ridge: (String, String),
    pub pairing: String,
    /// Distance between the mapped triple and the next ridge's triple.
    pub triple_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleRecord {
    pub name: String,
    pub steps: Vec<CycleStep>,
    pub composed: String,
    pub relation: String,
    /// The composed map raised to this power is the identity.
    pub power: u32,
    pub length: usize,
    pub expected_length: usize,
    pub relation_defect: f64,
    pub pass: bool,
}

struct CycleSpec {
    name: &'static str,
    ridges: &'static [(&'static str, &'static str)],
    pairings: &'static [&'static str],
    relation: &'static str,
    power: u32,
}

const CYCLES: [CycleSpec; 6] = [
    CycleSpec {
        name: "(1) s(C) & s(A^-1CA)",
        ridges: &[("C", "aCA")],
        pairings: &["C"],
        relation: "C^3",
        power: 3,
    },
    CycleSpec {
        name: "(2) s(C^-1BC) & s(C^-1)",
        ridges: &[("cBC", "c"), ("C", "cBc"), ("CBC", "cBC")],
        pairings: &["c", "cBc", "cBC"],
        relation: "B^2",
        power: 1,
    },
    CycleSpec {
        name: "(3) s(C^-1BC) & s(CBC)",
        ridges: &[("cBC", "CBC"), ("cBc", "C"), ("c", "cBC")],
        pairings: &["CBC", "C", "cBC"],
        relation: "B^2",
        power: 1,
    },
    CycleSpec {
        name: "(4) s(CBC^-1) & s(C)",
        ridges: &[("CBc", "C"), ("c", "CBC"), ("cBc", "CBc")],
        pairings: &["C", "CBC", "CBc"],
        relation: "B^2",
        power: 1,
    },
    CycleSpec {
        name: "(5) s(C^-1BC^-1) & s(CBC^-1)",
        ridges: &[("cBc", "CBc"), ("CBc", "C"), ("c", "CBC")],
        pairings: &["CBc", "C", "CBC"],
        relation: "B^2",
        power: 1,
    },
    CycleSpec {
        name: "(6) s(ACA^-1) & s(C)",
        ridges: &[("ACa", "C"), ("c", "aaCAA"), ("C", "aCA"), ("C", "aCA")],
        pairings: &["C", "A", "C", "A"],
        relation: "(AC)^2",
        power: 1,
    },
];

fn identity_defect(m: &CMatrix, tol: f64) -> (bool, f64) {
    let id = CMatrix::identity(m.nrows(), m.ncols());
    let ok = scalar_equiv_matrix(m, &id, tol);
    // size of the non-scalar part, normalized by the largest entry
    let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let lambda = m[(0, 0)];
    let defect = (m - id * lambda).iter().fold(0.0f64, |a, z| a.max(z.norm())) / scale.max(1e-300);
    (ok, defect)
}

/// Run the six ridge cycles: every step maps ridge triples onto each other and
/// the composed map is the identity up to scalar.
pub fn cycle_audit(gens: &GeneratorSet, tol: &Tolerances) -> Result<Vec<CycleRecord>> {
    let mut out = Vec::new();
    for spec in &CYCLES {
        let m = spec.ridges.len();
        let triples: Vec<[CVector; 3]> = spec
            .ridges
            .iter()
            .map(|(x, y)| ridge_triple(gens, x, y))
            .collect::<Result<_>>()?;
        let mut steps = Vec::new();
        let mut composed = gens.identity();
        let mut first_return = None;
        for (i, (&(x, y), &p)) in spec.ridges.iter().zip(spec.pairings).enumerate() {
            let g = gens.eval(p)?;
            let mapped = map_triple(&g, &triples[i]);
            let res = triple_set_distance(&mapped, &triples[(i + 1) % m]);
            steps.push(CycleStep {
                ridge: (x.to_string(), y.to_string()),
                pairing: p.to_string(),
                triple_residual: res,
            });
            composed = g.mul(&composed);
            let back = map_triple(&composed, &triples[0]);
            if first_return.is_none() && triple_set_distance(&back, &triples[0]) < tol.identity {
                first_return = Some(i + 1);
            }
        }
        let powered = composed.pow(spec.power as i32)?;
        let (ok, defect) = identity_defect(powered.matrix(), tol.identity);
        let steps_ok = steps.iter().all(|s| s.triple_residual < tol.identity);
        let length = first_return.unwrap_or(0);
        out.push(CycleRecord {
            name: spec.name.to_string(),
            composed: spec.pairings.iter().rev().copied().collect::<Vec<_>>().join(" "),
            relation: spec.relation.to_string(),
            power: spec.power,
            length,
            expected_length: m,
            relation_defect: defect,
            pass: ok && steps_ok && length == m,
            steps,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingCheck {
    pub map: String,
    pub from: (String, String),
    pub to: (String, String),
    pub residual: f64,
    pub pass: bool,
}

const PAIRINGS: [(&str, (&str, &str), (&str, &str)); 9] = [
    ("AC", ("C", "ACa"), ("C", "aCA")),
    ("AC", ("C", "ACBCa"), ("C", "CBc")),
    ("AC", ("C", "AcBCa"), ("C", "cBc")),
    ("CBC", ("CBC", "cBC"), ("cBc", "C")),
    ("CBC", ("CBC", "aCA"), ("cBc", "CBc")),
    ("cBC", ("cBC", "aCA"), ("cBC", "CBC")),
    ("cBC", ("cBC", "CBC"), ("cBC", "aCA")),
    ("CBc", ("CBc", "C"), ("CBc", "cBc")),
    ("CBc", ("CBc", "cBc"), ("CBc", "C")),
];

/// Ridge-to-ridge correspondences of the side pairings, by the triple criterion.
pub fn side_pairing_audit(gens: &GeneratorSet, tol: &Tolerances) -> Result<Vec<PairingCheck>> {
    PAIRINGS
        .iter()
        .map(|&(map, from, to)| {
            let g = gens.eval(map)?;
            let a = map_triple(&g, &ridge_triple(gens, from.0, from.1)?);
            let b = ridge_triple(gens, to.0, to.1)?;
            let residual = triple_set_distance(&a, &b);
            Ok(PairingCheck {
                map: map.to_string(),
                from: (from.0.to_string(), from.1.to_string()),
                to: (to.0.to_string(), to.1.to_string()),
                residual,
                pass: residual < tol.identity,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub relation: String,
    pub defect: f64,
    pub pass: bool,
}

/// Defining relations of the group, each checked up to scalar.
pub fn relation_audit(gens: &GeneratorSet, tol: &Tolerances) -> Result<Vec<RelationCheck>> {
    let rels = [
        "I1^2", "I2^2", "I3^2", "I4^2", "(I1I3)^2", "(I2I4)^2", "(I1I4)^3", "B^2", "C^3", "(AC)^2",
    ];
    let words = [
        "I1 I1", "I2 I2", "I3 I3", "I4 I4", "I1 I3 I1 I3", "I2 I4 I2 I4", "I1 I4 I1 I4 I1 I4", "B B", "C C C",
        "A C A C",
    ];
    rels.iter()
        .zip(words)
        .map(|(r, w)| {
            let m = gens.eval(w)?;
            let (ok, defect) = identity_defect(m.matrix(), tol.identity);
            Ok(RelationCheck {
                relation: r.to_string(),
                defect,
                pass: ok,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, Serialize)]
pub struct Parameters {
    pub h: f64,
    pub t: f64,
    pub k_max: i32,
    pub dim: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize)]
pub struct FullReport {
    pub parameters: Parameters,
    pub word_set: WordSet,
    pub relations: Vec<RelationCheck>,
    pub pairwise: PairwiseAudit,
    pub containments: Vec<ContainmentCertificate>,
    pub ridges: Vec<RidgeRecord>,
    pub sides: Vec<SideFacets>,
    pub sample_points: SamplePointTable,
    pub cycles: Vec<CycleRecord>,
    pub side_pairings: Vec<PairingCheck>,
    pub failures: Vec<String>,
    pub verdict: bool,
}

fn push_if(failures: &mut Vec<String>, ok: bool, msg: impl Into<String>) {
    if !ok {
        failures.push(msg.into());
    }
}

/// Every audit on the 3x3 slice at one parameter point.
pub fn full_audit(p: &ModuliPoint, k_max: i32, tol: &Tolerances) -> Result<FullReport> {
    let gens = generators(p, 2)?;
    let ws = build_word_set(k_max);
    let table = sphere_table(&gens, &ws)?;
    let relations = relation_audit(&gens, tol)?;
    let pairwise = pairwise_audit(&table, tol)?;
    let containments = containment_audit(&gens, &table, &expected_hidden())?;
    let ridges = ridge_catalog(&gens, &table, &expected_visible(), &expected_tangent(), tol)?;
    let sides = side_facets(&ridges);
    let sample_points = sample_point_audit(&gens, tol)?;
    let cycles = cycle_audit(&gens, tol)?;
    let side_pairings = side_pairing_audit(&gens, tol)?;

    let mut failures = Vec::new();
    for r in &relations {
        push_if(&mut failures, r.pass, format!("relation {} fails", r.relation));
    }
    push_if(&mut failures, pairwise.matches_expected, "sphere intersection pattern differs from the expected families");
    push_if(&mut failures, pairwise.a_equivariant, "pairwise verdicts are not A-equivariant");
    for c in &containments {
        push_if(
            &mut failures,
            c.certified && c.sample_interior,
            format!("containment of {} not certified", c.ridge.label()),
        );
    }
    for r in &ridges {
        push_if(&mut failures, r.kind != RidgeKind::Flagged && r.kind != RidgeKind::Empty, format!("ridge {} flagged", r.ridge.label()));
    }
    push_if(&mut failures, sample_points.pass, "sample point identities fail");
    for c in &cycles {
        push_if(&mut failures, c.pass, format!("cycle {} fails", c.name));
    }
    for s in &side_pairings {
        push_if(&mut failures, s.pass, format!("{} does not map {:?} to {:?}", s.map, s.from, s.to));
    }
    Ok(FullReport {
        parameters: Parameters {
            h: p.h,
            t: p.t,
            k_max: ws.k_max,
            dim: 2,
            tolerances: *tol,
        },
        word_set: ws,
        relations,
        pairwise,
        containments,
        ridges,
        sides,
        sample_points,
        cycles,
        side_pairings,
        verdict: failures.is_empty(),
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceLines {
    pub lines: Vec<(LineFamily, f64)>,
    pub expected: bool,
    pub branch_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeighborhoodReport {
    pub parameters: Parameters,
    pub relations: Vec<RelationCheck>,
    pub pairwise: PairwiseAudit,
    pub containments: Vec<ContainmentCertificate>,
    pub coplanar_defect: f64,
    pub slice_lines: SliceLines,
    pub slice_factorization: SliceFactorization,
    pub cycles: Vec<CycleRecord>,
    pub side_pairings: Vec<PairingCheck>,
    pub failures: Vec<String>,
    pub verdict: bool,
}

fn has_line(lines: &[(LineFamily, f64)], fam: LineFamily, c: f64) -> bool {
    lines
        .iter()
        .any(|&(f, x)| f == fam && crate::giraud::angle_distance(x, c) < 1e-9)
}

/// The checks used for nearby parameters, in the 4x4 setting. Requires `h > 1`.
pub fn neighborhood_audit(p: &ModuliPoint, k_max: i32, tol: &Tolerances) -> Result<NeighborhoodReport> {
    if !p.status().in_moduli {
        return Err(Error::InvalidModuli(format!("({}, {}) is outside the moduli space", p.h, p.t)));
    }
    if p.h <= 1.0 {
        return Err(Error::InvalidModuli(format!(
            "the nearby-parameter audit needs h > 1, got ({}, {})",
            p.h, p.t
        )));
    }
    let gens = generators(p, 3)?;
    let ws = build_word_set(k_max);
    let table = sphere_table(&gens, &ws)?;
    let relations = relation_audit(&gens, tol)?;
    let pairwise = pairwise_audit(&table, tol)?;
    let containments = containment_audit(&gens, &table, &expected_hidden())?;
    let coplanar = coplanar_defect(p)?;
    let chart = restricted_slice_chart(p)?;
    let e = slice_basis(p)?;
    let sol = solve_triple(&chart, &e[0], &e[3])?;
    let lines: Vec<(LineFamily, f64)> = sol.lines.iter().map(|l| (l.family, l.c)).collect();
    let expected = lines.len() == 3
        && has_line(&lines, LineFamily::R, PI)
        && has_line(&lines, LineFamily::S, PI)
        && has_line(&lines, LineFamily::RMinusS, PI);
    let factor = slice_factorization(p, &chart)?;
    let cycles = cycle_audit(&gens, tol)?;
    let side_pairings = side_pairing_audit(&gens, tol)?;

    let mut failures = Vec::new();
    for r in &relations {
        push_if(&mut failures, r.pass, format!("relation {} fails", r.relation));
    }
    push_if(&mut failures, pairwise.matches_expected, "sphere intersection pattern changed");
    push_if(&mut failures, pairwise.a_equivariant, "pairwise verdicts are not A-equivariant");
    for c in &containments {
        push_if(
            &mut failures,
            c.certified && c.sample_interior,
            format!("containment of {} not certified", c.ridge.label()),
        );
    }
    let scale = e.iter().map(|v| v.norm()).fold(1.0, f64::max);
    push_if(&mut failures, coplanar < 1e-12 * scale, "the four centers are not coplanar");
    push_if(&mut failures, expected && sol.branch_points.is_empty(), "slice triple intersection is not the three lines");
    push_if(
        &mut failures,
        factor.q_inf_max_rel_defect < tol.identity
            && factor.e4_max_rel_defect < tol.identity
            && (factor.vv_pi_zero - factor.vv_pi_zero_expected).abs() < tol.identity * factor.vv_pi_zero_expected.abs().max(1.0)
            && factor.vv_pi_zero < 0.0,
        "slice factorizations fail",
    );
    for c in &cycles {
        push_if(&mut failures, c.pass, format!("cycle {} fails", c.name));
    }
    for s in &side_pairings {
        push_if(&mut failures, s.pass, format!("{} does not map {:?} to {:?}", s.map, s.from, s.to));
    }
    Ok(NeighborhoodReport {
        parameters: Parameters {
            h: p.h,
            t: p.t,
            k_max: ws.k_max,
            dim: 3,
            tolerances: *tol,
        },
        relations,
        pairwise,
        containments,
        coplanar_defect: coplanar,
        slice_lines: SliceLines {
            lines,
            expected,
            branch_points: sol.branch_points.len(),
        },
        slice_factorization: factor,
        cycles,
        side_pairings,
        verdict: failures.is_empty(),
        failures,
    })
}

// ---------------------------------------------------------------------------
// Tangency of I(B) and I(C) along the slice curve

/// `d(centers) - (r_B + r_C)` on the slice curve at `h`.
pub fn center_gap(h: f64) -> Result<f64> {
    let gens = generators(&ModuliPoint::on_2d_slice(h), 2)?;
    let sb = isometric_sphere(&gens.b)?;
    let sc = isometric_sphere(&gens.c)?;
    Ok(cygan_distance(&sb.center, &sc.center)? - (sb.radius + sc.radius))
}

/// `max over I(B) of |<x, C^-1 q_inf>| - |<x, q_inf>|` for standard lifts: negative
/// while `I(B)` lies inside `I(C)`, zero at internal tangency.
pub fn internal_tangency(h: f64) -> Result<f64> {
    let gens = generators(&ModuliPoint::on_2d_slice(h), 2)?;
    let sb = isometric_sphere(&gens.b)?;
    let center_c = gens.c.inverse()?.apply(&gens.q_inf());
    let form = &gens.form;
    let g = |phi: f64, psi: f64| -> f64 {
        let x = lift(&spinal_sphere_point(&sb, phi, psi));
        let a = crate::hermitian::herm_inner(&x, &center_c, form).expect("3x3").norm();
        let b = crate::hermitian::herm_inner(&x, &gens.q_inf(), form).expect("3x3").norm();
        a - b
    };
    let (n, m) = (96, 192);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=n {
        let phi = -PI / 2.0 + PI * i as f64 / n as f64;
        for j in 0..m {
            let psi = 2.0 * PI * j as f64 / m as f64;
            let v = g(phi, psi);
            if v > best.0 {
                best = (v, phi, psi);
            }
        }
    }
    let (mut dphi, mut dpsi) = (PI / n as f64, 2.0 * PI / m as f64);
    for _ in 0..40 {
        let (_, p0, s0) = best;
        for i in -2..=2 {
            for j in -2..=2 {
                let phi = (p0 + i as f64 * dphi / 2.0).clamp(-PI / 2.0, PI / 2.0);
                let psi = s0 + j as f64 * dpsi / 2.0;
                let v = g(phi, psi);
                if v > best.0 {
                    best = (v, phi, psi);
                }
            }
        }
        dphi /= 2.0;
        dpsi /= 2.0;
    }
    Ok(best.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct TangencyScan {
    pub h1: f64,
    pub bracket: (f64, f64),
    pub center_gap_at_h1: f64,
}

/// Bisect the internal tangency function of `I(B)` and `I(C)` on `[lo, hi]`.
pub fn tangency_scan_in(lo: f64, hi: f64) -> Result<TangencyScan> {
    let (mut a, mut b) = (lo, hi);
    let fa = internal_tangency(a)?;
    let fb = internal_tangency(b)?;
    if !(fa.is_finite() && fb.is_finite()) || (fa > 0.0) == (fb > 0.0) {
        return Err(Error::NoSignChange(format!(
            "tangency function has the same sign at h = {lo} ({fa:.3e}) and h = {hi} ({fb:.3e})"
        )));
    }
    let a_positive = fa > 0.0;
    while b - a > 1e-10 {
        let m = 0.5 * (a + b);
        if (internal_tangency(m)? > 0.0) == a_positive {
            a = m;
        } else {
            b = m;
        }
    }
    let h1 = 0.5 * (a + b);
    Ok(TangencyScan {
        h1,
        bracket: (lo, hi),
        center_gap_at_h1: center_gap(h1)?,
    })
}

pub fn tangency_scan() -> Result<TangencyScan> {
    tangency_scan_in(1.1, 1.6)
}
