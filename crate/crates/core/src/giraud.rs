//! Giraud disks in spinal coordinates: chart construction, trigonometric forms
//! on the torus, certified maxima, triple intersections and boundary arcs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{generators, ModuliPoint};
use crate::hermitian::{
    box_cross_general, herm_inner, serialize_opt_matrix, serialize_vector, serialize_vectors, C64, CMatrix, CVector,
    HermitianForm, ONE,
};

const TAU: f64 = 2.0 * PI;

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Round angles within 1e-12 of a multiple of `pi/2` onto it.
pub fn snap_angle(x: f64) -> f64 {
    let k = (x / (PI / 2.0)).round();
    if (x - k * PI / 2.0).abs() < 1e-12 {
        wrap_angle(k * PI / 2.0)
    } else {
        x
    }
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Two-argument arctangent with range `(-pi, pi]`.
pub fn arctan2(y: f64, x: f64) -> f64 {
    let a = y.atan2(x);
    if a == -PI {
        PI
    } else {
        a
    }
}

// ---------------------------------------------------------------------------
// Trigonometric forms

/// `cos_coef * cos(m r + n s) + sin_coef * sin(m r + n s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrigTerm {
    pub m: i32,
    pub n: i32,
    pub cos: f64,
    pub sin: f64,
}

impl TrigTerm {
    pub fn amplitude(&self) -> f64 {
        self.cos.hypot(self.sin)
    }
}

/// Cosines and sines of a torus point, for evaluating several terms at once.
#[derive(Debug, Clone, Copy)]
pub struct Angles {
    pub r: f64,
    pub s: f64,
    cr: f64,
    sr: f64,
    cs: f64,
    ss: f64,
}

impl Angles {
    pub fn new(r: f64, s: f64) -> Self {
        let (sr, cr) = r.sin_cos();
        let (ss, cs) = s.sin_cos();
        Angles { r, s, cr, sr, cs, ss }
    }

    fn from_parts(r: (f64, f64, f64), s: (f64, f64, f64)) -> Self {
        Angles {
            r: r.0,
            s: s.0,
            cr: r.1,
            sr: r.2,
            cs: s.1,
            ss: s.2,
        }
    }

    /// `(cos, sin)` of `m r + n s`.
    #[inline]
    fn term(&self, m: i32, n: i32) -> (f64, f64) {
        match (m, n) {
            (1, 0) => (self.cr, self.sr),
            (0, 1) => (self.cs, self.ss),
            (1, 1) => (self.cr * self.cs - self.sr * self.ss, self.sr * self.cs + self.cr * self.ss),
            (1, -1) => (self.cr * self.cs + self.sr * self.ss, self.sr * self.cs - self.cr * self.ss),
            _ => {
                let (sn, cs) = (m as f64 * self.r + n as f64 * self.s).sin_cos();
                (cs, sn)
            }
        }
    }
}

/// Real trigonometric polynomial on the torus `(r, s)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TorusTrigForm {
    pub constant: f64,
    pub terms: Vec<TrigTerm>,
}

impl TorusTrigForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        TorusTrigForm {
            constant: c,
            terms: Vec::new(),
        }
    }

    /// Build from `(m, n, cos_coef, sin_coef)` tuples.
    pub fn from_terms(constant: f64, terms: &[(i32, i32, f64, f64)]) -> Self {
        let mut f = Self::constant(constant);
        for &(m, n, a, b) in terms {
            f.add_term(m, n, a, b);
        }
        f
    }

    /// Add a term, folding `(m, n)` into the canonical half-plane.
    pub fn add_term(&mut self, m: i32, n: i32, a: f64, b: f64) {
        if m == 0 && n == 0 {
            self.constant += a;
            return;
        }
        let (m, n, b) = if m < 0 || (m == 0 && n < 0) {
            (-m, -n, -b)
        } else {
            (m, n, b)
        };
        if let Some(t) = self.terms.iter_mut().find(|t| t.m == m && t.n == n) {
            t.cos += a;
            t.sin += b;
        } else {
            self.terms.push(TrigTerm { m, n, cos: a, sin: b });
            self.terms.sort_by_key(|t| (t.m, t.n));
        }
    }

    /// `(cos, sin)` coefficients of frequency `(m, n)` in canonical orientation.
    pub fn coefficient(&self, m: i32, n: i32) -> (f64, f64) {
        if m == 0 && n == 0 {
            return (self.constant, 0.0);
        }
        let (mm, nn, flip) = if m < 0 || (m == 0 && n < 0) {
            (-m, -n, -1.0)
        } else {
            (m, n, 1.0)
        };
        self.terms
            .iter()
            .find(|t| t.m == mm && t.n == nn)
            .map(|t| (t.cos, flip * t.sin))
            .unwrap_or((0.0, 0.0))
    }

    pub fn eval(&self, r: f64, s: f64) -> f64 {
        self.eval_at(&Angles::new(r, s))
    }

    pub fn eval_at(&self, a: &Angles) -> f64 {
        let mut v = self.constant;
        for t in &self.terms {
            let (cs, sn) = a.term(t.m, t.n);
            v += t.cos * cs + t.sin * sn;
        }
        v
    }

    pub fn gradient(&self, r: f64, s: f64) -> (f64, f64) {
        let (_, gr, gs) = self.eval_with_gradient(r, s);
        (gr, gs)
    }

    /// Value and gradient in one pass.
    pub fn eval_with_gradient(&self, r: f64, s: f64) -> (f64, f64, f64) {
        self.eval_with_gradient_at(&Angles::new(r, s))
    }

    pub fn eval_with_gradient_at(&self, a: &Angles) -> (f64, f64, f64) {
        let (mut v, mut gr, mut gs) = (self.constant, 0.0, 0.0);
        for t in &self.terms {
            let (cs, sn) = a.term(t.m, t.n);
            v += t.cos * cs + t.sin * sn;
            let d = -t.cos * sn + t.sin * cs;
            gr += t.m as f64 * d;
            gs += t.n as f64 * d;
        }
        (v, gr, gs)
    }

    pub fn amplitude_sum(&self) -> f64 {
        self.terms.iter().map(TrigTerm::amplitude).sum()
    }

    /// Coefficient-sum lower bound `c - sum |amplitude|`.
    pub fn lower_bound(&self) -> f64 {
        self.constant - self.amplitude_sum()
    }

    pub fn upper_bound(&self) -> f64 {
        self.constant + self.amplitude_sum()
    }

    /// Global bounds on `|df/dr|` and `|df/ds|`.
    pub fn lipschitz(&self) -> (f64, f64) {
        self.terms.iter().fold((0.0, 0.0), |(a, b), t| {
            let amp = t.amplitude();
            (a + t.m.abs() as f64 * amp, b + t.n.abs() as f64 * amp)
        })
    }

    /// Global bounds on `|f_rr|`, `|f_rs|`, `|f_ss|`.
    pub fn curvature(&self) -> (f64, f64, f64) {
        self.terms.iter().fold((0.0, 0.0, 0.0), |(a, b, c), t| {
            let amp = t.amplitude();
            let (m, n) = (t.m as f64, t.n as f64);
            (a + m * m * amp, b + (m * n).abs() * amp, c + n * n * amp)
        })
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .fold(self.constant.abs(), |a, t| a.max(t.cos.abs()).max(t.sin.abs()))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_coefficient() <= tol
    }

    pub fn approx_eq(&self, other: &TorusTrigForm, tol: f64) -> bool {
        (self.clone() - other.clone()).is_zero(tol)
    }

    /// `Some(k)` with `self = k * other` (coefficientwise within `tol` relative), if any.
    pub fn proportional_to(&self, other: &TorusTrigForm, tol: f64) -> Option<f64> {
        let scale = other.max_coefficient();
        if scale == 0.0 {
            return None;
        }
        let mut best = (0.0, 0.0);
        let mut consider = |a: f64, b: f64| {
            if b.abs() > best.1 {
                best = (a / b, b.abs());
            }
        };
        consider(self.constant, other.constant);
        for t in &other.terms {
            let (a, b) = self.coefficient(t.m, t.n);
            consider(a, t.cos);
            consider(b, t.sin);
        }
        let k = best.0;
        let diff = self.clone() - other.clone() * k;
        if diff.max_coefficient() <= tol * self.max_coefficient().max(scale * k.abs()) {
            Some(k)
        } else {
            None
        }
    }

    /// `sum_ij g[i][j] w_i conj(w_j)` with `w = (1, e^{ir}, e^{is})`; `g` must be Hermitian.
    pub fn from_hermitian(g: &[[C64; 3]; 3]) -> Self {
        let mut f = Self::constant(g[0][0].re + g[1][1].re + g[2][2].re);
        // frequency of w_i conj(w_j) for i > j
        let freq = |i: usize, j: usize| -> (i32, i32) {
            let e = |k: usize| match k {
                0 => (0, 0),
                1 => (1, 0),
                _ => (0, 1),
            };
            let (a, b) = (e(i), e(j));
            (a.0 - b.0, a.1 - b.1)
        };
        for (i, j) in [(1usize, 0usize), (2, 0), (1, 2)] {
            let (m, n) = freq(i, j);
            // g_ij w_i conj(w_j) + conj(...) = 2 Re(g_ij e^{i theta})
            let gij = g[i][j];
            f.add_term(m, n, 2.0 * gij.re, -2.0 * gij.im);
        }
        f
    }

    /// Restriction to the line `(r0 + alpha x, s0 + beta x)` as coefficients of
    /// `1, cos x, sin x, cos 2x, sin 2x`.
    pub fn restrict(&self, r0: f64, s0: f64, alpha: i32, beta: i32) -> [f64; 5] {
        let mut c = [self.constant, 0.0, 0.0, 0.0, 0.0];
        for t in &self.terms {
            let phi = t.m as f64 * r0 + t.n as f64 * s0;
            let k = t.m * alpha + t.n * beta;
            let (sp, cp) = phi.sin_cos();
            let ca = t.cos * cp + t.sin * sp;
            let mut cb = t.sin * cp - t.cos * sp;
            let k_abs = k.abs();
            if k < 0 {
                cb = -cb;
            }
            match k_abs {
                0 => c[0] += ca,
                1 => {
                    c[1] += ca;
                    c[2] += cb;
                }
                2 => {
                    c[3] += ca;
                    c[4] += cb;
                }
                _ => unreachable!("frequencies are bounded by 1 in each variable"),
            }
        }
        c
    }
}

impl Add for TorusTrigForm {
    type Output = TorusTrigForm;
    fn add(mut self, rhs: TorusTrigForm) -> TorusTrigForm {
        self.constant += rhs.constant;
        for t in rhs.terms {
            self.add_term(t.m, t.n, t.cos, t.sin);
        }
        self
    }
}

impl Neg for TorusTrigForm {
    type Output = TorusTrigForm;
    fn neg(self) -> TorusTrigForm {
        self * -1.0
    }
}

impl Sub for TorusTrigForm {
    type Output = TorusTrigForm;
    fn sub(self, rhs: TorusTrigForm) -> TorusTrigForm {
        self + (-rhs)
    }
}

impl Mul<f64> for TorusTrigForm {
    type Output = TorusTrigForm;
    fn mul(mut self, k: f64) -> TorusTrigForm {
        self.constant *= k;
        for t in &mut self.terms {
            t.cos *= k;
            t.sin *= k;
        }
        self
    }
}

impl fmt::Display for TorusTrigForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn angle(m: i32, n: i32) -> String {
            match (m, n) {
                (1, 0) => "r".into(),
                (0, 1) => "s".into(),
                (1, 1) => "r+s".into(),
                (1, -1) => "r-s".into(),
                _ => format!("{m}r{n:+}s"),
            }
        }
        write!(f, "{:.10}", self.constant)?;
        for t in &self.terms {
            let a = angle(t.m, t.n);
            if t.cos != 0.0 {
                write!(f, " {:+.10}*cos({a})", t.cos)?;
            }
            if t.sin != 0.0 {
                write!(f, " {:+.10}*sin({a})", t.sin)?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Charts

/// Spinal-coordinate chart of a Giraud disk,
/// `V(z1, z2) = cross_terms[0] + z1 cross_terms[1] + z2 cross_terms[2]`
/// with `z1 = e^{ir}`, `z2 = e^{is}`.
#[derive(Debug, Clone, Serialize)]
pub struct GiraudChart {
    #[serde(serialize_with = "serialize_vector")]
    pub p: CVector,
    #[serde(serialize_with = "serialize_vector")]
    pub q: CVector,
    #[serde(serialize_with = "serialize_vector")]
    pub r: CVector,
    #[serde(serialize_with = "serialize_vectors")]
    pub cross_terms: [CVector; 3],
    /// Form on chart coordinates.
    pub form: HermitianForm,
    /// Columns lift chart coordinates to the ambient space, if different.
    #[serde(serialize_with = "serialize_opt_matrix")]
    pub basis: Option<CMatrix>,
    pub ambient_form: HermitianForm,
}

/// Chart of `I` bisectors through `p`, `q`, `r` with the standard cross product
/// of `form`: terms `q x r`, `r x p`, `p x q`.
pub fn make_chart(p: &CVector, q: &CVector, r: &CVector, form: &HermitianForm) -> Result<GiraudChart> {
    if form.len() != 3 || p.len() != 3 || q.len() != 3 || r.len() != 3 {
        return Err(Error::Usage("Giraud charts need length-3 vectors and a 3x3 form".into()));
    }
    let m = CMatrix::from_columns(&[p.clone(), q.clone(), r.clone()]);
    let scale = p.norm() * q.norm() * r.norm();
    if scale == 0.0 || m.determinant().norm() <= 1e-10 * scale {
        return Err(Error::DegenerateChart(
            "the three points lie in a common complex line".into(),
        ));
    }
    let terms = [
        box_cross_general(q, r, form)?,
        box_cross_general(r, p, form)?,
        box_cross_general(p, q, form)?,
    ];
    Ok(GiraudChart {
        p: p.clone(),
        q: q.clone(),
        r: r.clone(),
        cross_terms: terms,
        form: form.clone(),
        basis: None,
        ambient_form: form.clone(),
    })
}

impl GiraudChart {
    /// Chart from explicit cross terms in coordinates lifted by `basis`.
    pub fn from_terms(
        pqr: [CVector; 3],
        cross_terms: [CVector; 3],
        form: HermitianForm,
        basis: Option<CMatrix>,
        ambient_form: HermitianForm,
    ) -> Result<Self> {
        if let Some(b) = &basis {
            if b.ncols() != form.len() || b.nrows() != ambient_form.len() {
                return Err(Error::Usage("basis shape does not match the forms".into()));
            }
        } else if form.len() != ambient_form.len() {
            return Err(Error::Usage("forms differ in size but no basis given".into()));
        }
        let [p, q, r] = pqr;
        Ok(GiraudChart {
            p,
            q,
            r,
            cross_terms,
            form,
            basis,
            ambient_form,
        })
    }

    /// `V(z1, z2)` in chart coordinates.
    pub fn vector_z(&self, z1: C64, z2: C64) -> CVector {
        &self.cross_terms[0] + self.cross_terms[1].map(|x| x * z1) + self.cross_terms[2].map(|x| x * z2)
    }

    pub fn vector(&self, r: f64, s: f64) -> CVector {
        self.vector_z(C64::from_polar(1.0, r), C64::from_polar(1.0, s))
    }

    pub fn lift(&self, x: &CVector) -> CVector {
        match &self.basis {
            Some(b) => b * x,
            None => x.clone(),
        }
    }

    /// `V(r, s)` in ambient coordinates.
    pub fn ambient(&self, r: f64, s: f64) -> CVector {
        self.lift(&self.vector(r, s))
    }

    pub fn ambient_terms(&self) -> [CVector; 3] {
        [
            self.lift(&self.cross_terms[0]),
            self.lift(&self.cross_terms[1]),
            self.lift(&self.cross_terms[2]),
        ]
    }

    /// Max of `|<V, z1bar p - q>|` and `|<V, z2bar p - r>|` relative to the vector sizes.
    pub fn orthogonality_defect(&self, r: f64, s: f64) -> f64 {
        let z1 = C64::from_polar(1.0, r);
        let z2 = C64::from_polar(1.0, s);
        let v = self.vector_z(z1, z2);
        let a = self.p.map(|x| x * z1.conj()) - &self.q;
        let b = self.p.map(|x| x * z2.conj()) - &self.r;
        let ia = herm_inner(&v, &a, &self.form).expect("chart dimensions").norm();
        let ib = herm_inner(&v, &b, &self.form).expect("chart dimensions").norm();
        ia.max(ib) / (1e-300 + v.norm() * a.norm().max(b.norm()))
    }

    /// Torus coordinates `(r, s)` of an ambient vector lying on the chart, plus the
    /// defect (distance of `z1`, `z2` from the unit circle and least-squares residual).
    pub fn coordinates_of(&self, x: &CVector) -> Result<(f64, f64, f64)> {
        let terms = self.ambient_terms();
        let m = CMatrix::from_columns(&terms);
        let svd = m.clone().svd(true, true);
        let y = svd
            .solve(x, 1e-14)
            .map_err(|e| Error::DegenerateChart(format!("cannot solve for chart coordinates: {e}")))?;
        if y[0].norm() <= 1e-14 * y.norm() {
            return Err(Error::DegenerateChart("vector is not in the chart image".into()));
        }
        let z1 = y[1] / y[0];
        let z2 = y[2] / y[0];
        let resid = (&m * &y - x).norm() / x.norm().max(1e-300);
        let defect = (z1.norm() - 1.0).abs().max((z2.norm() - 1.0).abs()).max(resid);
        Ok((wrap_angle(z1.arg()), wrap_angle(z2.arg()), defect))
    }
}

fn gram_of_terms(chart: &GiraudChart) -> [[C64; 3]; 3] {
    let c = &chart.cross_terms;
    let mut g = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // <c_i, c_j> = c_j^* H c_i
            g[i][j] = herm_inner(&c[i], &c[j], &chart.form).expect("chart dimensions");
        }
    }
    g
}

/// `<V, V>` as an exact trigonometric form.
pub fn vv_form(chart: &GiraudChart) -> TorusTrigForm {
    TorusTrigForm::from_hermitian(&gram_of_terms(chart))
}

/// `|<V, u>|^2` with `u` in ambient coordinates.
pub fn modulus_form(chart: &GiraudChart, u: &CVector) -> Result<TorusTrigForm> {
    let terms = chart.ambient_terms();
    let mut x = [C64::new(0.0, 0.0); 3];
    for (k, c) in terms.iter().enumerate() {
        x[k] = herm_inner(c, u, &chart.ambient_form)?;
    }
    let mut g = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = x[i] * x[j].conj();
        }
    }
    Ok(TorusTrigForm::from_hermitian(&g))
}

/// `|<V, u>|^2 - |<V, v>|^2`.
pub fn trace_equation(chart: &GiraudChart, u: &CVector, v: &CVector) -> Result<TorusTrigForm> {
    Ok(modulus_form(chart, u)? - modulus_form(chart, v)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiskCheck {
    pub nonempty: bool,
    pub witness: Option<(f64, f64)>,
    /// Smallest sampled `<V, V>`.
    pub min_value: f64,
    /// Certified lower bound of `<V, V>` when no negative point was found.
    pub certified_lower_bound: Option<f64>,
}

/// Is `{<V, V> < 0}` nonempty? Grid search plus local refinement; a negative
/// answer carries a certified lower bound.
pub fn disk_nonempty(chart: &GiraudChart) -> DiskCheck {
    form_negative_somewhere(&vv_form(chart))
}

/// Same as [`disk_nonempty`] for an arbitrary form.
pub fn form_negative_somewhere(f: &TorusTrigForm) -> DiskCheck {
    let lb = f.lower_bound();
    if lb > 0.0 {
        return DiskCheck {
            nonempty: false,
            witness: None,
            min_value: lb,
            certified_lower_bound: Some(lb),
        };
    }
    let n = 256;
    let d = TAU / n as f64;
    let (mut best, arg) = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (r, s) = (-PI + (k / n) as f64 * d, -PI + (k % n) as f64 * d);
            (f.eval(r, s), k)
        })
        .reduce(|| (f64::INFINITY, usize::MAX), |a, b| if (b.0, b.1) < (a.0, a.1) { b } else { a });
    let mut arg = (-PI + (arg / n) as f64 * d, -PI + (arg % n) as f64 * d);
    // zoom around the grid minimum
    let mut step = d;
    for _ in 0..30 {
        let (r0, s0) = arg;
        for i in -4..=4 {
            for j in -4..=4 {
                let (r, s) = (r0 + i as f64 * step / 4.0, s0 + j as f64 * step / 4.0);
                let v = f.eval(r, s);
                if v < best {
                    best = v;
                    arg = (r, s);
                }
            }
        }
        step /= 2.0;
    }
    let arg = (wrap_angle(arg.0), wrap_angle(arg.1));
    if best < 0.0 {
        return DiskCheck {
            nonempty: true,
            witness: Some(arg),
            min_value: best,
            certified_lower_bound: None,
        };
    }
    let neg = f.clone() * -1.0;
    let cm = certified_max(&neg, &TorusTrigForm::constant(-1.0));
    DiskCheck {
        nonempty: false,
        witness: None,
        min_value: best,
        certified_lower_bound: Some(-cm.upper_bound),
    }
}

// ---------------------------------------------------------------------------
// Certified maximization

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertifyOptions {
    /// Initial cells per side.
    pub grid: usize,
    /// Stop when upper bound minus incumbent is below this.
    pub gap: f64,
    /// Cap on subdivided cells.
    pub max_cells: usize,
    /// Stop early once the maximum is known to be above or below this value.
    pub threshold: Option<f64>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            grid: 2048,
            gap: 1e-7,
            max_cells: 4_000_000,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertifiedMax {
    /// Rigorous upper bound of the objective over `{constraint <= 0}`
    /// (`-inf` when that set is certified empty).
    pub upper_bound: f64,
    /// Best feasible value found.
    pub best_value: f64,
    pub argmax: Option<(f64, f64)>,
    pub empty: bool,
    /// `upper_bound - best_value` at termination.
    pub gap: f64,
}

#[derive(Clone, Copy)]
struct Cell {
    ub: f64,
    r: f64,
    s: f64,
    h: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.ub.total_cmp(&other.ub) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub.total_cmp(&other.ub)
    }
}

struct Bounder<'a> {
    f: &'a TorusTrigForm,
    g: &'a TorusTrigForm,
    fc: (f64, f64, f64),
    gc: (f64, f64, f64),
}

struct CellEval {
    f: f64,
    g: f64,
    ub: f64,
    g_lb: f64,
}

impl Bounder<'_> {
    fn eval(&self, r: f64, s: f64, h: f64) -> CellEval {
        self.eval_at(&Angles::new(r, s), h)
    }

    fn eval_at(&self, a: &Angles, h: f64) -> CellEval {
        let (f, fr, fs) = self.f.eval_with_gradient_at(a);
        let (g, gr, gs) = self.g.eval_with_gradient_at(a);
        let quad = |c: (f64, f64, f64)| 0.5 * h * h * (c.0 + 2.0 * c.1 + c.2);
        CellEval {
            f,
            g,
            ub: f + (fr.abs() + fs.abs()) * h + quad(self.fc),
            g_lb: g - (gr.abs() + gs.abs()) * h - quad(self.gc),
        }
    }
}

/// Rigorous upper bound for `objective` over `{constraint <= 0}` on the torus.
pub fn certified_max(objective: &TorusTrigForm, constraint: &TorusTrigForm) -> CertifiedMax {
    certified_max_with(objective, constraint, &CertifyOptions::default())
}

/// Branch and bound over square cells. A cell's bound is its center value plus
/// gradient and curvature remainders; cells whose constraint lower bound is
/// positive are discarded.
pub fn certified_max_with(objective: &TorusTrigForm, constraint: &TorusTrigForm, opts: &CertifyOptions) -> CertifiedMax {
    let b = Bounder {
        f: objective,
        g: constraint,
        fc: objective.curvature(),
        gc: constraint.curvature(),
    };
    let n = opts.grid.max(1);
    let d = TAU / n as f64;
    let h0 = d / 2.0;
    let table: Vec<(f64, f64, f64)> = (0..n)
        .map(|i| {
            let x = -PI + (i as f64 + 0.5) * d;
            let (sn, cs) = x.sin_cos();
            (x, cs, sn)
        })
        .collect();
    let angles = |k: usize| Angles::from_parts(table[k / n], table[k % n]);

    let (mut best, best_k) = (0..n * n)
        .into_par_iter()
        .filter_map(|k| {
            let a = angles(k);
            (b.g.eval_at(&a) <= 0.0).then(|| (b.f.eval_at(&a), k))
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, x| if x.0 > a.0 || (x.0 == a.0 && x.1 < a.1) { x } else { a },
        );
    let mut arg = if best_k == usize::MAX { (0.0, 0.0) } else { (angles(best_k).r, angles(best_k).s) };
    let mut found = best > f64::NEG_INFINITY;

    let cells: Vec<Cell> = (0..n * n)
        .into_par_iter()
        .filter_map(|k| {
            let a = angles(k);
            let e = b.eval_at(&a, h0);
            (e.g_lb <= 0.0 && e.ub > best).then_some(Cell {
                ub: e.ub,
                r: a.r,
                s: a.s,
                h: h0,
            })
        })
        .collect();
    let mut heap = BinaryHeap::from(cells);
    let mut processed = 0usize;
    while let Some(top) = heap.peek() {
        if found && top.ub - best <= opts.gap {
            break;
        }
        if let Some(th) = opts.threshold {
            if (found && best > th) || top.ub.max(best) < th {
                break;
            }
        }
        if processed >= opts.max_cells {
            break;
        }
        let cell = heap.pop().expect("peeked");
        if cell.h < 1e-13 {
            // cannot split further; keep its bound in the answer
            heap.push(Cell { ub: cell.ub, ..cell });
            break;
        }
        processed += 1;
        let h = cell.h / 2.0;
        for (dr, ds) in [(-h, -h), (-h, h), (h, -h), (h, h)] {
            let (r, s) = (cell.r + dr, cell.s + ds);
            let e = b.eval(r, s, h);
            if e.g <= 0.0 && e.f > best {
                best = e.f;
                arg = (r, s);
                found = true;
            }
            if e.g_lb > 0.0 || e.ub <= best {
                continue;
            }
            heap.push(Cell { ub: e.ub, r, s, h });
        }
    }
    let top = heap.peek().map(|c| c.ub).unwrap_or(f64::NEG_INFINITY);
    let upper = top.max(best);
    CertifiedMax {
        upper_bound: upper,
        best_value: best,
        argmax: found.then(|| (wrap_angle(arg.0), wrap_angle(arg.1))),
        empty: !found && upper == f64::NEG_INFINITY,
        gap: if found { upper - best } else { f64::INFINITY },
    }
}

/// First-order bound on a uniform grid: `f(c) + L_r h + L_s h` with global
/// Lipschitz constants from the coefficients.
pub fn lipschitz_max(objective: &TorusTrigForm, constraint: &TorusTrigForm, grid: usize) -> CertifiedMax {
    let n = grid.max(1);
    let d = TAU / n as f64;
    let h = d / 2.0;
    let (lfr, lfs) = objective.lipschitz();
    let (lgr, lgs) = constraint.lipschitz();
    let (ub, best, arg) = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (r, s) = (-PI + ((k / n) as f64 + 0.5) * d, -PI + ((k % n) as f64 + 0.5) * d);
            let g = constraint.eval(r, s);
            if g - (lgr + lgs) * h > 0.0 {
                return (f64::NEG_INFINITY, f64::NEG_INFINITY, (r, s));
            }
            let f = objective.eval(r, s);
            let feasible = if g <= 0.0 { f } else { f64::NEG_INFINITY };
            (f + (lfr + lfs) * h, feasible, (r, s))
        })
        .reduce(
            || (f64::NEG_INFINITY, f64::NEG_INFINITY, (0.0, 0.0)),
            |a, x| {
                let ub = a.0.max(x.0);
                if x.1 > a.1 || (x.1 == a.1 && x.2 < a.2) {
                    (ub, x.1, x.2)
                } else {
                    (ub, a.1, a.2)
                }
            },
        );
    let found = best > f64::NEG_INFINITY;
    CertifiedMax {
        upper_bound: ub,
        best_value: best,
        argmax: found.then_some(arg),
        empty: ub == f64::NEG_INFINITY,
        gap: if found { ub - best } else { f64::INFINITY },
    }
}

/// Real function on the torus.
pub trait TorusFunction: Sync {
    fn value(&self, r: f64, s: f64) -> f64;
}

impl TorusFunction for TorusTrigForm {
    fn value(&self, r: f64, s: f64) -> f64 {
        self.eval(r, s)
    }
}

/// Number of connected components of `{f < 0}` on an `n x n` torus grid.
///
/// The grid is shifted by different fractions of a cell in `r` and `s`, so no
/// sample sits on a line `r, s, r - s, r + s = k pi / 2` (for `n` divisible by 4).
pub fn negative_components<F: TorusFunction>(f: &F, n: usize) -> usize {
    let d = TAU / n as f64;
    let neg: Vec<bool> = (0..n * n)
        .into_par_iter()
        .map(|k| f.value(-PI + ((k / n) as f64 + 0.5) * d, -PI + ((k % n) as f64 + 0.25) * d) < 0.0)
        .collect();
    let mut seen = vec![false; n * n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n * n {
        if !neg[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = (k / n, k % n);
            for (di, dj) in [(1, 0), (n - 1, 0), (0, 1), (0, n - 1)] {
                let nk = ((i + di) % n) * n + (j + dj) % n;
                if neg[nk] && !seen[nk] {
                    seen[nk] = true;
                    stack.push(nk);
                }
            }
        }
    }
    count
}

// ---------------------------------------------------------------------------
// Triple intersections

/// Intersection points on the torus of two lines `(family, c)`.
pub fn line_intersections(a: (LineFamily, f64), b: (LineFamily, f64)) -> Vec<(f64, f64)> {
    let ((a1, b1), (a2, b2)) = (a.0.normal(), b.0.normal());
    let det = (a1 * b2 - a2 * b1) as f64;
    if det == 0.0 {
        return Vec::new();
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    for k1 in -2..=2 {
        for k2 in -2..=2 {
            let c1 = a.1 + TAU * k1 as f64;
            let c2 = b.1 + TAU * k2 as f64;
            let r = wrap_angle((c1 * b2 as f64 - c2 * b1 as f64) / det);
            let s = wrap_angle((a1 as f64 * c2 - a2 as f64 * c1) / det);
            if !out.iter().any(|&(x, y)| angle_distance(x, r) < 1e-9 && angle_distance(y, s) < 1e-9) {
                out.push((r, s));
            }
        }
    }
    out
}


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineFamily {
    /// `r = c`, parameter `s`.
    R,
    /// `s = c`, parameter `r`.
    S,
    /// `r - s = c`, parameter `r`.
    RMinusS,
    /// `r + s = c`, parameter `r`.
    RPlusS,
}

impl LineFamily {
    pub const ALL: [LineFamily; 4] = [LineFamily::R, LineFamily::S, LineFamily::RMinusS, LineFamily::RPlusS];

    /// Torus point of parameter `x` on the line with constant `c`.
    pub fn point(self, c: f64, x: f64) -> (f64, f64) {
        match self {
            LineFamily::R => (c, x),
            LineFamily::S => (x, c),
            LineFamily::RMinusS => (x, x - c),
            LineFamily::RPlusS => (x, c - x),
        }
    }

    /// Coefficients `(a, b)` with the line being `a r + b s = c`.
    pub fn normal(self) -> (i32, i32) {
        match self {
            LineFamily::R => (1, 0),
            LineFamily::S => (0, 1),
            LineFamily::RMinusS => (1, -1),
            LineFamily::RPlusS => (1, 1),
        }
    }

    /// `(r0, s0, alpha, beta)` with the line `(r0 + alpha x, s0 + beta x)`.
    fn parametrization(self, c: f64) -> (f64, f64, i32, i32) {
        match self {
            LineFamily::R => (c, 0.0, 0, 1),
            LineFamily::S => (0.0, c, 1, 0),
            LineFamily::RMinusS => (0.0, -c, 1, 1),
            LineFamily::RPlusS => (0.0, c, 1, -1),
        }
    }

    /// Value of the defining expression (`r`, `s`, `r - s` or `r + s`).
    pub fn level(self, r: f64, s: f64) -> f64 {
        match self {
            LineFamily::R => r,
            LineFamily::S => s,
            LineFamily::RMinusS => r - s,
            LineFamily::RPlusS => r + s,
        }
    }
}

/// A piece `{ x in [start, end] }` of a line, clipped to `<V, V> <= 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineSegment {
    pub family: LineFamily,
    pub c: f64,
    pub start: f64,
    pub end: f64,
    pub full_circle: bool,
}

impl LineSegment {
    pub fn endpoints(&self) -> ((f64, f64), (f64, f64)) {
        let a = self.family.point(self.c, self.start);
        let b = self.family.point(self.c, self.end);
        ((wrap_angle(a.0), wrap_angle(a.1)), (wrap_angle(b.0), wrap_angle(b.1)))
    }

    pub fn midpoint(&self) -> (f64, f64) {
        let p = self.family.point(self.c, 0.5 * (self.start + self.end));
        (wrap_angle(p.0), wrap_angle(p.1))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusLine {
    pub family: LineFamily,
    pub c: f64,
    /// Whether any part of the line meets `<V, V> <= 0`.
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TripleSolution {
    /// The trace equation vanishes on the whole torus.
    pub identically_zero: bool,
    pub lines: Vec<TorusLine>,
    pub segments: Vec<LineSegment>,
    /// Feasible solutions not on any detected line.
    pub branch_points: Vec<(f64, f64)>,
    pub trace: TorusTrigForm,
}

/// Roots in `(-pi, pi]` of `a + b cos c + g sin c`.
fn trig_roots(a: f64, b: f64, g: f64) -> Vec<f64> {
    let rho = b.hypot(g);
    if rho == 0.0 {
        return Vec::new();
    }
    let ratio = -a / rho;
    if ratio.abs() > 1.0 + 1e-12 {
        return Vec::new();
    }
    let phi = g.atan2(b);
    let delta = ratio.clamp(-1.0, 1.0).acos();
    let r1 = wrap_angle(phi + delta);
    let r2 = wrap_angle(phi - delta);
    if angle_distance(r1, r2) < 1e-12 {
        vec![r1]
    } else {
        vec![r1, r2]
    }
}

fn detect_lines(f: &TorusTrigForm, family: LineFamily, tol: f64) -> Vec<f64> {
    let coefs = |c: f64| {
        let (r0, s0, a, b) = family.parametrization(c);
        f.restrict(r0, s0, a, b)
    };
    let c0 = coefs(0.0);
    let cpi = coefs(PI);
    let chalf = coefs(PI / 2.0);
    let mut abc = [[0.0; 3]; 5];
    let mut size = 0.0f64;
    for j in 0..5 {
        let a0 = 0.5 * (c0[j] + cpi[j]);
        let a1 = 0.5 * (c0[j] - cpi[j]);
        let a2 = chalf[j] - a0;
        abc[j] = [a0, a1, a2];
        size = size.max(a0.abs() + a1.abs() + a2.abs());
    }
    if size <= tol {
        return Vec::new();
    }
    // Double roots of one component are only located to sqrt(eps); another
    // component usually has a simple root at the same place, so try them all.
    let mut out: Vec<f64> = Vec::new();
    for [a0, a1, a2] in abc {
        if a0.abs() + a1.abs() + a2.abs() <= tol {
            continue;
        }
        for c in trig_roots(a0, a1, a2) {
            if out.iter().any(|&o| angle_distance(o, c) < 1e-6) {
                continue;
            }
            let k = coefs(c);
            if k.iter().any(|x| x.abs() > tol) {
                continue;
            }
            let resid = (0..64)
                .map(|i| {
                    let (r, s) = family.point(c, -PI + TAU * i as f64 / 64.0);
                    f.eval(r, s).abs()
                })
                .fold(0.0, f64::max);
            if resid <= tol {
                out.push(snap_angle(c));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if (gm <= 0.0) == (ga <= 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Intervals of `x` in one period where `g(x) <= 0`. Each interval has its midpoint in `(-pi, pi]`.
pub fn clip_to_nonpositive(g: impl Fn(f64) -> f64) -> Vec<(f64, f64, bool)> {
    let n = 4096;
    let xs: Vec<f64> = (0..n).map(|k| -PI + TAU * k as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let neg = |v: f64| v <= 0.0;
    let mut enters = Vec::new();
    let mut exits = Vec::new();
    for k in 0..n {
        let (x0, v0) = (xs[k], vals[k]);
        let (x1, v1) = if k + 1 < n { (xs[k + 1], vals[k + 1]) } else { (PI, vals[0]) };
        if neg(v0) != neg(v1) {
            let x = bisect(&g, x0, x1);
            if neg(v1) {
                enters.push(x);
            } else {
                exits.push(x);
            }
        }
    }
    if enters.is_empty() {
        return if vals.iter().all(|&v| neg(v)) {
            vec![(-PI, PI, true)]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    for &a in &enters {
        // next exit going forward
        let b = exits
            .iter()
            .map(|&e| if e > a { e } else { e + TAU })
            .fold(f64::INFINITY, f64::min);
        let mid = 0.5 * (a + b);
        let shift = wrap_angle(mid) - mid;
        out.push((a + shift, b + shift, false));
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Solve `|<V,u>| = |<V,v>|` on the chart: detect exact line factors, clip them
/// to the closed disk and collect any remaining solution points.
pub fn solve_triple(chart: &GiraudChart, u: &CVector, v: &CVector) -> Result<TripleSolution> {
    let f = trace_equation(chart, u, v)?;
    let vv = vv_form(chart);
    let reference = modulus_form(chart, u)?.max_coefficient() + modulus_form(chart, v)?.max_coefficient();
    let tol = 1e-9 * reference.max(1e-300);
    if f.max_coefficient() <= tol {
        return Ok(TripleSolution {
            identically_zero: true,
            lines: Vec::new(),
            segments: Vec::new(),
            branch_points: Vec::new(),
            trace: f,
        });
    }
    let mut lines = Vec::new();
    let mut segments = Vec::new();
    for family in LineFamily::ALL {
        for c in detect_lines(&f, family, tol) {
            let pieces = clip_to_nonpositive(|x| {
                let (r, s) = family.point(c, x);
                vv.eval(r, s)
            });
            lines.push(TorusLine {
                family,
                c,
                feasible: !pieces.is_empty(),
            });
            for (start, end, full) in pieces {
                segments.push(LineSegment {
                    family,
                    c,
                    start,
                    end,
                    full_circle: full,
                });
            }
        }
    }
    let on_line = |r: f64, s: f64| {
        lines
            .iter()
            .any(|l| angle_distance(l.family.level(r, s), l.c) < 1e-6)
    };
    let mut branch_points = Vec::new();
    let samples = 720;
    for k in 0..samples {
        let r = -PI + TAU * (k as f64 + 0.37) / samples as f64;
        let c = f.restrict(r, 0.0, 0, 1);
        for s in trig_roots(c[0], c[1], c[2]) {
            if vv.eval(r, s) <= 0.0 && !on_line(r, s) {
                branch_points.push((wrap_angle(r), s));
            }
        }
    }
    Ok(TripleSolution {
        identically_zero: false,
        lines,
        segments,
        branch_points,
        trace: f,
    })
}

// ---------------------------------------------------------------------------
// Boundary arcs

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcSide {
    /// `|<V,u>| > |<V,v>|` along the arc.
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryArc {
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub side: ArcSide,
    /// Sampled points, start to end.
    pub points: Vec<(f64, f64)>,
    /// The arc is a whole boundary loop (no split points on it).
    pub closed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryArcs {
    pub loops: usize,
    pub arcs: Vec<BoundaryArc>,
    /// Points where the boundary meets the third bisector.
    pub split_points: Vec<(f64, f64)>,
    /// Extremes of `r` on the boundary (double root in `s`).
    pub r_turning: Vec<(f64, f64)>,
    /// Extremes of `s` on the boundary (double root in `r`).
    pub s_turning: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    // r-direction edge from vertex (i, j) to (i+1, j)
    H(usize, usize),
    // s-direction edge from (i, j) to (i, j+1)
    V(usize, usize),
}

/// Closed loops of `{f = 0}` on the torus by marching squares.
pub fn zero_loops(f: &TorusTrigForm, n: usize) -> Vec<Vec<(f64, f64)>> {
    let d = TAU / n as f64;
    let coord = |i: usize| -PI + i as f64 * d;
    let vals: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| f.eval(coord(k / n), coord(k % n)))
        .collect();
    let val = |i: usize, j: usize| vals[(i % n) * n + (j % n)];
    let neg = |i: usize, j: usize| val(i, j) <= 0.0;
    let crosses = |e: EdgeKey| match e {
        EdgeKey::H(i, j) => neg(i, j) != neg(i + 1, j),
        EdgeKey::V(i, j) => neg(i, j) != neg(i, j + 1),
    };
    let point = |e: EdgeKey| -> (f64, f64) {
        match e {
            EdgeKey::H(i, j) => {
                let (a, b) = (val(i, j), val(i + 1, j));
                (wrap_angle(coord(i) + d * a / (a - b)), wrap_angle(coord(j)))
            }
            EdgeKey::V(i, j) => {
                let (a, b) = (val(i, j), val(i, j + 1));
                (wrap_angle(coord(i)), wrap_angle(coord(j) + d * a / (a - b)))
            }
        }
    };
    let mut adj: HashMap<EdgeKey, Vec<EdgeKey>> = HashMap::new();
    let mut link = |a: EdgeKey, b: EdgeKey| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    for i in 0..n {
        for j in 0..n {
            let (i1, j1) = ((i + 1) % n, (j + 1) % n);
            let bottom = EdgeKey::H(i, j);
            let right = EdgeKey::V(i1, j);
            let top = EdgeKey::H(i, j1);
            let left = EdgeKey::V(i, j);
            let es: Vec<EdgeKey> = [bottom, right, top, left].into_iter().filter(|&e| crosses(e)).collect();
            match es.len() {
                2 => link(es[0], es[1]),
                4 => {
                    let center = f.eval(coord(i) + d / 2.0, coord(j) + d / 2.0) <= 0.0;
                    if center == neg(i, j) {
                        link(bottom, right);
                        link(top, left);
                    } else {
                        link(bottom, left);
                        link(right, top);
                    }
                }
                _ => {}
            }
        }
    }
    let mut visited: HashMap<EdgeKey, bool> = adj.keys().map(|&k| (k, false)).collect();
    let mut keys: Vec<EdgeKey> = adj.keys().copied().collect();
    keys.sort_by_key(|k| match *k {
        EdgeKey::H(i, j) => (0, i, j),
        EdgeKey::V(i, j) => (1, i, j),
    });
    let mut loops = Vec::new();
    for start in keys {
        if visited[&start] {
            continue;
        }
        let mut pts = Vec::new();
        let mut prev: Option<EdgeKey> = None;
        let mut cur = start;
        loop {
            visited.insert(cur, true);
            pts.push(point(cur));
            let nbrs = &adj[&cur];
            let next = nbrs
                .iter()
                .copied()
                .find(|&e| Some(e) != prev && !visited[&e])
                .or_else(|| nbrs.iter().copied().find(|&e| e == start && Some(e) != prev));
            match next {
                Some(e) if e == start => break,
                Some(e) => {
                    prev = Some(cur);
                    cur = e;
                }
                None => break,
            }
        }
        loops.push(pts);
    }
    loops
}

/// Newton iteration for the common zero of two forms.
pub fn refine_common_zero(f: &TorusTrigForm, g: &TorusTrigForm, start: (f64, f64)) -> Option<(f64, f64)> {
    let (mut r, mut s) = start;
    for _ in 0..50 {
        let (fv, fr, fs) = f.eval_with_gradient(r, s);
        let (gv, gr, gs) = g.eval_with_gradient(r, s);
        let det = fr * gs - fs * gr;
        if det.abs() < 1e-14 {
            return None;
        }
        let dr = (fv * gs - fs * gv) / det;
        let ds = (fr * gv - fv * gr) / det;
        r -= dr;
        s -= ds;
        if dr.abs() + ds.abs() < 1e-15 {
            break;
        }
    }
    let scale = f.max_coefficient().max(g.max_coefficient());
    let ok = f.eval(r, s).abs() <= 1e-10 * scale
        && g.eval(r, s).abs() <= 1e-10 * scale
        && angle_distance(r, start.0) + angle_distance(s, start.1) < 1e-2;
    ok.then(|| (wrap_angle(r), wrap_angle(s)))
}

/// Points where the discriminant of `f` in the second variable vanishes.
/// With `swap` the roles of `r` and `s` are exchanged.
fn turning_points(f: &TorusTrigForm, swap: bool) -> Vec<(f64, f64)> {
    let pqr = |x: f64| {
        if swap {
            f.restrict(0.0, x, 1, 0)
        } else {
            f.restrict(x, 0.0, 0, 1)
        }
    };
    let disc = |x: f64| {
        let c = pqr(x);
        c[1] * c[1] + c[2] * c[2] - c[0] * c[0]
    };
    let n = 8192;
    let mut out = Vec::new();
    for k in 0..n {
        let a = -PI + TAU * k as f64 / n as f64;
        let b = a + TAU / n as f64;
        if (disc(a) >= 0.0) != (disc(b) >= 0.0) {
            let x = bisect(|y| -disc(y), a, b);
            let c = pqr(x);
            let phi = c[2].atan2(c[1]);
            let y = if c[0] > 0.0 { phi + PI } else { phi };
            let p = if swap { (wrap_angle(y), wrap_angle(x)) } else { (wrap_angle(x), wrap_angle(y)) };
            out.push(p);
        }
    }
    out
}

/// Trace `<V,V> = 0`, split it where `|<V,u>| = |<V,v>|`, and label each arc.
pub fn boundary_arcs(chart: &GiraudChart, u: &CVector, v: &CVector) -> Result<BoundaryArcs> {
    let vv = vv_form(chart);
    let f = trace_equation(chart, u, v)?;
    Ok(boundary_arcs_of_forms(&vv, &f))
}

pub fn boundary_arcs_of_forms(vv: &TorusTrigForm, f: &TorusTrigForm) -> BoundaryArcs {
    let loops = zero_loops(vv, 1024);
    let mut arcs = Vec::new();
    let mut split_points = Vec::new();
    let side_of = |x: f64| if x > 0.0 { ArcSide::Interior } else { ArcSide::Exterior };
    for lp in &loops {
        let m = lp.len();
        if m < 2 {
            continue;
        }
        let fv: Vec<f64> = lp.iter().map(|&(r, s)| f.eval(r, s)).collect();
        // (index after which the crossing happens, refined point)
        let mut cuts: Vec<(usize, (f64, f64))> = Vec::new();
        for k in 0..m {
            let k1 = (k + 1) % m;
            if (fv[k] > 0.0) != (fv[k1] > 0.0) {
                let (a, b) = (lp[k], lp[k1]);
                let db = (wrap_angle(b.0 - a.0), wrap_angle(b.1 - a.1));
                let along = |t: f64| f.eval(a.0 + t * db.0, a.1 + t * db.1);
                let t = bisect(|t| if fv[k] > 0.0 { -along(t) } else { along(t) }, 0.0, 1.0);
                let p0 = (wrap_angle(a.0 + t * db.0), wrap_angle(a.1 + t * db.1));
                let p = refine_common_zero(vv, f, p0).unwrap_or(p0);
                cuts.push((k, p));
            }
        }
        if cuts.is_empty() {
            arcs.push(BoundaryArc {
                start: lp[0],
                end: lp[0],
                side: side_of(fv[0]),
                points: lp.clone(),
                closed: true,
            });
            continue;
        }
        for (c, &(k, p)) in cuts.iter().enumerate() {
            let (k_next, q) = cuts[(c + 1) % cuts.len()];
            let mut pts = vec![p];
            let mut idx = (k + 1) % m;
            loop {
                pts.push(lp[idx]);
                if idx == k_next {
                    break;
                }
                idx = (idx + 1) % m;
            }
            pts.push(q);
            let mid = pts[pts.len() / 2];
            arcs.push(BoundaryArc {
                start: p,
                end: q,
                side: side_of(f.eval(mid.0, mid.1)),
                points: pts,
                closed: false,
            });
            split_points.push(p);
        }
    }
    BoundaryArcs {
        loops: loops.len(),
        arcs,
        split_points,
        r_turning: turning_points(vv, false),
        s_turning: turning_points(vv, true),
    }
}

// ---------------------------------------------------------------------------
// The PU(3,1) slice

/// `|| q_inf - C^-1 q_inf + CBC^-1 q_inf - CBC q_inf ||` with the signs given.
pub fn coplanar_defect_with_signs(p: &ModuliPoint, signs: [f64; 4]) -> Result<f64> {
    let g = generators(p, 3)?;
    let words = ["", "c", "CBc", "CBC"];
    let mut sum = CVector::zeros(4);
    for (w, sg) in words.iter().zip(signs) {
        let x = if w.is_empty() { g.q_inf() } else { g.image_of_q_inf(w)? };
        sum += x.map(|z| z * sg);
    }
    Ok(sum.norm())
}

pub fn coplanar_defect(p: &ModuliPoint) -> Result<f64> {
    coplanar_defect_with_signs(p, [1.0, -1.0, 1.0, -1.0])
}

/// The basis `e1 = q_inf`, `e2 = C^-1 q_inf`, `e3 = CBC^-1 q_inf`, `e4 = CBC q_inf`.
pub fn slice_basis(p: &ModuliPoint) -> Result<[CVector; 4]> {
    let g = generators(p, 3)?;
    Ok([
        g.q_inf(),
        g.image_of_q_inf("c")?,
        g.image_of_q_inf("CBc")?,
        g.image_of_q_inf("CBC")?,
    ])
}

/// Chart of `I(C) ∩ I(CBC^-1)` inside the complex hyperbolic plane spanned by
/// `e1, e2, e3`, with the restricted form `H_L = (e_i^* H e_j)` and its cross product.
pub fn restricted_slice_chart(p: &ModuliPoint) -> Result<GiraudChart> {
    if !p.status().in_moduli {
        return Err(Error::InvalidModuli(format!("({}, {}) is outside the moduli space", p.h, p.t)));
    }
    if p.h <= 1.0 {
        return Err(Error::OutOfScope(format!("the restricted slice needs h > 1, got h = {}", p.h)));
    }
    let e = slice_basis(p)?;
    span_chart(&e[0], &e[1], &e[2], &HermitianForm::standard(4))
}

/// Chart of the Giraud disk of `p, q, r` inside the complex plane they span.
///
/// For a 3x3 form this is [`make_chart`]; in higher dimension the chart works
/// in the basis `(p, q, r)` with the restricted form.
pub fn span_chart(p: &CVector, q: &CVector, r: &CVector, ambient: &HermitianForm) -> Result<GiraudChart> {
    if ambient.len() == 3 {
        return make_chart(p, q, r, ambient);
    }
    if p.len() != ambient.len() || q.len() != ambient.len() || r.len() != ambient.len() {
        return Err(Error::Usage("vectors and form differ in size".into()));
    }
    let basis = CMatrix::from_columns(&[p.clone(), q.clone(), r.clone()]);
    let scale = p.norm() * q.norm() * r.norm();
    let sv = basis.clone().svd(false, false).singular_values;
    if scale == 0.0 || sv[0] * sv[1] * sv[2] <= 1e-10 * scale {
        return Err(Error::DegenerateChart("the three points lie in a common complex line".into()));
    }
    let hl = basis.adjoint() * ambient.matrix() * &basis;
    let hl = HermitianForm::new(CMatrix::from_fn(3, 3, |i, j| 0.5 * (hl[(i, j)] + hl[(j, i)].conj())))?;
    let unit = |k: usize| CVector::from_fn(3, |i, _| if i == k { ONE } else { C64::new(0.0, 0.0) });
    let (e1, e2, e3) = (unit(0), unit(1), unit(2));
    let terms = [
        box_cross_general(&e2, &e3, &hl)?,
        box_cross_general(&e1, &e3, &hl)?,
        box_cross_general(&e1, &e2, &hl)?,
    ];
    GiraudChart::from_terms([e1, e2, e3], terms, hl, Some(basis), ambient.clone())
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceFactorization {
    /// Closed form of the constant `|<V, q_inf>|^2`.
    pub q_inf_expected: f64,
    pub q_inf_max_rel_defect: f64,
    /// Max relative defect of `|<V, e4>|^2 = base (2 sin r sin s + 2 cos r cos s + 2 cos r + 2 cos s + 3)`.
    pub e4_max_rel_defect: f64,
    pub vv_pi_zero: f64,
    pub vv_pi_zero_expected: f64,
}

/// Compare the slice chart with the closed forms of its invariants.
pub fn slice_factorization(p: &ModuliPoint, chart: &GiraudChart) -> Result<SliceFactorization> {
    let e = slice_basis(p)?;
    let (h, t) = (p.h, p.t);
    let c = t.cos() + 1.0;
    let k = 8.0 * h * h * t.cos() + 8.0 * h * h + 1.0;
    let base = 4.0 * h.powi(4) * c * c * k * k;
    let qf = modulus_form(chart, &e[0])?;
    let ef = modulus_form(chart, &e[3])?;
    let mut dq: f64 = 0.0;
    let mut de: f64 = 0.0;
    for i in 0..24 {
        for j in 0..24 {
            let (r, s) = (-PI + TAU * (i as f64 + 0.3) / 24.0, -PI + TAU * (j as f64 + 0.6) / 24.0);
            dq = dq.max((qf.eval(r, s) - base).abs() / base);
            let expect = base * (2.0 * r.sin() * s.sin() + 2.0 * r.cos() * s.cos() + 2.0 * r.cos() + 2.0 * s.cos() + 3.0);
            de = de.max((ef.eval(r, s) - expect).abs() / base);
        }
    }
    let vv = vv_form(chart);
    Ok(SliceFactorization {
        q_inf_expected: base,
        q_inf_max_rel_defect: dq,
        e4_max_rel_defect: de,
        vv_pi_zero: vv.eval(PI, 0.0),
        vv_pi_zero_expected: -128.0 * h.powi(4) * c * c * (h * h * t.cos() + h * h + 0.125),
    })
}
