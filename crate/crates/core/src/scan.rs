//! Parameter scans of the holy-grail discriminant over the moduli plane and
//! zero-curve tracing by marching squares.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{holy_grail_h, su_normalize, trace_invariants};
use crate::error::{Error, Result};
use crate::group::{generators, ModuliPoint};

/// Words whose discriminant curves bound the plotted regions of the moduli plane.
pub const FIGURE_WORDS: [&str; 4] = ["I1I2I3I4", "I1I4I1I2I1I4I3", "I1I3I4I1I2", "I1I3I2I4I1I3I4"];

/// Name of the trace of the upper boundary `t = t_max(h)`.
pub const BOUNDARY_CURVE: &str = "boundary";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub h_range: (f64, f64),
    pub t_range: (f64, f64),
    /// Samples per axis.
    pub grid: usize,
    pub words: Vec<String>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            h_range: (0.5, 3.0),
            t_range: (0.0, PI),
            grid: 400,
            words: FIGURE_WORDS.iter().map(|w| w.to_string()).collect(),
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        let (h0, h1) = self.h_range;
        let (t0, t1) = self.t_range;
        if !(h0.is_finite() && h1.is_finite() && t0.is_finite() && t1.is_finite()) {
            return Err(Error::Usage("scan ranges must be finite".into()));
        }
        if h0 < 0.5 || h1 <= h0 {
            return Err(Error::Usage(format!("h range must satisfy 1/2 <= h0 < h1, got [{h0}, {h1}]")));
        }
        if t0 < 0.0 || t1 > PI + 1e-12 || t1 <= t0 {
            return Err(Error::Usage(format!("t range must lie in [0, pi] with t0 < t1, got [{t0}, {t1}]")));
        }
        if self.grid < 2 {
            return Err(Error::Usage(format!("grid resolution must be at least 2, got {}", self.grid)));
        }
        if self.words.is_empty() {
            return Err(Error::Usage("no words to scan".into()));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        let d = (range.1 - range.0) / (n - 1) as f64;
        (0..n)
            .map(|k| if k + 1 == n { range.1 } else { range.0 + k as f64 * d })
            .collect()
    }
}

/// `H(tau, sigma)` of the SU(3,1)-normalised word, scaled by `1 + |tau|^6`.
///
/// The second value is the raw discriminant; the first is what the tracer
/// drives to zero.
pub fn holy_grail_at(p: &ModuliPoint, word: &str) -> Result<(f64, f64)> {
    let gens = generators(p, 3)?;
    let g = su_normalize(&gens.eval(word)?)?;
    let inv = trace_invariants(g.matrix());
    let raw = holy_grail_h(inv.tau, inv.sigma);
    Ok((raw / (1.0 + inv.tau.norm().powi(6)), raw))
}

/// Discriminant values on a regular grid, `NaN` outside the moduli space.
#[derive(Debug, Clone, Serialize)]
pub struct ScanGrid {
    pub hs: Vec<f64>,
    pub ts: Vec<f64>,
    pub words: Vec<String>,
    /// `values[w][i * ts.len() + j]` at `(hs[i], ts[j])`.
    pub values: Vec<Vec<f64>>,
    pub in_moduli: Vec<bool>,
}

impl ScanGrid {
    pub fn len(&self) -> usize {
        self.hs.len() * self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn scan_grid(cfg: &ScanConfig) -> Result<ScanGrid> {
    cfg.validate()?;
    for w in &cfg.words {
        crate::group::parse_word(w)?;
    }
    let hs = ScanConfig::axis(cfg.h_range, cfg.grid);
    let ts = ScanConfig::axis(cfg.t_range, cfg.grid);
    let nt = ts.len();
    let rows: Vec<(Vec<bool>, Vec<Vec<f64>>)> = hs
        .par_iter()
        .map(|&h| {
            let mut inside = Vec::with_capacity(nt);
            let mut vals = vec![Vec::with_capacity(nt); cfg.words.len()];
            for &t in &ts {
                let p = ModuliPoint::new(h, t);
                let ok = p.status().in_moduli;
                inside.push(ok);
                for (k, w) in cfg.words.iter().enumerate() {
                    let v = if ok {
                        holy_grail_at(&p, w).map(|x| x.0).unwrap_or(f64::NAN)
                    } else {
                        f64::NAN
                    };
                    vals[k].push(v);
                }
            }
            (inside, vals)
        })
        .collect();
    let mut in_moduli = Vec::with_capacity(hs.len() * nt);
    let mut values = vec![Vec::with_capacity(hs.len() * nt); cfg.words.len()];
    for (inside, vals) in rows {
        in_moduli.extend(inside);
        for (k, v) in vals.into_iter().enumerate() {
            values[k].extend(v);
        }
    }
    Ok(ScanGrid {
        hs,
        ts,
        words: cfg.words.clone(),
        values,
        in_moduli,
    })
}

/// Polylines of a zero set in the `(h, t)` plane.
#[derive(Debug, Clone, Serialize)]
pub struct CurveTrace {
    pub word: String,
    pub polylines: Vec<Vec<(f64, f64)>>,
    /// Largest scaled discriminant at a vertex (zero for the boundary curve).
    pub max_residual: f64,
}

impl CurveTrace {
    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(Vec::len).sum()
    }
}

/// Grid edge identifier: `(i, j, horizontal)` with the edge starting at node `(i, j)`.
type EdgeId = (usize, usize, bool);

/// Trace the zero curves of every scanned word.
pub fn trace_curves(grid: &ScanGrid) -> Result<Vec<CurveTrace>> {
    grid.words
        .par_iter()
        .enumerate()
        .map(|(k, w)| trace_word(grid, k, w))
        .collect()
}

fn trace_word(grid: &ScanGrid, k: usize, word: &str) -> Result<CurveTrace> {
    let (nh, nt) = (grid.hs.len(), grid.ts.len());
    let v = &grid.values[k];
    let at = |i: usize, j: usize| v[i * nt + j];
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for i in 0..nh - 1 {
        for j in 0..nt - 1 {
            // corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            if c.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let edges: [EdgeId; 4] = [(i, j, true), (i + 1, j, false), (i, j + 1, true), (i, j, false)];
            let pos: Vec<bool> = c.iter().map(|&x| x > 0.0).collect();
            let crossing: Vec<usize> = (0..4).filter(|&e| pos[e] != pos[(e + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let centre = c.iter().sum::<f64>() / 4.0;
                    // join edges around the corners whose sign differs from the centre
                    if (centre > 0.0) == pos[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    let mut points: HashMap<EdgeId, (f64, f64, f64)> = HashMap::new();
    for &(a, b) in &segments {
        for e in [a, b] {
            if let std::collections::hash_map::Entry::Vacant(slot) = points.entry(e) {
                slot.insert(refine_edge(grid, e, word)?);
            }
        }
    }
    let polylines = chain(&segments)
        .into_iter()
        .map(|line| line.iter().map(|e| (points[e].0, points[e].1)).collect())
        .collect();
    let max_residual = points.values().map(|p| p.2).fold(0.0, f64::max);
    Ok(CurveTrace {
        word: word.to_string(),
        polylines,
        max_residual,
    })
}

/// Bisect the sign change along a grid edge; returns `(h, t, |scaled H|)`.
fn refine_edge(grid: &ScanGrid, e: EdgeId, word: &str) -> Result<(f64, f64, f64)> {
    let (i, j, horizontal) = e;
    let (a, b) = if horizontal {
        ((grid.hs[i], grid.ts[j]), (grid.hs[i + 1], grid.ts[j]))
    } else {
        ((grid.hs[i], grid.ts[j]), (grid.hs[i], grid.ts[j + 1]))
    };
    let f = |x: f64| holy_grail_at(&ModuliPoint::new(a.0 + x * (b.0 - a.0), a.1 + x * (b.1 - a.1)), word).map(|v| v.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            flo = 0.0;
            fhi = 0.0;
            break;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let (x, fx) = if flo.abs() <= fhi.abs() { (lo, flo) } else { (hi, fhi) };
    Ok((a.0 + x * (b.0 - a.0), a.1 + x * (b.1 - a.1), fx.abs()))
}

/// Join segments sharing an edge into polylines (closed ones repeat the first vertex).
fn chain(segments: &[(EdgeId, EdgeId)]) -> Vec<Vec<EdgeId>> {
    let mut adj: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        adj.entry(a).or_default().push(k);
        adj.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start: EdgeId, first: usize, used: &mut Vec<bool>| -> Vec<EdgeId> {
        let mut line = vec![start];
        let mut cur = start;
        let mut seg = Some(first);
        while let Some(s) = seg {
            used[s] = true;
            let (a, b) = segments[s];
            cur = if a == cur { b } else { a };
            line.push(cur);
            seg = adj[&cur].iter().copied().find(|&t| !used[t]);
        }
        line
    };
    // open curves start at edges used by a single segment
    let mut ends: Vec<EdgeId> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(e, _)| *e).collect();
    ends.sort_unstable();
    for e in ends {
        let s = adj[&e][0];
        if !used[s] {
            out.push(walk(e, s, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            out.push(walk(segments[s].0, s, &mut used));
        }
    }
    out
}

/// The upper boundary `t = t_max(h)` of the moduli space, sampled at `n` points.
pub fn boundary_curve(h_range: (f64, f64), t_range: (f64, f64), n: usize) -> CurveTrace {
    let n = n.max(2);
    let line: Vec<(f64, f64)> = ScanConfig::axis(h_range, n)
        .into_iter()
        .map(|h| (h, ModuliPoint::t_max(h)))
        .filter(|&(_, t)| t >= t_range.0 && t <= t_range.1)
        .collect();
    CurveTrace {
        word: BOUNDARY_CURVE.to_string(),
        polylines: if line.is_empty() { Vec::new() } else { vec![line] },
        max_residual: 0.0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub grid: ScanGrid,
    pub traces: Vec<CurveTrace>,
}

/// Grid scan, zero curves of every word, and the boundary curve.
pub fn run_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    let grid = scan_grid(cfg)?;
    let mut traces = trace_curves(&grid)?;
    traces.push(boundary_curve(cfg.h_range, cfg.t_range, cfg.grid));
    Ok(ScanResult { grid, traces })
}

fn fmt_value(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

/// `h,t,in_moduli,<word>...` with one row per grid node, `h` outermost.
pub fn write_grid_csv<W: Write>(grid: &ScanGrid, mut w: W) -> Result<()> {
    write!(w, "h,t,in_moduli")?;
    for word in &grid.words {
        write!(w, ",{word}")?;
    }
    writeln!(w)?;
    let nt = grid.ts.len();
    for (i, h) in grid.hs.iter().enumerate() {
        for (j, t) in grid.ts.iter().enumerate() {
            let k = i * nt + j;
            write!(w, "{},{},{}", fmt_value(*h), fmt_value(*t), u8::from(grid.in_moduli[k]))?;
            for vals in &grid.values {
                write!(w, ",{}", fmt_value(vals[k]))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// `curve,polyline,vertex,h,t` for every traced vertex.
pub fn write_traces_csv<W: Write>(traces: &[CurveTrace], mut w: W) -> Result<()> {
    writeln!(w, "curve,polyline,vertex,h,t")?;
    for c in traces {
        for (p, line) in c.polylines.iter().enumerate() {
            for (v, (h, t)) in line.iter().enumerate() {
                writeln!(w, "{},{p},{v},{},{}", c.word, fmt_value(*h), fmt_value(*t))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_grid_has_four_rows() {
        let cfg = ScanConfig {
            grid: 2,
            ..ScanConfig::default()
        };
        let g = scan_grid(&cfg).unwrap();
        assert_eq!(g.len(), 4);
        let mut buf = Vec::new();
        write_grid_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().all(|l| l.split(',').count() == 7));
    }

    #[test]
    fn rejects_bad_ranges() {
        let mut cfg = ScanConfig::default();
        cfg.h_range = (0.2, 1.0);
        assert!(cfg.validate().is_err());
        cfg.h_range = (1.0, 2.0);
        cfg.grid = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn chain_closes_a_square() {
        let e = |i, j, h| (i, j, h);
        let segs = [
            (e(0, 0, true), e(1, 0, false)),
            (e(1, 0, false), e(0, 1, true)),
            (e(0, 1, true), e(0, 0, false)),
            (e(0, 0, false), e(0, 0, true)),
        ];
        let lines = chain(&segs);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 5);
        assert_eq!(lines[0][0], lines[0][4]);
    }
}
