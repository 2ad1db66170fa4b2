//! Command-line front end.
//!
//! Exit codes: 0 success or passing verdict, 1 failing verdict, 2 usage or
//! input errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classify::{classify, eigen_order, IsometryClass};
use crate::error::{Error, Result};
use crate::ford::{build_word_set, full_audit, neighborhood_audit, sphere_table};
use crate::group::{generators, ModuliPoint};
use crate::mesh::word_mesh;
use crate::scan::{run_scan, write_grid_csv, write_traces_csv, ScanConfig};
use crate::tol::Tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chford", version, about = "Isometric spheres, Giraud disks and Ford domain audits")]
pub struct Cli {
    /// TOML config; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan the discriminants of words over the moduli plane (CSV).
    Scan(CommonArgs),
    /// Triangulate the spinal sphere of a word's isometric sphere (OBJ).
    Mesh(CommonArgs),
    /// Run the verification audits and write a JSON report.
    Verify(CommonArgs),
    /// Classify words at a moduli point (JSON).
    Classify(CommonArgs),
    /// Centers and radii of the isometric spheres in the word set (JSON).
    Spheres(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Grid resolution (scan) or latitude bands (mesh).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Word to use; repeat for several.
    #[arg(long = "word")]
    pub words: Vec<String>,
    /// Output file (directory for scan); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the full audit on the 3x3 slice instead of the neighborhood audit.
    #[arg(long)]
    pub full: bool,
    #[arg(long = "tol-id")]
    pub tol_id: Option<f64>,
    #[arg(long = "tol-geom")]
    pub tol_geom: Option<f64>,
    #[arg(long = "k-max")]
    pub k_max: Option<i32>,
}

/// Values read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub h: Option<f64>,
    pub t: Option<f64>,
    pub grid: Option<usize>,
    pub words: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub full: Option<bool>,
    pub tol_id: Option<f64>,
    pub tol_geom: Option<f64>,
    pub k_max: Option<i32>,
    pub h_range: Option<(f64, f64)>,
    pub t_range: Option<(f64, f64)>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Flags merged over the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub h: Option<f64>,
    pub t: Option<f64>,
    pub grid: Option<usize>,
    pub words: Vec<String>,
    pub out: Option<PathBuf>,
    pub full: bool,
    pub k_max: i32,
    pub tol: Tolerances,
    pub h_range: Option<(f64, f64)>,
    pub t_range: Option<(f64, f64)>,
}

impl Settings {
    pub fn merge(file: FileConfig, args: CommonArgs) -> Result<Self> {
        let mut tol = Tolerances::default();
        if let Some(x) = args.tol_id.or(file.tol_id) {
            tol.identity = x;
        }
        if let Some(x) = args.tol_geom.or(file.tol_geom) {
            tol.geometric = x;
        }
        if !(tol.identity > 0.0 && tol.geometric > 0.0) {
            return Err(Error::Usage("tolerances must be positive".into()));
        }
        let k_max = args.k_max.or(file.k_max).unwrap_or(5);
        if k_max < 0 {
            return Err(Error::Usage(format!("k-max must be non-negative, got {k_max}")));
        }
        Ok(Settings {
            h: args.h.or(file.h),
            t: args.t.or(file.t),
            grid: args.grid.or(file.grid),
            words: if args.words.is_empty() {
                file.words.unwrap_or_default()
            } else {
                args.words
            },
            out: args.out.or(file.out),
            full: args.full || file.full.unwrap_or(false),
            k_max,
            tol,
            h_range: file.h_range,
            t_range: file.t_range,
        })
    }

    /// `(h, t)`, defaulting to the base point; `t` defaults to the slice when only `h` is given.
    fn point(&self) -> ModuliPoint {
        let base = ModuliPoint::base_point();
        match (self.h, self.t) {
            (None, None) => base,
            (Some(h), None) => ModuliPoint::on_2d_slice(h),
            (None, Some(t)) => ModuliPoint::new(base.h, t),
            (Some(h), Some(t)) => ModuliPoint::new(h, t),
        }
    }

    fn checked_point(&self) -> Result<ModuliPoint> {
        let p = self.point();
        ModuliPoint::checked(p.h, p.t)
    }
}

/// Run the CLI and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("chford: {e}");
            EXIT_USAGE
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Scan(a) => cmd_scan(&Settings::merge(file, a)?),
        Command::Mesh(a) => cmd_mesh(&Settings::merge(file, a)?),
        Command::Verify(a) => cmd_verify(&Settings::merge(file, a)?),
        Command::Classify(a) => cmd_classify(&Settings::merge(file, a)?),
        Command::Spheres(a) => cmd_spheres(&Settings::merge(file, a)?),
    }
}

fn write_output(out: Option<&Path>, body: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut s = io::stdout().lock();
            s.write_all(body)?;
            s.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

pub fn cmd_scan(s: &Settings) -> Result<i32> {
    let mut cfg = ScanConfig::default();
    if let Some(g) = s.grid {
        cfg.grid = g;
    }
    if !s.words.is_empty() {
        cfg.words = s.words.clone();
    }
    if let Some(r) = s.h_range {
        cfg.h_range = r;
    }
    if let Some(r) = s.t_range {
        cfg.t_range = r;
    }
    let res = run_scan(&cfg)?;
    match &s.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            let mut grid = Vec::new();
            write_grid_csv(&res.grid, &mut grid)?;
            write_output(Some(&dir.join("scan.csv")), &grid)?;
            let mut curves = Vec::new();
            write_traces_csv(&res.traces, &mut curves)?;
            write_output(Some(&dir.join("curves.csv")), &curves)?;
        }
        None => {
            let mut grid = Vec::new();
            write_grid_csv(&res.grid, &mut grid)?;
            write_output(None, &grid)?;
        }
    }
    for c in &res.traces {
        eprintln!(
            "{}: {} polyline(s), {} vertices, max residual {:e}",
            c.word,
            c.polylines.len(),
            c.vertex_count(),
            c.max_residual
        );
    }
    Ok(EXIT_OK)
}

pub fn cmd_mesh(s: &Settings) -> Result<i32> {
    let p = s.checked_point()?;
    let gens = generators(&p, 2)?;
    let word = s.words.first().map(String::as_str).unwrap_or("C");
    let (sphere, mesh) = word_mesh(&gens, word, s.grid.unwrap_or(32))?;
    let mut body = Vec::new();
    writeln!(
        body,
        "# isometric sphere of {word}: center ({}, {}, {}), radius {}",
        sphere.center.z[0].re, sphere.center.z[0].im, sphere.center.t, sphere.radius
    )?;
    mesh.write_obj(&mut body)?;
    write_output(s.out.as_deref(), &body)?;
    Ok(EXIT_OK)
}

pub fn cmd_verify(s: &Settings) -> Result<i32> {
    let p = s.checked_point()?;
    let (body, verdict) = if s.full {
        let r = full_audit(&p, s.k_max, &s.tol)?;
        (to_json(&r)?, r.verdict)
    } else {
        let r = neighborhood_audit(&p, s.k_max, &s.tol)?;
        (to_json(&r)?, r.verdict)
    };
    write_output(s.out.as_deref(), &body)?;
    Ok(if verdict { EXIT_OK } else { EXIT_FAIL })
}

#[derive(Debug, Serialize)]
struct ClassifyRecord {
    word: String,
    class: IsometryClass,
    /// Order read off the eigenvalues, for elliptic elements of order at most 60.
    eigen_order: Option<u32>,
}

#[derive(Debug, Serialize)]
struct ClassifyReport {
    h: f64,
    t: f64,
    dim: usize,
    records: Vec<ClassifyRecord>,
}

pub fn cmd_classify(s: &Settings) -> Result<i32> {
    let p = s.checked_point()?;
    let gens = generators(&p, 3)?;
    let words = if s.words.is_empty() {
        crate::scan::FIGURE_WORDS.iter().map(|w| w.to_string()).collect()
    } else {
        s.words.clone()
    };
    let mut records = Vec::new();
    for w in words {
        let class = classify(&gens.eval(&w)?, &s.tol)?;
        let order = eigen_order(&class.eigenvalues, 60, s.tol.cluster);
        records.push(ClassifyRecord {
            word: w,
            class,
            eigen_order: order,
        });
    }
    write_output(
        s.out.as_deref(),
        &to_json(&ClassifyReport {
            h: p.h,
            t: p.t,
            dim: 3,
            records,
        })?,
    )?;
    Ok(EXIT_OK)
}

pub fn cmd_spheres(s: &Settings) -> Result<i32> {
    let p = s.checked_point()?;
    let dim = if p.status().is_2d_slice { 2 } else { 3 };
    let gens = generators(&p, dim)?;
    let table = sphere_table(&gens, &build_word_set(s.k_max))?;
    #[derive(Serialize)]
    struct Out<'a> {
        h: f64,
        t: f64,
        dim: usize,
        spheres: &'a [crate::ford::SphereEntry],
    }
    write_output(
        s.out.as_deref(),
        &to_json(&Out {
            h: p.h,
            t: p.t,
            dim,
            spheres: &table,
        })?,
    )?;
    Ok(EXIT_OK)
}
