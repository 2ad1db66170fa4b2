//! Triangulated spinal spheres in Heisenberg coordinates `(x, y, t)`.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GeneratorSet;
use crate::heisenberg::{cygan_sphere_residual, isometric_sphere, spinal_sphere_point, CyganSphere, HeisenbergPoint};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based, oriented so that [`Mesh::signed_volume`] is positive.
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn centroid(&self) -> [f64; 3] {
        let n = self.vertices.len().max(1) as f64;
        let mut c = [0.0; 3];
        for v in &self.vertices {
            for k in 0..3 {
                c[k] += v[k] / n;
            }
        }
        c
    }

    /// Volume enclosed, by the divergence theorem over the faces.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]];
                (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0]))
                    / 6.0
            })
            .sum()
    }

    /// Largest `| |z-z0|^2 + i(...) | - r^2` over the vertices.
    pub fn max_residual(&self, s: &CyganSphere) -> f64 {
        self.vertices
            .iter()
            .map(|v| cygan_sphere_residual(&HeisenbergPoint::from_xyt(v[0], v[1], v[2]), s).abs())
            .fold(0.0, f64::max)
    }

    /// Euclidean distance from `p` to the nearest vertex.
    pub fn nearest_vertex_distance(&self, p: [f64; 3]) -> f64 {
        self.vertices
            .iter()
            .map(|v| ((v[0] - p[0]).powi(2) + (v[1] - p[1]).powi(2) + (v[2] - p[2]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Wavefront OBJ: `v x y t` lines, then one-based `f i j k` lines.
    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for f in &self.faces {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }
}

/// Latitude-longitude triangulation of the spinal sphere of `s`.
///
/// `resolution` latitude bands (rounded up to even, so the equator `phi = 0`
/// is a ring) and `2 * resolution` meridians (so `psi = pi` is a meridian).
pub fn sphere_mesh(s: &CyganSphere, resolution: usize) -> Result<Mesh> {
    if s.center.z.len() != 1 {
        return Err(Error::OutOfScope("meshes are only built for the 3-dimensional Heisenberg group".into()));
    }
    if resolution < 2 {
        return Err(Error::Usage(format!("mesh resolution must be at least 2, got {resolution}")));
    }
    let bands = resolution + resolution % 2;
    let meridians = 2 * bands;
    let xyt = |p: HeisenbergPoint| [p.z[0].re, p.z[0].im, p.t];
    let mut vertices = vec![xyt(spinal_sphere_point(s, -PI / 2.0, 0.0))];
    for i in 1..bands {
        let phi = -PI / 2.0 + PI * i as f64 / bands as f64;
        for j in 0..meridians {
            let psi = 2.0 * PI * j as f64 / meridians as f64;
            vertices.push(xyt(spinal_sphere_point(s, phi, psi)));
        }
    }
    let top = vertices.len();
    vertices.push(xyt(spinal_sphere_point(s, PI / 2.0, 0.0)));
    let ring = |i: usize, j: usize| 1 + (i - 1) * meridians + j % meridians;
    let mut faces = Vec::new();
    for j in 0..meridians {
        faces.push([0, ring(1, j + 1), ring(1, j)]);
    }
    for i in 1..bands - 1 {
        for j in 0..meridians {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j + 1), ring(i + 1, j));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    for j in 0..meridians {
        faces.push([top, ring(bands - 1, j), ring(bands - 1, j + 1)]);
    }
    Ok(Mesh { vertices, faces })
}

/// Mesh of the isometric sphere of a word.
pub fn word_mesh(gens: &GeneratorSet, word: &str, resolution: usize) -> Result<(CyganSphere, Mesh)> {
    let s = isometric_sphere(&gens.eval(word)?)?;
    let m = sphere_mesh(&s, resolution)?;
    Ok((s, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{generators, ModuliPoint};

    #[test]
    fn counts_and_closure() {
        let g = generators(&ModuliPoint::base_point(), 2).unwrap();
        let (_, m) = word_mesh(&g, "C", 8).unwrap();
        assert_eq!(m.vertices.len(), 2 + 7 * 16);
        // closed surface: V - E + F = 2 with E = 3F/2
        assert_eq!(m.vertices.len() as i64 - (3 * m.faces.len() / 2) as i64 + m.faces.len() as i64, 2);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn identity_has_no_mesh() {
        let g = generators(&ModuliPoint::base_point(), 2).unwrap();
        assert!(word_mesh(&g, "A", 4).is_err());
    }
}
