//! Computational toolkit for a family of complex hyperbolic reflection groups.
//!
//! The group is generated by four order-two complex reflections whose mirrors
//! realise a Gram matrix depending on a moduli point `(h, t)`. The crate builds
//! the matrices, classifies isometries by trace invariants, computes isometric
//! (Cygan) spheres in Heisenberg coordinates, parameterises Giraud disks, and
//! runs the checks behind a Ford-domain discreteness argument.
//!
//! Modules roughly layer as
//! `hermitian` -> `group`/`classify` -> `heisenberg` -> `giraud` -> `ford`,
//! with `scan`, `mesh` and `cli` on top.

pub mod classify;
pub mod cli;
pub mod error;
pub mod ford;
pub mod giraud;
pub mod group;
pub mod heisenberg;
pub mod hermitian;
pub mod mesh;
pub mod scan;
pub mod tol;

pub use error::{Error, Result};
pub use hermitian::{CMatrix, CVector, GroupElement, HermitianForm, C64};
pub use tol::Tolerances;
