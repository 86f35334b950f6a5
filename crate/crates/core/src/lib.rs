//! Overlapping sweeping domain decomposition for the 2D Helmholtz equation.
//!
//! The crate discretizes `(-k^2 - Δ) u = f` on a rectangle with a 5-point
//! finite-difference stencil, splits the grid into overlapping vertical
//! strips coupled by first-order absorbing (Robin) transmission conditions,
//! and solves the resulting interface (substructured) system
//! `(Id - T) h = G` with right-preconditioned GMRES. Three preconditioners
//! are provided: identity (Jacobi), the double sweep, and the overlapping
//! splitting double sweep (OSDS). The [`symbols`] module evaluates the
//! Fourier-symbol convergence analysis for strips of the plane or of a
//! waveguide, and [`bench`] reproduces the waveguide, open cavity and wedge
//! experiments.

pub mod banded;
pub mod bench;
pub mod decomp;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod local;
pub mod substructure;
pub mod symbols;

pub use num_complex::Complex64;

pub use error::{Error, Result};

/// The imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// How independent per-strip work is scheduled.
///
/// Results are bitwise identical in both modes: every strip writes to its
/// own output blocks and no cross-strip reduction is performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}
