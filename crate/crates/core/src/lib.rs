//! Reduced-variable solvers for isothermal multicomponent compressible flow.
//!
//! A mixture of `N` species is described by partial densities `ρ_i`. The
//! library works in the variables `(ϱ, q, v)`: total density, `N − 1`
//! relative chemical potentials and the barycentric velocity.
//!
//! - [`thermo`]: free energies, chemical potentials and convex conjugation.
//! - [`changevar`]: the map `ρ ↔ (ϱ, q)` and its coefficient functions.
//! - [`mobility`]: Onsager mobility, reactions and SPD-product spectra.
//! - [`discretization`]: 1D grid, fields, difference operators, banded solves.
//! - [`solver`]: the fixed-point maps over a time window.
//! - [`diagnostics`]: norms, Hölder seminorms, density certificates.
//! - [`scenario`]: configuration files, runs, sweeps and output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod changevar;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod mobility;
pub mod scenario;
pub mod solver;
pub mod thermo;

pub use error::{Error, Result};
