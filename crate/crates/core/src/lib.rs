//! Surface phase-field simulator on implicit geometries.
//!
//! The library solves Allen-Cahn and Cahn-Hilliard equations posed on a
//! closed surface given as the zero set of a level-set function. The surface
//! is never meshed directly: a background tetrahedral mesh is refined toward
//! the zero set, the surface is reconstructed cell-wise from the interpolated
//! level set, and the PDE is discretized with piecewise-linear bulk finite
//! elements restricted to that reconstruction, stabilized by a normal-gradient
//! volume term. Time stepping is semi-implicit BDF2 with an extrapolated
//! potential and an optional second-difference stabilization.
//!
//! Module map:
//! - [`geom`]: level sets, normals, closest-point projection
//! - [`mesh`]: background mesh, conforming bisection refinement, narrow band
//! - [`cut`]: surface reconstruction, quadrature, discrete normals
//! - [`fe`]: degrees of freedom, sparse operators, assembly
//! - [`solver`]: Krylov and direct linear solvers
//! - [`model`]: Allen-Cahn / Cahn-Hilliard steppers
//! - [`diagnostics`]: energies, norms, interface statistics, CSV output
//! - [`manufactured`]: closed-form solutions and forcings for validation
//! - [`config`] / [`sim`]: run configuration, presets, experiment drivers
//! - [`vtk`]: snapshot export

pub mod config;
pub mod cut;
pub mod diagnostics;
pub mod expr;
pub mod fe;
pub mod geom;
pub mod manufactured;
pub mod mesh;
pub mod model;
pub mod quad;
pub mod sim;
pub mod solver;
pub mod vtk;
