//! Extremal potentials for Schrodinger energies on finite-difference grids.
//!
//! The crate discretizes `E_f(V) = min ½∫|∇u|² + ½∫Vu² − ⟨f,u⟩`, computes the
//! maximizing potential under `‖V‖_{L^p} ≤ 1` and the minimizing potential under
//! `‖1/V‖_{L^p} ≤ 1`, and checks quantitative stability inequalities around them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fields;
pub mod grid;
pub mod inequalities;
pub mod linalg;
pub mod optimal;
pub mod radial;
pub mod sampling;
pub mod schrodinger;
pub mod stability;

pub use error::{Error, Result};
pub use grid::{Domain, DomainKind, Grid, GridFunction};
pub use optimal::{MaxExtremal, MinExtremal, ReciprocalPotential};
pub use schrodinger::{EnergyResult, Potential, SourceTerm};
