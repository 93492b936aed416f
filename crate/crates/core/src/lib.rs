//! A numerical laboratory for the complete Euler system of gas dynamics.
//!
//! The crate evolves the conservative variables `(rho, m, E)` with first-order
//! finite-volume schemes, measures how well the resulting trajectories satisfy
//! the weak form of the equations (consistency residuals), compares ensembles
//! of candidate solutions through measure-valued diagnostics, and selects a
//! distinguished member with entropy-based criteria: entropy-history orders,
//! a two-step convex procedure, a single-step divergence to the background
//! equilibrium, and a temperature-lift construction that trades an energy
//! defect for an entropy jump.
//!
//! A narrative guide with runnable examples lives in `book/`; every code
//! snippet there is compiled and executed as part of `cargo test --doc`.

pub mod consistency;
pub mod dmv;
pub mod domain;
pub mod riemann;
pub mod selection;
pub mod solver;
pub mod thermo;

#[cfg(doctest)]
mod book;
