//! Expected products of step lengths for open and closed tours over
//! independent standard Gaussian points.
//!
//! For `n + 1` points `r_0, ..., r_n` in `R^d` with i.i.d. `N(0, I)`
//! coordinates, the open tour mean is `mu(d, n) = E Π |r_i - r_{i-1}|` and
//! the closed tour mean `nu(d, n)` additionally multiplies by
//! `|r_0 - r_n|` (with `n` points).
//!
//! Values come from four engines: the catalogue of exact forms, nested
//! adaptive quadrature, the Bessel series for correlated planar steps and
//! seeded Monte Carlo.

pub mod catalogue;
pub mod correlation;
pub mod error;
pub mod monte_carlo;
pub mod par;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod tour;

pub use error::{Error, Result};
pub use par::Execution;
pub use report::{RunConfig, RunReport};
pub use tour::{Topology, TourSpec};
