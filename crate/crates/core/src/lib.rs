//! Spectral toolkit for the mild solution of `∂ₜu = Δu + F(∇u)·b` on the
//! torus, where the drift `b` may be a distribution of negative Besov
//! regularity, together with the Monte Carlo virtual solution of the
//! associated quadratic BSDE.
//!
//! Module map:
//! - [`spectral`]: periodic fields, Littlewood-Paley blocks, Besov/Hölder
//!   norms, heat semigroup.
//! - [`paraproduct`]: dealiased products and Bony decomposition.
//! - [`roughfield`]: seeded rough coefficients `b ∈ L∞_T C^β`.
//! - [`nonlinearity`]: the map `F` and its assumption checks.
//! - [`mildsolver`]: Duhamel operators, contraction parameters, Picard solve.
//! - [`bsde`]: backward PDE, auxiliary PDE and virtual BSDE solutions.
//! - [`oracle`]: Cole-Hopf and Crank-Nicolson reference solutions.
//! - [`io`]: field files, bundles and CSV output.
//! - [`expr`]: the small arithmetic language for custom `F`, `b` and `u₀`.
//! - [`validation`]: the self-check suites behind `roughpde validate`.

pub mod bsde;
pub mod error;
pub mod expr;
pub mod io;
pub mod mildsolver;
pub mod nonlinearity;
pub mod oracle;
pub mod paraproduct;
pub mod roughfield;
pub mod spectral;
pub mod validation;

pub use error::{Error, Result};
pub use mildsolver::{MildSolution, SolverParams, TimeField};
pub use nonlinearity::Nonlinearity;
pub use roughfield::RoughCoefficient;
pub use spectral::{Grid, SpectralField};
