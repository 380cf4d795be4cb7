//! Numerical laboratory for winding-number statistics of chiral (BDI)
//! random matrix fields K(p) = a(p)K₁ + b(p)K₂ with real Ginibre K₁, K₂.
//!
//! Two independent routes are provided and cross-checked:
//! Monte Carlo averages over the Ginibre ensemble ([`oracle`], [`winding`],
//! [`spherical`]) and the analytic Pfaffian representation of the
//! generating function built from three kernel functions ([`kernels`],
//! [`pfassembly`]).

pub mod ensembles;
pub mod error;
pub mod json;
pub mod kernels;
pub mod linalg;
pub mod oracle;
pub mod pair;
pub mod pfassembly;
pub mod quad;
pub mod rng;
pub mod specfun;
pub mod spherical;
pub mod winding;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version recorded in every emitted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
