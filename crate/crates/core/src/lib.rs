//! Numerical laboratory for SO₀(n,n) Higgs bundles in the Hitchin section:
//! finite-dimensional identities for compatible metrics, construction of the
//! bundle data and the diagonal reference metric h_X, a Dirichlet solver for
//! the Hitchin equation on geodesic disks in the Poincaré disk, and
//! diagnostics for the domination, energy and subharmonicity properties of
//! the solved metrics.

pub mod algebra;
pub mod bundle;
pub mod domain;
pub mod error;
pub mod linalg;
pub mod output;
pub mod diagnostics;
pub mod solver;

pub use error::{Error, Result};
