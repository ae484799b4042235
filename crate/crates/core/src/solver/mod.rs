//! The Dirichlet harmonic-metric solver, the exhaustion-family driver, and
//! the paired-metric trace diagnostics.

mod dirichlet;
mod exhaustion;
pub mod field;
mod gmres;
mod heat_flow;
mod newton;
mod residual;
mod pair;

pub use dirichlet::{
    hitchin_residual, hx_boundary, project_compatible, project_field, solve_dirichlet, Method,
    ResidualReport,
    SolverConfig,
};
pub use exhaustion::{exhaustion_sequence, ExhaustionBaseline, ExhaustionReport};
pub use field::{theta_field, BoundaryMetric, MetricField};
pub use pair::{metric_pair_diagnostics, PairReport};
pub use residual::{build_cache, directional_derivative, orthonormal_residual};
