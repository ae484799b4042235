//! Finite-dimensional machinery: symmetric pairings, compatible Hermitian
//! metrics, Gram–Schmidt transitions, real structures, quasi-cyclic vectors
//! and the ν-split eigenvalue bound.
//!
//! Everything here is a pure function over immutable values; operations are
//! deterministic given a seed and safe to call concurrently.

mod gram;
mod metric;
mod nu_split;
mod pairing;
mod quasi_cyclic;
mod real_structure;

pub use gram::{
    check_triangular_identities, endo_norm, endo_norm_fro, filtration_dets,
    gram_schmidt_transition, slot_metrics, TriangularIdentityReport, TriangularTransition,
};
pub use metric::{
    det_of, project_to_compatible_tangent, random_hermitian, sample_compatible_metric,
    sample_compatible_metric_with_amplitude, CompatibleMetric, EPS_COMPAT,
};
pub use nu_split::{nu_split_bound, NuSplitReport};
pub use pairing::{compatibility_residual, Ordering, PairingMatrix};
pub use quasi_cyclic::{
    endomorphism_norm, quasi_cyclic_stability_margin, quasi_cyclic_volume, stability_epsilon0,
    vector_norm, StabilityReport,
};
pub use real_structure::{
    comparison_eigen, eigenspace_exchange_angle, real_structure, real_structure_of,
    ComparisonEigen, RealStructure,
};
