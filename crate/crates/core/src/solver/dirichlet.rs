//! The Dirichlet problem: a unique harmonic metric on the geodesic disk with
//! prescribed compatible boundary values, found by Newton–Krylov or by the
//! implicit heat flow, starting from the diagonal reference metric.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundle::{hx_matrix, theta_matrices, BundleSpec, HiggsTuple};
use crate::domain::DiskGrid;
use crate::error::{Error, Result};
use crate::linalg::{herm_fn, hermitize, CMatrix};

use super::field::{theta_field, BoundaryMetric, MetricField};
use super::heat_flow::{heat_flow_solve, FlowOptions};
use super::newton::{newton_solve, NewtonOptions};
use super::residual::{build_cache, orthonormal_residual};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Newton,
    HeatFlow,
}

/// Solver configuration; all tolerances positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Krylov inner-solve controls
    pub gmres_rel_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
    /// backtracking limit of the damping rule
    pub max_halvings: usize,
    /// initial step of the heat flow; steps adapt by doubling and halving
    pub flow_initial_dt: f64,
    /// project the iterate onto the compatible set every k accepted steps
    /// (None = off; compatibility is an emergent diagnostic by default)
    pub compat_projection_every: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Newton,
            residual_tol: 1e-8,
            max_iterations: 25,
            gmres_rel_tol: 1e-4,
            gmres_restart: 120,
            gmres_max_iters: 4000,
            max_halvings: 30,
            flow_initial_dt: 0.25,
            compat_projection_every: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if !(self.residual_tol > 0.0) {
            violations.push("residual_tol must be positive".to_string());
        }
        if self.max_iterations == 0 {
            violations.push("max_iterations must be positive".to_string());
        }
        if !(self.gmres_rel_tol > 0.0 && self.gmres_rel_tol < 1.0) {
            violations.push("gmres_rel_tol must lie in (0,1)".to_string());
        }
        if !(self.flow_initial_dt > 0.0) {
            violations.push("flow_initial_dt must be positive".to_string());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig { violations })
        }
    }
}

/// Everything reproducible about one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub method: Method,
    pub sup_residual: f64,
    pub iterations: usize,
    pub iteration_trace: Vec<f64>,
    pub compatibility_drift: f64,
    pub block_offdiagonal: f64,
    pub positivity_min_eig: f64,
}

/// Boundary data sampling the diagonal reference metric on the boundary ring.
pub fn hx_boundary(spec: &BundleSpec, grid: &DiskGrid) -> BoundaryMetric {
    let g = grid.g_ring[grid.nr - 1];
    BoundaryMetric { values: (0..grid.nphi).map(|_| hx_matrix(spec, g)).collect() }
}

/// Initial iterate: h_X at interior nodes, the prescribed data on the
/// boundary ring.
fn initial_field(spec: &BundleSpec, grid: &DiskGrid, boundary: &BoundaryMetric) -> Vec<CMatrix> {
    let mut h: Vec<CMatrix> = (0..grid.node_count())
        .map(|p| hx_matrix(spec, grid.g(p)))
        .collect();
    for (j, p) in grid.boundary_nodes().enumerate() {
        h[p] = boundary.values[j].clone();
    }
    h
}

/// Retraction onto the compatible set: H = exp(M) with the Hermitian
/// logarithm projected onto the −1 eigenspace of M ↦ −C·conj(M)·C.
pub fn project_compatible(spec: &BundleSpec, h: &CMatrix) -> CMatrix {
    let m = herm_fn(h, f64::ln);
    let proj = crate::algebra::project_to_compatible_tangent(&m, &spec.c_weight);
    herm_fn(&proj, f64::exp)
}

/// Nodewise compatibility retraction of a whole field (boundary included).
pub fn project_field(spec: &BundleSpec, field: &MetricField) -> MetricField {
    MetricField {
        grid: Arc::clone(&field.grid),
        h: field.h.iter().map(|h| project_compatible(spec, h)).collect(),
    }
}

/// Solves the Dirichlet problem for θ(q) on the grid with the given
/// compatible boundary metric. Returns the converged field and its report.
pub fn solve_dirichlet(
    spec: &BundleSpec,
    q: &HiggsTuple,
    grid: &Arc<DiskGrid>,
    boundary: &BoundaryMetric,
    config: &SolverConfig,
) -> Result<(MetricField, ResidualReport)> {
    config.validate()?;
    if boundary.values.len() != grid.nphi {
        return Err(Error::Precondition(format!(
            "boundary data has {} samples, boundary ring has {}",
            boundary.values.len(),
            grid.nphi
        )));
    }
    boundary.validate(spec, 1e-8)?;

    let a = theta_field(spec, q, grid);
    let adag: Vec<CMatrix> = a.iter().map(|m| m.adjoint()).collect();
    let h0 = initial_field(spec, grid, boundary);

    let outcome = match config.method {
        Method::Newton => {
            let opts = NewtonOptions {
                residual_tol: config.residual_tol,
                max_iterations: config.max_iterations,
                gmres_rel_tol: config.gmres_rel_tol,
                gmres_restart: config.gmres_restart,
                gmres_max_iters: config.gmres_max_iters,
                max_halvings: config.max_halvings,
            };
            newton_solve(grid, &a, &adag, h0, &opts)?
        }
        Method::HeatFlow => {
            let opts = FlowOptions {
                residual_tol: config.residual_tol,
                max_steps: config.max_iterations.max(200),
                initial_dt: config.flow_initial_dt,
                gmres_rel_tol: config.gmres_rel_tol,
                gmres_restart: config.gmres_restart,
                gmres_max_iters: config.gmres_max_iters,
            };
            heat_flow_solve(grid, &a, &adag, h0, &opts)?
        }
    };

    let mut h = outcome.h;
    if let Some(every) = config.compat_projection_every {
        if every > 0 {
            for p in grid.interior_nodes() {
                h[p] = project_compatible(spec, &hermitize(&h[p]));
            }
        }
    }

    let field = MetricField { grid: Arc::clone(grid), h };
    field.check_positive()?;
    let report = ResidualReport {
        method: config.method,
        sup_residual: outcome.sup_residual,
        iterations: outcome.iterations,
        iteration_trace: outcome.trace,
        compatibility_drift: field.compatibility_drift(spec),
        block_offdiagonal: field.block_offdiagonal(spec),
        positivity_min_eig: field.min_eigenvalue(),
    };
    Ok((field, report))
}

/// The public residual operator: the per-node Hermitian matrix of
/// iΛ(F(H) + [θ, θ^{*H}]) expressed in an h-orthonormal frame, plus its sup
/// Frobenius norm over interior nodes.
pub fn hitchin_residual(
    spec: &BundleSpec,
    q: &HiggsTuple,
    field: &MetricField,
) -> Result<(Vec<CMatrix>, f64)> {
    field.check_positive()?;
    let grid = &field.grid;
    let a: Vec<CMatrix> = (0..grid.node_count())
        .map(|p| theta_matrices(spec, q, grid.z(p)).1)
        .collect();
    let adag: Vec<CMatrix> = a.iter().map(|m| m.adjoint()).collect();
    let cache = build_cache(grid, &a, &adag, &field.h)?;
    let (rhat, sup) = orthonormal_residual(grid, &field.h, &cache.g_field)?;
    Ok((rhat, sup))
}
