//! Comparison of two metrics on the same grid through the automorphism s
//! with h₂ = h₁·s, and the discrete subharmonicity of tr(s) that a pair of
//! harmonic metrics must exhibit.

use serde::{Deserialize, Serialize};

use crate::domain::laplacian_gx;
use crate::error::{Error, Result};
use crate::linalg::{inv, CMatrix, C64};

use super::field::MetricField;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairReport {
    /// sup over interior nodes of √−1Λ∂̄∂ tr(s) = −½·Δ_{g_X} tr(s);
    /// nonpositive up to discretization for a harmonic pair
    pub sup_subharmonic_defect: f64,
    /// same quantity for log tr(s)
    pub sup_log_subharmonic_defect: f64,
    pub max_interior_trace: f64,
    pub max_boundary_trace: f64,
    pub min_trace: f64,
}

/// s-field and Simpson-style trace diagnostics for two metrics on one grid.
pub fn metric_pair_diagnostics(
    h1: &MetricField,
    h2: &MetricField,
) -> Result<(Vec<CMatrix>, PairReport)> {
    let grid = &h1.grid;
    if h2.grid.nr != grid.nr || h2.grid.nphi != grid.nphi
        || (h2.grid.radius - grid.radius).abs() > 1e-14
    {
        return Err(Error::GridMismatch);
    }
    let nodes = grid.node_count();
    let mut s_field = Vec::with_capacity(nodes);
    let mut tr = vec![C64::new(0.0, 0.0); nodes];
    let mut log_tr = vec![C64::new(0.0, 0.0); nodes];
    for p in 0..nodes {
        let x = inv(&h1.h[p]).ok_or(Error::PositivityLoss {
            node: p,
            r: grid.r(p),
            phi: grid.phi(p),
        })?;
        let s = x * &h2.h[p];
        let t = s.trace().re;
        tr[p] = C64::new(t, 0.0);
        log_tr[p] = C64::new(t.ln(), 0.0);
        s_field.push(s);
    }

    let lap = laplacian_gx(grid, &tr);
    let lap_log = laplacian_gx(grid, &log_tr);
    let mut sup = f64::NEG_INFINITY;
    let mut sup_log = f64::NEG_INFINITY;
    let mut max_int = f64::NEG_INFINITY;
    let mut min_tr = f64::INFINITY;
    for p in grid.interior_nodes() {
        sup = sup.max(-0.5 * lap[p].re);
        sup_log = sup_log.max(-0.5 * lap_log[p].re);
        max_int = max_int.max(tr[p].re);
        min_tr = min_tr.min(tr[p].re);
    }
    let mut max_bdry = f64::NEG_INFINITY;
    for p in grid.boundary_nodes() {
        max_bdry = max_bdry.max(tr[p].re);
        min_tr = min_tr.min(tr[p].re);
    }
    Ok((
        s_field,
        PairReport {
            sup_subharmonic_defect: sup,
            sup_log_subharmonic_defect: sup_log,
            max_interior_trace: max_int,
            max_boundary_trace: max_bdry,
            min_trace: min_tr,
        },
    ))
}
