//! The exhaustion family: Dirichlet solves on a growing sequence of geodesic
//! disks with the reference boundary metric, compared on a fixed probe disk.
//! The successive differences are the numerical signature of the convergence
//! of the family to the global harmonic metric.
//!
//! The comparison automorphisms s_i = h_X⁻¹·h_i are formed against a choice
//! of realization of h_X on each grid: either the analytic diagonal metric,
//! or the same-grid q = 0 Dirichlet solution. The latter cancels the
//! discretization bias shared by the two solves, which otherwise swamps the
//! exhaustion differences on the larger disks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundle::{hx_field, BundleSpec, HiggsTuple};
use crate::domain::build_grid;
use crate::error::{Error, Result};
use crate::linalg::{herm_eigen, herm_fn, hermitize, inv, CMatrix};

use super::dirichlet::{hx_boundary, solve_dirichlet, ResidualReport, SolverConfig};
use super::field::MetricField;

/// Which realization of the reference metric the comparison uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustionBaseline {
    /// the analytic diagonal metric sampled on the grid
    Analytic,
    /// the q = 0 Dirichlet solution on the same grid (bias-cancelling)
    DiscreteQZero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustionReport {
    pub radii: Vec<f64>,
    pub baseline: ExhaustionBaseline,
    /// d_i = sup over the probe disk of |log spectrum(s_i·s_{i+1}⁻¹)|
    pub differences: Vec<f64>,
    /// per-radius solver reports
    pub solves: Vec<ResidualReport>,
    /// empirical ratios d_i/d_{i+1}; no rate is asserted, only recorded
    pub contraction_ratios: Vec<f64>,
}

/// Interpolates the metric at (probe radius, grid angle j) by 4-point
/// Lagrange interpolation along the rings.
fn interp_radial(field: &MetricField, r: f64, j: usize) -> CMatrix {
    let grid = &field.grid;
    let rings = &grid.rings;
    let nr = grid.nr;
    let mut hi = rings.partition_point(|&x| x < r);
    hi = hi.clamp(1, nr - 1);
    let lo = hi - 1;
    let start = lo.saturating_sub(1).min(nr - 4);
    let idx = [start, start + 1, start + 2, start + 3];
    let dim = field.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for (a, &ia) in idx.iter().enumerate() {
        let mut w = 1.0;
        for (b, &ib) in idx.iter().enumerate() {
            if a != b {
                w *= (r - rings[ib]) / (rings[ia] - rings[ib]);
            }
        }
        out += field.h[grid.index(ia, j)].clone().scale(w);
    }
    out
}

/// ŝ = B^{−1/2}·H·B^{−1/2} at one probe point: the comparison automorphism
/// s = B⁻¹H moved to the B-orthonormal frame, where it is Hermitian
/// positive with the same spectrum.
fn relative_automorphism(h: &MetricField, base: &MetricField, r: f64, j: usize) -> CMatrix {
    let hp = hermitize(&interp_radial(h, r, j));
    let bp = hermitize(&interp_radial(base, r, j));
    let binv_sqrt = herm_fn(&bp, |x| 1.0 / x.max(1e-300).sqrt());
    hermitize(&(&binv_sqrt * hp * &binv_sqrt))
}

/// Worst |log eigenvalue| of ŝ_a·ŝ_b⁻¹ over the probe points.
fn probe_distance(
    ha: &MetricField,
    base_a: &MetricField,
    hb: &MetricField,
    base_b: &MetricField,
    probe_radii: &[f64],
) -> Result<f64> {
    let nphi = ha.grid.nphi;
    let mut worst = 0.0_f64;
    for &r in probe_radii {
        for j in 0..nphi {
            let sa = relative_automorphism(ha, base_a, r, j);
            let sb = relative_automorphism(hb, base_b, r, j);
            let sb_inv = inv(&sb)
                .ok_or(Error::Precondition("probe interpolation lost positivity".into()))?;
            // product of two positive matrices: the spectrum is real positive
            for lam in herm_eigen(&hermitize(
                &(herm_fn(&sb, |x| 1.0 / x.max(1e-300).sqrt())
                    * &sa
                    * herm_fn(&sb, |x| 1.0 / x.max(1e-300).sqrt())),
            ))
            .values
            {
                worst = worst.max(lam.max(1e-300).ln().abs());
            }
            let _ = sb_inv;
        }
    }
    Ok(worst)
}

/// Solves the Dirichlet problem on each disk of the strictly increasing
/// radius list with the reference boundary metric, and reports the probe
/// distances of consecutive solutions.
pub fn exhaustion_sequence(
    spec: &BundleSpec,
    q: &HiggsTuple,
    radii: &[f64],
    probe_radius: f64,
    nr: usize,
    nphi: usize,
    config: &SolverConfig,
    baseline: ExhaustionBaseline,
) -> Result<ExhaustionReport> {
    if radii.len() < 2 {
        return Err(Error::Precondition("need at least two radii".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("radii must be strictly increasing".into()));
    }
    if !(probe_radius > 0.0 && probe_radius < radii[0]) {
        return Err(Error::Precondition(format!(
            "probe radius {probe_radius} must lie inside the smallest disk {}",
            radii[0]
        )));
    }

    let probe_radii: Vec<f64> = (1..=8).map(|k| probe_radius * k as f64 / 8.0).collect();
    let mut fields = Vec::new();
    let mut bases = Vec::new();
    let mut solves = Vec::new();
    for &radius in radii {
        let grid = Arc::new(build_grid(radius, nr, nphi)?);
        let boundary = hx_boundary(spec, &grid);
        let (field, report) = solve_dirichlet(spec, q, &grid, &boundary, config)?;
        let base = match baseline {
            ExhaustionBaseline::Analytic => {
                MetricField { grid: Arc::clone(&grid), h: hx_field(spec, &grid) }
            }
            ExhaustionBaseline::DiscreteQZero => {
                let q0 = HiggsTuple::zero(spec.n);
                solve_dirichlet(spec, &q0, &grid, &boundary, config)?.0
            }
        };
        fields.push(field);
        bases.push(base);
        solves.push(report);
    }

    let mut differences = Vec::new();
    for i in 0..fields.len() - 1 {
        differences.push(probe_distance(
            &fields[i],
            &bases[i],
            &fields[i + 1],
            &bases[i + 1],
            &probe_radii,
        )?);
    }
    let contraction_ratios = differences
        .windows(2)
        .map(|w| if w[1] > 0.0 { w[0] / w[1] } else { f64::INFINITY })
        .collect();
    Ok(ExhaustionReport { radii: radii.to_vec(), baseline, differences, solves, contraction_ratios })
}
