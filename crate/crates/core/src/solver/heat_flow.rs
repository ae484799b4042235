//! Adaptive implicit Euler discretization of the metric heat flow
//! H⁻¹·dH/dt = −2·iΛF(θ,H), the alternate route to the Dirichlet solution.
//!
//! Each step solves Φ(H⁺) = (H⁺ − H_k) + 2·Δt·G(H⁺) = 0 (with G the
//! metric-lowered residual, so Hermiticity is preserved) by a short inner
//! Newton iteration on the shifted linearization δ + 2Δt·dG[δ]; Δt doubles
//! after easy steps and halves when the inner iteration struggles or
//! positivity fails.

use crate::domain::DiskGrid;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_checked, CMatrix};

use super::newton::{LinearizedSystem, NewtonOutcome};
use super::residual::{build_cache, orthonormal_residual};

pub struct FlowOptions {
    pub residual_tol: f64,
    pub max_steps: usize,
    pub initial_dt: f64,
    pub gmres_rel_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
}

pub fn heat_flow_solve(
    grid: &DiskGrid,
    a: &[CMatrix],
    adag: &[CMatrix],
    h0: Vec<CMatrix>,
    opts: &FlowOptions,
) -> Result<NewtonOutcome> {
    let dim = h0[0].nrows();
    let interior = grid.interior_nodes().len();
    let mut h = h0;
    let mut dt = opts.initial_dt;
    let mut trace = Vec::new();

    let cache = build_cache(grid, a, adag, &h)?;
    let (_, mut sup) = orthonormal_residual(grid, &h, &cache.g_field)?;
    trace.push(sup);

    for step in 0..opts.max_steps {
        if sup <= opts.residual_tol {
            return Ok(NewtonOutcome { h, sup_residual: sup, iterations: step, trace });
        }

        let mut advanced = false;
        'dt_search: for _ in 0..40 {
            let mut trial = h.clone();
            let mut inner_ok = false;
            for _inner in 0..6 {
                let cache_t = build_cache(grid, a, adag, &trial)?;
                let mut phi: Vec<CMatrix> = Vec::with_capacity(trial.len());
                let mut phi_norm = 0.0_f64;
                let mut scale_norm = 1e-300_f64;
                for p in 0..trial.len() {
                    let m = if p < interior {
                        (&trial[p] - &h[p]) + cache_t.g_field[p].clone().scale(2.0 * dt)
                    } else {
                        CMatrix::zeros(dim, dim)
                    };
                    phi_norm = phi_norm.max(m.norm());
                    scale_norm = scale_norm.max(trial[p].norm());
                    phi.push(m);
                }
                if phi_norm <= 1e-9 * scale_norm {
                    inner_ok = true;
                    break;
                }
                let system = LinearizedSystem::shifted(grid, &cache_t, dim, 1.0, 2.0 * dt);
                let rhs: Vec<CMatrix> = phi.iter().map(|m| -m).collect();
                let (delta, _, _) =
                    system.solve(&rhs, opts.gmres_rel_tol, opts.gmres_restart, opts.gmres_max_iters);
                for p in 0..interior {
                    trial[p] += delta[p].clone();
                }
                if !(0..interior).all(|p| cholesky_checked(&trial[p]).is_ok()) {
                    dt *= 0.5;
                    continue 'dt_search;
                }
                inner_ok = true;
            }
            if !inner_ok {
                dt *= 0.5;
                continue;
            }
            let cache_new = build_cache(grid, a, adag, &trial)?;
            let (_, sup_new) = orthonormal_residual(grid, &trial, &cache_new.g_field)?;
            if sup_new <= sup * 1.000001 {
                h = trial;
                sup = sup_new;
                trace.push(sup);
                dt = (dt * 2.0).min(1e6);
                advanced = true;
                break;
            }
            dt *= 0.5;
            if dt < 1e-12 {
                break;
            }
        }
        if !advanced {
            return Err(Error::NonConvergence { iterations: step + 1, residual: sup, trace });
        }
    }
    if sup <= opts.residual_tol {
        let iterations = trace.len() - 1;
        return Ok(NewtonOutcome { h, sup_residual: sup, iterations, trace });
    }
    Err(Error::NonConvergence { iterations: opts.max_steps, residual: sup, trace })
}
