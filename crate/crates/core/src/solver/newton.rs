//! Damped Newton–Krylov iteration for the discrete Hitchin equation.
//!
//! The unknowns are the Hermitian metric samples at interior nodes; the
//! boundary ring is Dirichlet data and never moves. Each step solves the
//! exact linearization of the discrete residual with restarted GMRES,
//! right-preconditioned by the node-local diagonal blocks, then backtracks
//! on the sup residual with positivity checked through Cholesky. Everything
//! is serial and deterministic.

use nalgebra::DMatrix;

use crate::domain::DiskGrid;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_checked, CMatrix};

use super::field::{pack_hermitian, packed_dim, unpack_hermitian};
use super::gmres::gmres;
use super::residual::{build_cache, directional_derivative, local_derivative, orthonormal_residual, IterateCache};

pub struct NewtonOptions {
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub gmres_rel_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            max_iterations: 25,
            gmres_rel_tol: 1e-4,
            gmres_restart: 120,
            gmres_max_iters: 4000,
            max_halvings: 30,
        }
    }
}

/// One assembled linearization of shift·δ + scale·dG[δ] (shift 0, scale 1
/// for Newton; shift 1, scale 2Δt for the implicit flow): packs Hermitian
/// interior updates to real vectors, applies the operator matrix-free, and
/// holds the factored node-local diagonal blocks as a right preconditioner.
pub struct LinearizedSystem<'a> {
    grid: &'a DiskGrid,
    cache: &'a IterateCache,
    dim: usize,
    d: usize,
    interior: usize,
    shift: f64,
    scale: f64,
    block_lu: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'a> LinearizedSystem<'a> {
    pub fn new(grid: &'a DiskGrid, cache: &'a IterateCache, dim: usize) -> Self {
        Self::shifted(grid, cache, dim, 0.0, 1.0)
    }

    pub fn shifted(
        grid: &'a DiskGrid,
        cache: &'a IterateCache,
        dim: usize,
        shift: f64,
        scale: f64,
    ) -> Self {
        let d = packed_dim(dim);
        let interior = grid.interior_nodes().len();
        // basis of Hermitian matrices matching the packing order
        let mut basis = Vec::with_capacity(d);
        for k in 0..d {
            let mut v = vec![0.0; d];
            v[k] = 1.0;
            basis.push(unpack_hermitian(&v, dim));
        }
        let sys = Self { grid, cache, dim, d, interior, shift, scale, block_lu: Vec::new() };
        let mut block_lu = Vec::with_capacity(interior);
        let mut col = vec![0.0; d];
        for p in 0..interior {
            let mut m = DMatrix::<f64>::from_diagonal_element(d, d, shift);
            for (k, e) in basis.iter().enumerate() {
                let mut delta = e.clone();
                sys.scale_up(p, &mut delta);
                let mut out = local_derivative(cache, grid, p, &delta);
                sys.scale_down(p, &mut out);
                pack_hermitian(&out, &mut col);
                for row in 0..d {
                    m[(row, k)] += scale * col[row];
                }
            }
            block_lu.push(m.lu());
        }
        Self { block_lu, ..sys }
    }

    pub fn unknowns(&self) -> usize {
        self.interior * self.d
    }

    /// Entrywise similarity by the metric-diagonal square roots: the packed
    /// coordinates then approximate the orthonormal-frame normalization of
    /// both the update and the lowered residual, so the Krylov 2-norm is a
    /// meaningful convergence measure across slots whose magnitudes differ
    /// by powers of the conformal factor.
    fn scale_up(&self, p: usize, m: &mut CMatrix) {
        let s = &self.cache.diag_sqrt[p];
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] *= s[i] * s[j];
            }
        }
    }

    fn scale_down(&self, p: usize, m: &mut CMatrix) {
        let s = &self.cache.diag_sqrt[p];
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] /= s[i] * s[j];
            }
        }
    }

    fn unpack_field(&self, v: &[f64]) -> Vec<CMatrix> {
        let nodes = self.grid.node_count();
        let mut field = Vec::with_capacity(nodes);
        for p in 0..nodes {
            if p < self.interior {
                let mut m = unpack_hermitian(&v[p * self.d..(p + 1) * self.d], self.dim);
                self.scale_up(p, &mut m);
                field.push(m);
            } else {
                field.push(CMatrix::zeros(self.dim, self.dim));
            }
        }
        field
    }

    fn pack_field(&self, f: &[CMatrix]) -> Vec<f64> {
        let mut v = vec![0.0; self.unknowns()];
        for p in 0..self.interior {
            let mut m = f[p].clone();
            self.scale_down(p, &mut m);
            pack_hermitian(&m, &mut v[p * self.d..(p + 1) * self.d]);
        }
        v
    }

    /// J·(M⁻¹ y): the right-preconditioned operator.
    fn apply_preconditioned(&self, y: &[f64]) -> Vec<f64> {
        let z = self.apply_precond_inverse(y);
        let delta = self.unpack_field(&z);
        let dg = directional_derivative(self.grid, self.cache, &delta);
        let mut out = self.pack_field(&dg);
        for (o, zi) in out.iter_mut().zip(&z) {
            *o = self.shift * zi + self.scale * *o;
        }
        out
    }

    fn apply_precond_inverse(&self, y: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; y.len()];
        for p in 0..self.interior {
            let seg = nalgebra::DVector::from_column_slice(&y[p * self.d..(p + 1) * self.d]);
            let sol = self.block_lu[p].solve(&seg).unwrap_or(seg);
            z[p * self.d..(p + 1) * self.d].copy_from_slice(sol.as_slice());
        }
        z
    }

    /// Solves dG[δ] = rhs for the Hermitian interior update δ.
    pub fn solve(
        &self,
        rhs: &[CMatrix],
        rel_tol: f64,
        restart: usize,
        max_iters: usize,
    ) -> (Vec<CMatrix>, bool, usize) {
        let b = self.pack_field(rhs);
        let mut y = vec![0.0; b.len()];
        let mut apply = |v: &[f64]| self.apply_preconditioned(v);
        let out = gmres(&mut apply, &b, &mut y, rel_tol, restart, max_iters);
        let z = self.apply_precond_inverse(&y);
        (self.unpack_field(&z), out.converged, out.iterations)
    }
}

fn all_positive(h: &[CMatrix], interior: usize) -> bool {
    (0..interior).all(|p| cholesky_checked(&h[p]).is_ok())
}

pub struct NewtonOutcome {
    pub h: Vec<CMatrix>,
    pub sup_residual: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Drives the interior metric samples to sup |iΛ(F+[θ,θ*])|_h ≤ tol.
/// `h0` supplies the initial iterate including the fixed boundary ring.
pub fn newton_solve(
    grid: &DiskGrid,
    a: &[CMatrix],
    adag: &[CMatrix],
    h0: Vec<CMatrix>,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let dim = h0[0].nrows();
    let interior = grid.interior_nodes().len();
    let mut h = h0;
    let mut trace = Vec::new();

    let cache0 = build_cache(grid, a, adag, &h)?;
    let (_, mut sup) = orthonormal_residual(grid, &h, &cache0.g_field)?;
    trace.push(sup);
    let mut cache = cache0;

    for iter in 0..opts.max_iterations {
        if sup <= opts.residual_tol {
            return Ok(NewtonOutcome { h, sup_residual: sup, iterations: iter, trace });
        }
        let system = LinearizedSystem::new(grid, &cache, dim);
        let rhs: Vec<CMatrix> = cache.g_field.iter().map(|g| -g).collect();
        let (delta, _converged, _iters) =
            system.solve(&rhs, opts.gmres_rel_tol, opts.gmres_restart, opts.gmres_max_iters);

        // backtracking on the sup residual with positivity safeguard
        let mut lambda = 1.0_f64;
        let mut accepted = false;
        for _ in 0..opts.max_halvings {
            let trial: Vec<CMatrix> = h
                .iter()
                .zip(&delta)
                .enumerate()
                .map(|(p, (hp, dp))| if p < interior { hp + dp.clone().scale(lambda) } else { hp.clone() })
                .collect();
            if !all_positive(&trial, interior) {
                lambda *= 0.5;
                continue;
            }
            let cache_t = build_cache(grid, a, adag, &trial)?;
            let (_, sup_t) = orthonormal_residual(grid, &trial, &cache_t.g_field)?;
            if sup_t < sup * (1.0 - 0.25 * lambda) || sup_t < opts.residual_tol {
                h = trial;
                cache = cache_t;
                sup = sup_t;
                trace.push(sup);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations: iter + 1,
                residual: sup,
                trace,
            });
        }
    }
    if sup <= opts.residual_tol {
        let iterations = trace.len() - 1;
        return Ok(NewtonOutcome { h, sup_residual: sup, iterations, trace });
    }
    Err(Error::NonConvergence { iterations: opts.max_iterations, residual: sup, trace })
}
