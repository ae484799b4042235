//! The discrete Hitchin residual and its directional derivative.
//!
//! In the global holomorphic frame the equation iΛ(F(H) + [θ, θ^{*H}]) = 0
//! is assembled in the metric-lowered Hermitian form
//!
//!   G(H) = (2/g)·( ∂̄H·H⁻¹·∂H − ∂∂̄H + H·A·H⁻¹·A†·H − A†·H·A )
//!
//! which equals H times the residual endomorphism and is Hermitian exactly,
//! discretely included, whenever the metric samples are Hermitian. The
//! residual reported to callers is the h-orthonormal-frame representation
//! R̂ = L⁻¹·G·L⁻† with H = L·L†, whose Frobenius norm is the conformally
//! natural |iΛ(F + [θ,θ*])|_h.
//!
//! The directional derivative of G is implemented analytically with the same
//! stencils, so the Newton linearization is exactly consistent with the
//! discrete residual.

use crate::domain::{matrix_derivative_pass, AngularScheme, DiskGrid, MatrixField};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_checked, inv, CMatrix, C64};

/// Per-iterate products reused by the residual and its linearization.
pub struct IterateCache {
    /// H⁻¹
    pub x: MatrixField,
    /// ∂̄H·H⁻¹
    pub lterm: MatrixField,
    /// H⁻¹·∂H
    pub rterm: MatrixField,
    /// A·H⁻¹·A†·H
    pub arh: MatrixField,
    /// H·A·H⁻¹·A†
    pub hal: MatrixField,
    /// H·A·H⁻¹
    pub hax: MatrixField,
    /// H⁻¹·A†·H
    pub xah: MatrixField,
    /// the Higgs matrices A and A†
    pub a: MatrixField,
    pub adag: MatrixField,
    /// G(H) itself
    pub g_field: MatrixField,
    /// sqrt of the metric diagonal per node: the entry scales that move the
    /// packed coordinates close to the orthonormal-frame normalization
    pub diag_sqrt: Vec<Vec<f64>>,
    /// center coefficients of the ∂_z stencil (the ∂_z̄ one is conjugate)
    pub c0z: Vec<C64>,
    /// center coefficients of the ∂_z∂_z̄ stencil (real)
    pub c0dd: Vec<f64>,
}

/// Center (self-node) coefficients of the solver stencils, needed for the
/// local diagonal blocks of the linearization.
fn stencil_centers(grid: &DiskGrid) -> (Vec<C64>, Vec<f64>) {
    let n = grid.node_count();
    let dphi = grid.dphi();
    let mut c0z = vec![C64::new(0.0, 0.0); n];
    let mut c0dd = vec![0.0; n];
    for p in 0..n {
        let ring = grid.ring_of(p);
        let st = &grid.radial[ring];
        let w1c = -(st.w1[0] + st.w1[1]);
        let w2c = -(st.w2[0] + st.w2[1]);
        let r = grid.r(p);
        let phi = grid.phi(p);
        // centered angular first difference has no self term
        c0z[p] = C64::from_polar(0.5, -phi) * w1c;
        c0dd[p] = 0.25 * (w2c + w1c / r - 2.0 / (dphi * dphi) / (r * r));
    }
    (c0z, c0dd)
}

/// Assembles G(H) and the cache. `a` is the Higgs matrix field, `h` the
/// metric field (all nodes, boundary included).
pub fn build_cache(
    grid: &DiskGrid,
    a: &[CMatrix],
    adag: &[CMatrix],
    h: &[CMatrix],
) -> Result<IterateCache> {
    let nodes = grid.node_count();
    let dim = h[0].nrows();
    let (dzh, dzbh, ddh) = matrix_derivative_pass(grid, h, AngularScheme::Centered, true);
    let mut x = Vec::with_capacity(nodes);
    let mut lterm = Vec::with_capacity(nodes);
    let mut rterm = Vec::with_capacity(nodes);
    let mut arh = Vec::with_capacity(nodes);
    let mut hal = Vec::with_capacity(nodes);
    let mut hax = Vec::with_capacity(nodes);
    let mut xah = Vec::with_capacity(nodes);
    let mut g_field = Vec::with_capacity(nodes);
    for p in 0..nodes {
        let hp = &h[p];
        let xp = inv(hp).ok_or(Error::PositivityLoss {
            node: p,
            r: grid.r(p),
            phi: grid.phi(p),
        })?;
        let lt = &dzbh[p] * &xp;
        let rt = &xp * &dzh[p];
        let ax = &a[p] * &xp;
        let arh_p = &ax * &adag[p] * hp;
        let hax_p = hp * &ax;
        let hal_p = &hax_p * &adag[p];
        let xah_p = &xp * &adag[p] * hp;
        let scale = 2.0 / grid.g(p);
        let g_p = if grid.is_boundary(p) {
            CMatrix::zeros(dim, dim)
        } else {
            ((&dzbh[p] * &rt) - &ddh[p] + (&hal_p * hp) - (&adag[p] * hp * &a[p])).scale(scale)
        };
        x.push(xp);
        lterm.push(lt);
        rterm.push(rt);
        arh.push(arh_p);
        hal.push(hal_p);
        hax.push(hax_p);
        xah.push(xah_p);
        g_field.push(g_p);
    }
    let (c0z, c0dd) = stencil_centers(grid);
    let diag_sqrt = h
        .iter()
        .map(|hp| (0..dim).map(|i| hp[(i, i)].re.max(1e-300).sqrt()).collect())
        .collect();
    Ok(IterateCache {
        x,
        lterm,
        rterm,
        arh,
        hal,
        hax,
        xah,
        a: a.to_vec(),
        adag: adag.to_vec(),
        g_field,
        diag_sqrt,
        c0z,
        c0dd,
    })
}

/// Directional derivative dG[δ] at the cached iterate, for a Hermitian
/// variation field δ (zero on the boundary ring). Interior nodes only;
/// boundary rows come out zero.
pub fn directional_derivative(
    grid: &DiskGrid,
    cache: &IterateCache,
    delta: &[CMatrix],
) -> MatrixField {
    let nodes = grid.node_count();
    let dim = delta[0].nrows();
    let (dzd, dzbd, ddd) = matrix_derivative_pass(grid, delta, AngularScheme::Centered, true);
    let mut out = Vec::with_capacity(nodes);
    for p in 0..nodes {
        if grid.is_boundary(p) {
            out.push(CMatrix::zeros(dim, dim));
            continue;
        }
        let d = &delta[p];
        let t = (&dzbd[p] * &cache.rterm[p]) + (&cache.lterm[p] * &dzd[p])
            - (&cache.lterm[p] * d * &cache.rterm[p])
            - &ddd[p]
            + d * &cache.arh[p]
            + &cache.hal[p] * d
            - (&cache.hax[p] * d * &cache.xah[p])
            - (&cache.adag[p] * d * &cache.a[p]);
        out.push(t.scale(2.0 / grid.g(p)));
    }
    out
}

/// The node-local part of dG[δ] (δ supported at the node itself), used to
/// assemble the block-Jacobi preconditioner.
pub fn local_derivative(cache: &IterateCache, grid: &DiskGrid, p: usize, d: &CMatrix) -> CMatrix {
    let c0z = cache.c0z[p];
    let c0zb = c0z.conj();
    let t = (d * &cache.rterm[p]).scale_complex(c0zb)
        + (&cache.lterm[p] * d).scale_complex(c0z)
        - (&cache.lterm[p] * d * &cache.rterm[p])
        - d.clone().scale(cache.c0dd[p])
        + d * &cache.arh[p]
        + &cache.hal[p] * d
        - (&cache.hax[p] * d * &cache.xah[p])
        - (&cache.adag[p] * d * &cache.a[p]);
    t.scale(2.0 / grid.g(p))
}

trait ScaleComplex {
    fn scale_complex(self, z: C64) -> Self;
}

impl ScaleComplex for CMatrix {
    fn scale_complex(mut self, z: C64) -> Self {
        for v in self.iter_mut() {
            *v *= z;
        }
        self
    }
}

/// h-orthonormal-frame residual R̂ = L⁻¹·G·L⁻† per node and its sup
/// Frobenius norm over the interior.
pub fn orthonormal_residual(
    grid: &DiskGrid,
    h: &[CMatrix],
    g_field: &[CMatrix],
) -> Result<(MatrixField, f64)> {
    let nodes = grid.node_count();
    let mut out = Vec::with_capacity(nodes);
    let mut sup = 0.0_f64;
    for p in 0..nodes {
        let l = cholesky_checked(&h[p]).map_err(|_| Error::PositivityLoss {
            node: p,
            r: grid.r(p),
            phi: grid.phi(p),
        })?;
        let linv = inv(&l).expect("triangular");
        let rhat = &linv * &g_field[p] * linv.adjoint();
        if !grid.is_boundary(p) {
            sup = sup.max(rhat.norm());
        }
        out.push(rhat);
    }
    Ok((out, sup))
}
