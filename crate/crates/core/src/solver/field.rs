//! Grid-aligned metric fields and the packing of Hermitian updates into
//! real vectors for the Krylov solver.

use std::sync::Arc;

use crate::algebra::compatibility_residual;
use crate::bundle::{theta_matrices, BundleSpec, HiggsTuple};
use crate::domain::DiskGrid;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_checked, herm_eigen, CMatrix, C64};

/// A per-node Hermitian positive-definite metric in the weight frame.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub grid: Arc<DiskGrid>,
    pub h: Vec<CMatrix>,
}

impl MetricField {
    pub fn dim(&self) -> usize {
        self.h[0].nrows()
    }

    /// Worst per-node compatibility residual against the weight pairing.
    pub fn compatibility_drift(&self, spec: &BundleSpec) -> f64 {
        let mut worst = 0.0_f64;
        for h in &self.h {
            worst = worst.max(compatibility_residual(h, &spec.c_weight).unwrap_or(f64::NAN));
        }
        worst
    }

    /// Largest Frobenius norm of the V–W off-diagonal blocks after moving
    /// back to the block frame.
    pub fn block_offdiagonal(&self, spec: &BundleSpec) -> f64 {
        let n = spec.n;
        let mut worst = 0.0_f64;
        for h in &self.h {
            let b = spec.weight_to_block(h);
            let vw = b.view((0, n), (n, n)).norm();
            let wv = b.view((n, 0), (n, n)).norm();
            worst = worst.max(vw).max(wv);
        }
        worst
    }

    /// Smallest eigenvalue over all nodes.
    pub fn min_eigenvalue(&self) -> f64 {
        self.h
            .iter()
            .map(|h| herm_eigen(h).values.iter().copied().fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min)
    }

    /// Fails with the offending node when some sample is not positive.
    pub fn check_positive(&self) -> Result<()> {
        for (p, h) in self.h.iter().enumerate() {
            if cholesky_checked(h).is_err() {
                return Err(Error::PositivityLoss {
                    node: p,
                    r: self.grid.r(p),
                    phi: self.grid.phi(p),
                });
            }
        }
        Ok(())
    }
}

/// Boundary Dirichlet data: one Hermitian matrix per boundary-ring angle.
#[derive(Debug, Clone)]
pub struct BoundaryMetric {
    pub values: Vec<CMatrix>,
}

impl BoundaryMetric {
    /// Validates compatibility with the SO-structure (block-diagonal V⊕W
    /// with each factor compatible) at every boundary node.
    pub fn validate(&self, spec: &BundleSpec, tol: f64) -> Result<()> {
        for (j, h) in self.values.iter().enumerate() {
            let res = compatibility_residual(h, &spec.c_weight)?;
            let b = spec.weight_to_block(h);
            let n = spec.n;
            let off = b.view((0, n), (n, n)).norm().max(b.view((n, 0), (n, n)).norm());
            if res > tol || off > tol * h.norm().max(1.0) {
                return Err(Error::Precondition(format!(
                    "boundary metric at angle index {j} is not compatible \
                     (pairing residual {res:.3e}, off-block {off:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// The Higgs matrix A(z) in the weight frame sampled on the grid.
pub fn theta_field(spec: &BundleSpec, q: &HiggsTuple, grid: &DiskGrid) -> Vec<CMatrix> {
    (0..grid.node_count())
        .map(|p| theta_matrices(spec, q, grid.z(p)).1)
        .collect()
}

/// Real dimension of the packed Hermitian update per node.
pub fn packed_dim(dim: usize) -> usize {
    dim * dim
}

/// Packs a Hermitian matrix into reals: diagonal first, then the upper
/// triangle as (re, im) pairs.
pub fn pack_hermitian(m: &CMatrix, out: &mut [f64]) {
    let dim = m.nrows();
    let mut k = 0;
    for i in 0..dim {
        out[k] = m[(i, i)].re;
        k += 1;
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            out[k] = m[(i, j)].re;
            out[k + 1] = m[(i, j)].im;
            k += 2;
        }
    }
}

pub fn unpack_hermitian(v: &[f64], dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    let mut k = 0;
    for i in 0..dim {
        m[(i, i)] = C64::new(v[k], 0.0);
        k += 1;
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let z = C64::new(v[k], v[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hermitian_pack_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dim in [2usize, 4, 6] {
            let m = random_hermitian(dim, 1.0, &mut rng);
            let mut v = vec![0.0; packed_dim(dim)];
            pack_hermitian(&m, &mut v);
            let back = unpack_hermitian(&v, dim);
            assert!((back - &m).norm() < 1e-15);
        }
    }
}
