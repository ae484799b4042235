//! Gram–Schmidt transition matrices and the modulus identities they satisfy
//! for metrics compatible with the standard weight-ordered pairing.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_checked, fro, inv, op_norm, CMatrix};

use super::pairing::{Ordering, PairingMatrix};

/// Upper-triangular change of frame P with real positive diagonal such that
/// the columns of the new frame v_k = Σ_{j≤k} P_{j,k} e_j are orthonormal,
/// i.e. H = conj-transpose(P⁻¹)·P⁻¹.
#[derive(Debug, Clone)]
pub struct TriangularTransition {
    pub p: CMatrix,
    pub inverse_p: CMatrix,
}

impl TriangularTransition {
    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// Rebuild the metric from the transition.
    pub fn reconstruct(&self) -> CMatrix {
        self.inverse_p.adjoint() * &self.inverse_p
    }
}

/// Gram–Schmidt through Cholesky: H = L·L† gives P⁻¹ = L† and P = (L†)⁻¹,
/// upper-triangular with positive real diagonal.
pub fn gram_schmidt_transition(h: &CMatrix) -> Result<TriangularTransition> {
    let l = cholesky_checked(h)
        .map_err(|(minor, value)| Error::NotPositiveDefinite { minor, value })?;
    let inverse_p = l.adjoint();
    let p = inv(&inverse_p).expect("triangular with positive diagonal");
    Ok(TriangularTransition { p, inverse_p })
}

/// Leading filtration determinants det(H|F_k) for k = 0..dim.
pub fn filtration_dets(h: &CMatrix) -> Result<Vec<f64>> {
    crate::linalg::leading_minor_dets(h)
        .map_err(|(minor, value)| Error::NotPositiveDefinite { minor, value })
}

/// Slot metrics h_k = det(H|F_k)/det(H|F_{k−1}).
pub fn slot_metrics(h: &CMatrix) -> Result<Vec<f64>> {
    let dets = filtration_dets(h)?;
    Ok((1..dets.len()).map(|k| dets[k] / dets[k - 1]).collect())
}

/// Violations of the transition identities tied to compatibility with the
/// standard weight-ordered pairing, all stated on moduli:
///   (i)  |P_{i,i}| = |P⁻¹_{2n+1−i,2n+1−i}|,
///   (ii) |P_{n,j}| = |P⁻¹_{2n+1−j,n}| for j ∉ {n, n+1},
///   (iii) |P⁻¹_{n,n}|² = |P_{n,n}|² + |P_{n,n+1}|²,
/// plus the unitarity defect of T = Pᵀ·C·P, which underlies all three.
#[derive(Debug, Clone)]
pub struct TriangularIdentityReport {
    pub diagonal_violation: f64,
    pub middle_row_violation: f64,
    pub middle_block_violation: f64,
    pub unitarity_defect: f64,
}

impl TriangularIdentityReport {
    pub fn max_violation(&self) -> f64 {
        self.diagonal_violation
            .max(self.middle_row_violation)
            .max(self.middle_block_violation)
    }
}

pub fn check_triangular_identities(
    t: &TriangularTransition,
    c: &PairingMatrix,
) -> Result<TriangularIdentityReport> {
    if c.ordering != Ordering::Weight {
        return Err(Error::WrongOrdering { expected: Ordering::Weight, got: c.ordering });
    }
    let dim = t.dim();
    if c.dim != dim {
        return Err(Error::DimensionMismatch(format!(
            "transition dim {dim} vs pairing dim {}",
            c.dim
        )));
    }
    if dim % 2 != 0 {
        return Err(Error::DimensionMismatch("weight frame must have even dimension".into()));
    }
    let n = dim / 2;
    let p = &t.p;
    let pinv = &t.inverse_p;

    let mut diag = 0.0_f64;
    for i in 1..=dim {
        let lhs = p[(i - 1, i - 1)].norm();
        let rhs = pinv[(dim - i, dim - i)].norm();
        diag = diag.max((lhs - rhs).abs());
    }

    let mut row = 0.0_f64;
    for j in 1..=dim {
        if j == n || j == n + 1 {
            continue;
        }
        let lhs = p[(n - 1, j - 1)].norm();
        let rhs = pinv[(dim - j, n - 1)].norm();
        row = row.max((lhs - rhs).abs());
    }

    let lhs = pinv[(n - 1, n - 1)].norm_sqr();
    let rhs = p[(n - 1, n - 1)].norm_sqr() + p[(n - 1, n)].norm_sqr();
    let block = (lhs - rhs).abs();

    let t_mat = p.transpose() * &c.entries * p;
    let unit = fro(&(t_mat.adjoint() * &t_mat - CMatrix::identity(dim, dim)));

    Ok(TriangularIdentityReport {
        diagonal_violation: diag,
        middle_row_violation: row,
        middle_block_violation: block,
        unitarity_defect: unit,
    })
}

/// |f|_h for an endomorphism given in the same frame as the metric behind
/// `t`: the operator norm of P⁻¹·A·P.
pub fn endo_norm(t: &TriangularTransition, a: &CMatrix) -> f64 {
    op_norm(&(&t.inverse_p * a * &t.p))
}

/// Frobenius variant of `endo_norm`.
pub fn endo_norm_fro(t: &TriangularTransition, a: &CMatrix) -> f64 {
    fro(&(&t.inverse_p * a * &t.p))
}
