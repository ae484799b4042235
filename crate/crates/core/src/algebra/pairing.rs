//! Non-degenerate complex symmetric pairings and the compatibility
//! condition H·conj(C)⁻¹·Hᵀ = C linking a Hermitian metric to a pairing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cr, fro, inv, CMatrix};

/// Which basis ordering the matrix entries refer to.
///
/// `Block` is the V ⊕ W ordering; `Weight` lists the line-bundle slots by
/// descending weight with the second trivial slot in position n+1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    Block,
    Weight,
}

/// A non-degenerate complex symmetric pairing with its frame-ordering tag.
#[derive(Debug, Clone)]
pub struct PairingMatrix {
    pub entries: CMatrix,
    pub dim: usize,
    pub ordering: Ordering,
}

impl PairingMatrix {
    pub fn new(entries: CMatrix, ordering: Ordering) -> Result<Self> {
        let dim = entries.nrows();
        if entries.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "pairing must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let sym_defect = fro(&(&entries - entries.transpose()));
        if sym_defect > 1e-12 * fro(&entries).max(1.0) {
            return Err(Error::DimensionMismatch(format!(
                "pairing must be symmetric (defect {sym_defect:.3e})"
            )));
        }
        let det = entries.clone().lu().determinant().norm();
        if det <= f64::EPSILON {
            return Err(Error::SingularPairing { det });
        }
        Ok(Self { entries, dim, ordering })
    }

    /// The standard weight-ordered pairing of dimension 2n: anti-diagonal
    /// ones away from the middle, identity on the middle 2×2 block.
    /// For n = 1 the middle block is everything and C is the identity.
    pub fn standard_weight(n: usize) -> Self {
        let dim = 2 * n;
        let mut m = CMatrix::zeros(dim, dim);
        for i in 1..=dim {
            for j in 1..=dim {
                let in_middle = (i == n || i == n + 1) && (j == n || j == n + 1);
                let v = if in_middle {
                    if i == j { 1.0 } else { 0.0 }
                } else if i + j == dim + 1 {
                    1.0
                } else {
                    0.0
                };
                m[(i - 1, j - 1)] = cr(v);
            }
        }
        Self { entries: m, dim, ordering: Ordering::Weight }
    }

    /// Anti-diagonal of ones, the pairing on the V factor.
    pub fn anti_diagonal(n: usize, ordering: Ordering) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, n - 1 - i)] = cr(1.0);
        }
        Self { entries: m, dim: n, ordering }
    }

    /// Anti-diagonal ones on the first n−1 slots, a trailing 1 on the last
    /// slot: the pairing on the W factor with its trivial summand last.
    pub fn w_pairing(n: usize, ordering: Ordering) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            m[(i, n - 2 - i)] = cr(1.0);
        }
        m[(n - 1, n - 1)] = cr(1.0);
        Self { entries: m, dim: n, ordering }
    }

    pub fn inverse(&self) -> CMatrix {
        inv(&self.entries).expect("pairing certified non-degenerate at construction")
    }
}

/// Relative compatibility residual ‖H·conj(C)⁻¹·Hᵀ − C‖_F / ‖C‖_F.
///
/// Zero exactly when the Hermitian metric H is compatible with C.
pub fn compatibility_residual(h: &CMatrix, c: &PairingMatrix) -> Result<f64> {
    if h.nrows() != c.dim || h.ncols() != c.dim {
        return Err(Error::DimensionMismatch(format!(
            "metric is {}x{}, pairing is {}x{}",
            h.nrows(),
            h.ncols(),
            c.dim,
            c.dim
        )));
    }
    let cbar_inv = inv(&c.entries.map(|z| z.conj())).ok_or(Error::SingularPairing {
        det: c.entries.clone().lu().determinant().norm(),
    })?;
    let lhs = h * cbar_inv * h.transpose();
    Ok(fro(&(lhs - &c.entries)) / fro(&c.entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn standard_weight_squares_to_identity() {
        for n in 1..=5 {
            let cw = PairingMatrix::standard_weight(n);
            let sq = &cw.entries * &cw.entries;
            let id = CMatrix::identity(2 * n, 2 * n);
            assert_eq!(sq, id, "C·C must be the identity exactly for n={n}");
        }
    }

    #[test]
    fn standard_weight_n2_matches_closed_form() {
        let cw = PairingMatrix::standard_weight(2);
        let expected = CMatrix::from_row_slice(
            4,
            4,
            &[
                cr(0.0), cr(0.0), cr(0.0), cr(1.0),
                cr(0.0), cr(1.0), cr(0.0), cr(0.0),
                cr(0.0), cr(0.0), cr(1.0), cr(0.0),
                cr(1.0), cr(0.0), cr(0.0), cr(0.0),
            ],
        );
        assert_eq!(cw.entries, expected);
    }

    #[test]
    fn standard_weight_n1_is_identity() {
        let cw = PairingMatrix::standard_weight(1);
        assert_eq!(cw.entries, CMatrix::identity(2, 2));
    }

    #[test]
    fn identity_metric_is_compatible() {
        let cw = PairingMatrix::standard_weight(2);
        let h = CMatrix::identity(4, 4);
        assert_eq!(compatibility_residual(&h, &cw).unwrap(), 0.0);
    }

    #[test]
    fn scaled_diagonal_violates_compatibility() {
        let cw = PairingMatrix::standard_weight(2);
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            cr(2.0), cr(1.0), cr(1.0), cr(1.0),
        ]));
        assert!(compatibility_residual(&h, &cw).unwrap() > 0.1);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let cw = PairingMatrix::standard_weight(2);
        let h = CMatrix::identity(3, 3);
        assert!(compatibility_residual(&h, &cw).is_err());
    }

    #[test]
    fn singular_pairing_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(1.0), cr(1.0), cr(1.0)]);
        assert!(PairingMatrix::new(m, Ordering::Weight).is_err());
    }

    #[test]
    fn non_symmetric_pairing_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(1.0), c(0.0, 1.0), cr(0.0), cr(1.0)]);
        assert!(PairingMatrix::new(m, Ordering::Weight).is_err());
    }
}
