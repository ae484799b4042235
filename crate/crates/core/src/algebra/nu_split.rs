//! The ν-split of a positive self-adjoint automorphism s and the bound
//! |f − f̃^{(ν)}|_h ≤ ν⁻¹(10n)³·|[f,s]|_h obtained by zeroing the blocks of
//! f across the eigenvalue partition E^{(ν)} ⊕ U^{(ν)} ⊕ κ(U^{(ν)}).

use crate::error::{Error, Result};
use crate::linalg::{fro, generalized_herm_eigen, hermitian_defect, CMatrix};

/// Which of the three split pieces an eigenvalue lands in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Core,
    Upper,
    KappaUpper,
}

#[derive(Debug, Clone)]
pub enum NuSplitReport {
    /// S(h,h′) was empty: s is the identity, no split is performed.
    IdentityCase,
    Split {
        /// eigenvalues above 1 that stayed near 1 (the slow cluster)
        s0: Vec<f64>,
        /// eigenvalues above 1 separated by the ½n⁻¹ν gap
        s1: Vec<f64>,
        /// |f − f̃^{(ν)}|_h
        lhs: f64,
        /// ν⁻¹(10n)³·|[f,s]|_h
        rhs: f64,
        commutator_norm: f64,
    },
}

impl NuSplitReport {
    pub fn holds(&self) -> bool {
        match self {
            NuSplitReport::IdentityCase => true,
            NuSplitReport::Split { lhs, rhs, .. } => *lhs <= rhs + 1e-12 * rhs.abs().max(1.0),
        }
    }

    pub fn slack(&self) -> f64 {
        match self {
            NuSplitReport::IdentityCase => 0.0,
            NuSplitReport::Split { lhs, rhs, .. } => rhs - lhs,
        }
    }
}

/// Builds the eigenvalue partition of s (gap threshold ½n⁻¹ν), zeroes the
/// off-diagonal blocks of f across the induced three-way decomposition and
/// compares |f − f̃^{(ν)}|_h against ν⁻¹(10n)³·|[f,s]|_h.
///
/// `s` must be positive and self-adjoint with respect to `h`, with spectrum
/// symmetric under a ↦ a⁻¹ (as it is for the comparison automorphism of two
/// compatible metrics); the matrices live on a 2n-dimensional space.
pub fn nu_split_bound(f: &CMatrix, s: &CMatrix, h: &CMatrix, nu: f64) -> Result<NuSplitReport> {
    let dim = f.nrows();
    if s.nrows() != dim || h.nrows() != dim {
        return Err(Error::DimensionMismatch("nu_split_bound inputs".into()));
    }
    if dim % 2 != 0 {
        return Err(Error::DimensionMismatch("the split lives on a 2n-dimensional space".into()));
    }
    let n = dim / 2;

    let hs = h * s;
    if hermitian_defect(&hs) > 1e-8 * fro(&hs).max(1.0) {
        return Err(Error::Precondition("s is not self-adjoint with respect to h".into()));
    }
    let (values, vectors) = generalized_herm_eigen(h, &hs)
        .ok_or(Error::NotPositiveDefinite { minor: dim, value: f64::NAN })?;
    if values.iter().any(|&a| a <= 0.0) {
        return Err(Error::Precondition("s must be positive".into()));
    }

    // cluster the spectrum into distinct eigenvalues at relative 1e-9
    let mut distinct: Vec<f64> = Vec::new();
    for &a in &values {
        if !distinct.iter().any(|&b| (a - b).abs() <= 1e-9 * b.max(1.0)) {
            distinct.push(a);
        }
    }
    let eig_tol = 1e-7;
    let mut s_set: Vec<f64> = distinct.iter().copied().filter(|&a| a > 1.0 + eig_tol).collect();
    s_set.sort_by(|a, b| a.partial_cmp(b).unwrap());

    if s_set.is_empty() {
        return Ok(NuSplitReport::IdentityCase);
    }
    let max_s = *s_set.last().unwrap();
    if !(nu > 0.0 && nu <= (max_s - 1.0).min(1.0) + 1e-12) {
        return Err(Error::Precondition(format!(
            "nu = {nu:.3e} outside (0, min(1, max S - 1) = {:.3e}]",
            (max_s - 1.0).min(1.0)
        )));
    }
    if s_set.len() > n {
        return Err(Error::Precondition(format!(
            "spectrum has {} values above 1; reciprocal pairing allows at most n = {n}",
            s_set.len()
        )));
    }

    // first gap above the ½n⁻¹ν threshold, scanning from c_0 = 1
    let gap = 0.5 * nu / n as f64;
    let mut m0 = None;
    let mut prev = 1.0;
    for (i, &a) in s_set.iter().enumerate() {
        if a - prev > gap {
            m0 = Some(i);
            break;
        }
        prev = a;
    }
    let m0 = m0.expect("a gap exists whenever |S| <= n and nu <= max S - 1");
    let s0: Vec<f64> = s_set[..m0].to_vec();
    let s1: Vec<f64> = s_set[m0..].to_vec();

    let in_set = |a: f64, set: &[f64]| set.iter().any(|&b| (a - b).abs() <= 1e-9 * b.max(1.0));
    let pieces: Vec<Piece> = values
        .iter()
        .map(|&a| {
            if in_set(a, &s1) {
                Piece::Upper
            } else if s1.iter().any(|&b| (a * b - 1.0).abs() <= 1e-6) {
                Piece::KappaUpper
            } else {
                Piece::Core
            }
        })
        .collect();

    // express f in the h-orthonormal eigenbasis of s
    let vinv = vectors.adjoint() * h;
    let fhat = &vinv * f * &vectors;
    let mut ftilde = fhat.clone();
    let mut off = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            if pieces[i] != pieces[j] {
                off[(i, j)] = fhat[(i, j)];
                ftilde[(i, j)] = num_complex::Complex::new(0.0, 0.0);
            }
        }
    }
    let _ = ftilde;

    let lhs = fro(&off);
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        values.iter().map(|&a| num_complex::Complex::new(a, 0.0)),
    ));
    let comm = &fhat * &d - &d * &fhat;
    let commutator_norm = fro(&comm);
    let rhs = (10.0 * n as f64).powi(3) / nu * commutator_norm;

    Ok(NuSplitReport::Split { s0, s1, lhs, rhs, commutator_norm })
}
