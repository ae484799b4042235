//! Small dense complex-matrix helpers shared across the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex<f64>>`; dimensions stay tiny
//! (at most a few times the rank), so everything here is allocation-happy
//! and eigen-based rather than clever.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Frobenius norm.
pub fn fro(m: &CMatrix) -> f64 {
    m.norm()
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Max absolute entry, the elementwise sup norm.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Hermitian deviation ‖M − M†‖_F.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Replace M by its Hermitian part (M + M†)/2.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues ascending
/// (as delivered by nalgebra) with a unitary eigenvector matrix.
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn herm_eigen(m: &CMatrix) -> HermEigen {
    let se = hermitize(m).symmetric_eigen();
    HermEigen {
        values: se.eigenvalues.iter().copied().collect(),
        vectors: se.eigenvectors,
    }
}

/// f(M) for Hermitian M via the spectral decomposition.
pub fn herm_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let eig = herm_eigen(m);
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&x| cr(f(x))),
    ));
    &eig.vectors * d * eig.vectors.adjoint()
}

pub fn herm_exp(m: &CMatrix) -> CMatrix {
    herm_fn(m, f64::exp)
}

pub fn herm_sqrt(m: &CMatrix) -> CMatrix {
    herm_fn(m, f64::sqrt)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig(m: &CMatrix) -> f64 {
    herm_eigen(m).values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Inverse through LU; the caller vouches the matrix is far from singular.
pub fn inv(m: &CMatrix) -> Option<CMatrix> {
    m.clone().try_inverse()
}

/// log|det M| computed stably from the eigenvalues of M†M.
pub fn log_abs_det(m: &CMatrix) -> f64 {
    0.5 * herm_eigen(&(m.adjoint() * m))
        .values
        .iter()
        .map(|&x| x.max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
}

/// Hand-rolled complex Cholesky H = L·L† with explicit positivity checks;
/// on failure reports the first non-positive leading minor (1-based index
/// and the pivot value). nalgebra's complex Cholesky takes complex square
/// roots of indefinite pivots instead of failing, so it cannot be used to
/// certify positive-definiteness.
pub fn cholesky_checked(h: &CMatrix) -> std::result::Result<CMatrix, (usize, f64)> {
    let n = h.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = h[(j, j)].re;
        for k in 0..j {
            s -= l[(j, k)].norm_sqr();
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err((j + 1, s));
        }
        let d = s.sqrt();
        l[(j, j)] = cr(d);
        for i in (j + 1)..n {
            let mut v = h[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / d;
        }
    }
    Ok(l)
}

/// det of the leading k×k principal minor of a Hermitian positive matrix.
pub fn leading_minor_det(h: &CMatrix, k: usize) -> Option<f64> {
    if k == 0 {
        return Some(1.0);
    }
    let l = cholesky_checked(&h.view((0, 0), (k, k)).into_owned()).ok()?;
    let mut d = 1.0;
    for i in 0..k {
        d *= l[(i, i)].re;
    }
    Some(d * d)
}

/// All leading minors det(H|F_k) for k = 0..n from a single factorization,
/// or the index of the first non-positive minor.
pub fn leading_minor_dets(h: &CMatrix) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let l = cholesky_checked(h)?;
    let n = h.nrows();
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    let mut acc = 1.0;
    for i in 0..n {
        let d = l[(i, i)].re;
        acc *= d * d;
        out.push(acc);
    }
    Ok(out)
}

/// Cholesky factor L with H = L·L†, or None when H is not positive-definite.
pub fn cholesky_l(h: &CMatrix) -> Option<CMatrix> {
    cholesky_checked(h).ok()
}

/// Generalized positive eigenproblem B v = λ A v for Hermitian B and
/// Hermitian positive-definite A, i.e. the spectrum of the A-self-adjoint
/// endomorphism A⁻¹B. Returns eigenvalues ascending with A-orthonormal
/// eigenvectors as columns.
pub fn generalized_herm_eigen(a: &CMatrix, b: &CMatrix) -> Option<(Vec<f64>, CMatrix)> {
    let l = cholesky_l(&hermitize(a))?;
    let linv = inv(&l)?;
    let w = &linv * hermitize(b) * linv.adjoint();
    let eig = herm_eigen(&w);
    let vecs = linv.adjoint() * eig.vectors;
    Some((eig.values, vecs))
}

/// Solve the upper-triangular system U x = b by back substitution.
pub fn solve_upper_triangular(u: &CMatrix, b: &CVector) -> CVector {
    let n = u.nrows();
    let mut x = CVector::zeros(n);
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= u[(i, j)] * x[j];
        }
        x[i] = s / u[(i, i)];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_hermitian(n: usize) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |i, j| {
            c(((i * 13 + j * 7) % 11) as f64 * 0.1, (i as f64 - j as f64) * 0.07)
        });
        hermitize(&a)
    }

    #[test]
    fn herm_exp_inverts_log() {
        let m = sample_hermitian(5);
        let e = herm_exp(&m);
        let back = herm_fn(&e, f64::ln);
        assert!((back - &m).norm() < 1e-12);
    }

    #[test]
    fn leading_minors_match_lu_det() {
        let m = sample_hermitian(4);
        let h = herm_exp(&m);
        for k in 1..=4 {
            let sub = h.view((0, 0), (k, k)).into_owned();
            let det_lu = sub.lu().determinant();
            let det_chol = leading_minor_det(&h, k).unwrap();
            assert!((det_lu.re - det_chol).abs() < 1e-12 * det_chol.abs().max(1.0));
            assert!(det_lu.im.abs() < 1e-12);
        }
    }

    #[test]
    fn generalized_eigen_diagonalizes() {
        let a = herm_exp(&sample_hermitian(4));
        let b = herm_exp(&sample_hermitian(4).scale(0.3));
        let (vals, vecs) = generalized_herm_eigen(&a, &b).unwrap();
        for (k, &lam) in vals.iter().enumerate() {
            let v = vecs.column(k).into_owned();
            let lhs = &b * &v;
            let rhs = (&a * &v).scale(lam);
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }
}
