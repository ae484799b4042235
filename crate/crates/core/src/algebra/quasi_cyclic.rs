//! Quasi-cyclic vectors: the wedge volume ω(f,e) = e ∧ f(e) ∧ … ∧ f^{m−2}(e)
//! and its stability under small perturbations of f.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_l, inv, op_norm, CMatrix, CVector};

/// |ω(f,e)|_h, the h-volume of {e, f e, …, f^{m−2} e}, computed through an
/// h-orthonormal frame as sqrt(det(Y†Y)). Zero exactly when the m−1 orbit
/// vectors are dependent.
pub fn quasi_cyclic_volume(f: &CMatrix, e: &CVector, h: &CMatrix) -> Result<f64> {
    let m = f.nrows();
    if f.ncols() != m || e.len() != m || h.nrows() != m || h.ncols() != m {
        return Err(Error::DimensionMismatch("quasi_cyclic_volume inputs".into()));
    }
    if m < 2 {
        return Ok(1.0);
    }
    let l = cholesky_l(h).ok_or(Error::NotPositiveDefinite { minor: m, value: f64::NAN })?;
    let ladj = l.adjoint();
    let mut orbit = CMatrix::zeros(m, m - 1);
    let mut v = e.clone();
    for k in 0..(m - 1) {
        orbit.set_column(k, &v);
        v = f * v;
    }
    let y = &ladj * orbit;
    let gram = y.adjoint() * &y;
    let det = gram.lu().determinant().re;
    Ok(det.max(0.0).sqrt())
}

/// |e|_h.
pub fn vector_norm(e: &CVector, h: &CMatrix) -> f64 {
    (e.adjoint() * h * e)[(0, 0)].re.max(0.0).sqrt()
}

/// h-operator norm of an endomorphism, |f|_h = |L† f L^{-†}|_op.
pub fn endomorphism_norm(f: &CMatrix, h: &CMatrix) -> Result<f64> {
    let l = cholesky_l(h)
        .ok_or(Error::NotPositiveDefinite { minor: h.nrows(), value: f64::NAN })?;
    let linv_adj = inv(&l.adjoint()).expect("triangular");
    Ok(op_norm(&(l.adjoint() * f * linv_adj)))
}

/// Outcome of the wedge-volume stability check.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// None when a precondition failed (named in `skipped_because`).
    pub slack: Option<f64>,
    pub skipped_because: Option<String>,
    /// The admissible perturbation radius ε₀(m, A, ρ).
    pub epsilon0: f64,
    pub volume_f: f64,
    pub volume_f1: f64,
}

impl StabilityReport {
    pub fn holds(&self) -> bool {
        matches!(self.slack, Some(s) if s > 0.0)
    }
}

/// ε₀(m, A, ρ) from the explicit perturbation estimate
/// |ω(f,e) − ω(f₁,e)| ≤ (m−1)(1+A)^{(m−1)(m−2)/2}·|f−f₁|·|e|^{m−1},
/// chosen so that the wedge volume can drop by at most ρ/2·|e|^{m−1}.
pub fn stability_epsilon0(m: usize, a: f64, rho: f64) -> f64 {
    let exponent = ((m - 1) * (m - 2) / 2) as f64;
    rho / (2.0 * (m as f64 - 1.0) * (1.0 + a).powf(exponent))
}

/// Checks that |ω(f₁,e)|_h stays above (ρ/2)|e|_h^{m−1} whenever
/// |f − f₁|_h ≤ ε₀(m, |f|_h, ρ). Precondition failures are reported, not
/// treated as counterexamples.
pub fn quasi_cyclic_stability_margin(
    f: &CMatrix,
    f1: &CMatrix,
    e: &CVector,
    h: &CMatrix,
    rho: f64,
) -> Result<StabilityReport> {
    let m = f.nrows();
    if rho <= 0.0 {
        return Err(Error::Precondition("rho must be positive".into()));
    }
    let a = endomorphism_norm(f, h)?;
    let en = vector_norm(e, h);
    let vol_f = quasi_cyclic_volume(f, e, h)?;
    let vol_f1 = quasi_cyclic_volume(f1, e, h)?;
    let epsilon0 = stability_epsilon0(m, a, rho);

    let mut skipped = None;
    if en == 0.0 {
        skipped = Some("e must be nonzero".to_string());
    } else if rho * en.powi(m as i32 - 1) > vol_f {
        skipped = Some(format!(
            "rho*|e|^(m-1) = {:.3e} exceeds |omega(f,e)| = {:.3e}",
            rho * en.powi(m as i32 - 1),
            vol_f
        ));
    } else {
        let diff = endomorphism_norm(&(f - f1), h)?;
        if diff > epsilon0 {
            skipped = Some(format!(
                "|f - f1| = {diff:.3e} exceeds epsilon0 = {epsilon0:.3e}"
            ));
        }
    }

    let slack = if skipped.is_none() {
        Some(vol_f1 - 0.5 * rho * en.powi(m as i32 - 1))
    } else {
        None
    };
    Ok(StabilityReport { slack, skipped_because: skipped, epsilon0, volume_f: vol_f, volume_f1: vol_f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nilpotent_shift(m: usize) -> CMatrix {
        CMatrix::from_fn(m, m, |i, j| if i == j + 1 { cr(1.0) } else { cr(0.0) })
    }

    fn random_matrix(m: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(m, m, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn jordan_block_orbit_has_unit_volume() {
        for m in 2..=6 {
            let f = nilpotent_shift(m);
            let e = CVector::from_fn(m, |i, _| if i == 0 { cr(1.0) } else { cr(0.0) });
            let h = CMatrix::identity(m, m);
            assert!((quasi_cyclic_volume(&f, &e, &h).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_endomorphism_kills_volume() {
        let m = 4;
        let f = CMatrix::zeros(m, m);
        let e = CVector::from_fn(m, |i, _| cr((i + 1) as f64));
        let h = CMatrix::identity(m, m);
        assert_eq!(quasi_cyclic_volume(&f, &e, &h).unwrap(), 0.0);
    }

    #[test]
    fn volume_matches_direct_gram_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..100 {
            let m = 3 + (trial % 4);
            let f = random_matrix(m, &mut rng);
            let e = CVector::from_fn(m, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let g = random_matrix(m, &mut rng);
            let h = &g * g.adjoint() + CMatrix::identity(m, m).scale(0.5);

            // independent oracle: assemble the Gram matrix entrywise under h
            let mut orbit: Vec<CVector> = Vec::new();
            let mut v = e.clone();
            for _ in 0..(m - 1) {
                orbit.push(v.clone());
                v = &f * v;
            }
            let mut gram = CMatrix::zeros(m - 1, m - 1);
            for i in 0..(m - 1) {
                for j in 0..(m - 1) {
                    gram[(i, j)] = (orbit[j].adjoint() * &h * &orbit[i])[(0, 0)];
                }
            }
            let oracle = gram.lu().determinant().re.max(0.0).sqrt();
            let got = quasi_cyclic_volume(&f, &e, &h).unwrap();
            let rel = (got - oracle).abs() / oracle.abs().max(1e-30);
            assert!(rel <= 1e-10, "trial {trial}: got {got:.6e}, oracle {oracle:.6e}");
        }
    }

    #[test]
    fn unperturbed_margin_has_large_slack() {
        let m = 4;
        let f = nilpotent_shift(m);
        let e = CVector::from_fn(m, |i, _| if i == 0 { cr(1.0) } else { cr(0.0) });
        let h = CMatrix::identity(m, m);
        let vol = quasi_cyclic_volume(&f, &e, &h).unwrap();
        let rho = vol; // the tightest admissible rho
        let rep = quasi_cyclic_stability_margin(&f, &f, &e, &h, rho).unwrap();
        assert!(rep.holds());
        assert!(rep.slack.unwrap() >= 0.5 * rho - 1e-14);
    }

    #[test]
    fn admissible_perturbations_keep_the_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..100 {
            let m = 3 + (trial % 5);
            let f = nilpotent_shift(m) + random_matrix(m, &mut rng).scale(0.2);
            let e = CVector::from_fn(m, |i, _| if i == 0 { cr(1.0) } else { cr(0.0) });
            let h = CMatrix::identity(m, m);
            let vol = quasi_cyclic_volume(&f, &e, &h).unwrap();
            let en = vector_norm(&e, &h);
            let rho = 0.8 * vol / en.powi(m as i32 - 1);
            let a = endomorphism_norm(&f, &h).unwrap();
            let eps0 = stability_epsilon0(m, a, rho);

            let dir = random_matrix(m, &mut rng);
            let dn = endomorphism_norm(&dir, &h).unwrap();
            let f1 = &f + dir.scale(0.5 * eps0 / dn);
            let rep = quasi_cyclic_stability_margin(&f, &f1, &e, &h, rho).unwrap();
            assert!(rep.skipped_because.is_none(), "trial {trial}: {:?}", rep.skipped_because);
            assert!(rep.holds(), "trial {trial}: slack {:?}", rep.slack);
        }
    }

    #[test]
    fn oversized_perturbation_reports_precondition_not_failure() {
        let m = 4;
        let f = nilpotent_shift(m);
        let e = CVector::from_fn(m, |i, _| if i == 0 { cr(1.0) } else { cr(0.0) });
        let h = CMatrix::identity(m, m);
        let rho = 0.5;
        // collapse the orbit entirely: f1 = 0 is far beyond epsilon0
        let f1 = CMatrix::zeros(m, m);
        let rep = quasi_cyclic_stability_margin(&f, &f1, &e, &h, rho).unwrap();
        assert!(rep.skipped_because.is_some());
        assert!(rep.slack.is_none());
        assert_eq!(rep.volume_f1, 0.0);
    }
}
