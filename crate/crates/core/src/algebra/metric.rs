//! Compatible Hermitian metrics and their seeded samplers.
//!
//! Sampling works on the Lie-algebra level: a Hermitian M is projected onto
//! the −1 eigenspace of the real-linear involution M ↦ −C·conj(M)·C and
//! exponentiated. Compatibility of exp(M) is then exact by construction and
//! tr M = 0 is forced, so det H = 1 comes for free.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::linalg::{c, fro, herm_eigen, herm_exp, hermitian_defect, hermitize, CMatrix};

use super::pairing::{compatibility_residual, PairingMatrix};

/// Default tolerance for the compatibility residual of certified metrics.
pub const EPS_COMPAT: f64 = 1e-10;

/// A Hermitian positive-definite metric certified compatible with a pairing.
#[derive(Debug, Clone)]
pub struct CompatibleMetric {
    pub h: CMatrix,
    pub pairing: PairingMatrix,
    pub residual: f64,
}

impl CompatibleMetric {
    pub fn new(h: CMatrix, pairing: PairingMatrix) -> Result<Self> {
        let defect = hermitian_defect(&h);
        if defect > 1e-12 * fro(&h).max(1.0) {
            return Err(Error::DimensionMismatch(format!(
                "metric must be Hermitian (defect {defect:.3e})"
            )));
        }
        let eig = herm_eigen(&h);
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite { minor: h.nrows(), value: min });
        }
        let residual = compatibility_residual(&h, &pairing)?;
        if residual > EPS_COMPAT {
            return Err(Error::IncompatibleMetric { residual });
        }
        Ok(Self { h, pairing, residual })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

pub fn random_hermitian(dim: usize, scale: f64, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    hermitize(&g).scale(2.0 * scale)
}

/// Project a Hermitian M onto {M : C·conj(M)·C = −M}.
///
/// Requires a real pairing with C·C = 1, which holds for every pairing this
/// crate constructs.
pub fn project_to_compatible_tangent(m: &CMatrix, pairing: &PairingMatrix) -> CMatrix {
    let cm = &pairing.entries;
    debug_assert!(
        fro(&(cm * cm - CMatrix::identity(cm.nrows(), cm.ncols()))) < 1e-12,
        "tangent projection assumes an involutive pairing"
    );
    let reflected = cm * m.map(|z| z.conj()) * cm;
    (m - reflected).scale(0.5)
}

/// Seeded sampler for metrics compatible with `pairing`.
///
/// `amplitude` controls conditioning: the Lie-algebra element is rescaled to
/// that Frobenius norm (when the projection is not identically zero).
pub fn sample_compatible_metric_with_amplitude(
    pairing: &PairingMatrix,
    seed: u64,
    amplitude: f64,
) -> Result<CompatibleMetric> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = random_hermitian(pairing.dim, 1.0, &mut rng);
    let mut m = project_to_compatible_tangent(&raw, pairing);
    let norm = fro(&m);
    if norm > 1e-14 {
        m = m.scale(amplitude / norm);
    }
    CompatibleMetric::new(herm_exp(&m), pairing.clone())
}

/// Seeded sampler with the default amplitude, for dim = 2n and the standard
/// weight-ordered pairing.
pub fn sample_compatible_metric(
    dim: usize,
    pairing: &PairingMatrix,
    seed: u64,
) -> Result<CompatibleMetric> {
    if pairing.dim != dim {
        return Err(Error::DimensionMismatch(format!(
            "requested dim {dim} but pairing has dim {}",
            pairing.dim
        )));
    }
    sample_compatible_metric_with_amplitude(pairing, seed, 0.6)
}

/// Deterministic det(H) for a certified compatible metric, as a cross-check.
pub fn det_of(h: &CMatrix) -> f64 {
    let d = h.clone().lu().determinant();
    d.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pairing::Ordering;
    use crate::linalg::cr;

    #[test]
    fn sampled_metric_is_compatible_and_unimodular() {
        let cw = PairingMatrix::standard_weight(2);
        let m = sample_compatible_metric(4, &cw, 0).unwrap();
        assert!(m.residual <= 1e-10);
        assert!((det_of(&m.h) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn determinant_one_across_seeds() {
        let cw = PairingMatrix::standard_weight(2);
        for seed in 0..20 {
            let m = sample_compatible_metric(4, &cw, seed).unwrap();
            assert!((det_of(&m.h) - 1.0).abs() <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn n1_sampler_gives_reciprocal_slot_metrics() {
        let cw = PairingMatrix::standard_weight(1);
        let m = sample_compatible_metric(2, &cw, 1).unwrap();
        let h11 = m.h[(0, 0)].re;
        let det = det_of(&m.h);
        // slot metrics h_1 = H_11 and h_2 = det/H_11 must be reciprocal
        let h1 = h11;
        let h2 = det / h11;
        assert!((h1 * h2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampler_is_deterministic_per_seed() {
        let cw = PairingMatrix::standard_weight(3);
        let a = sample_compatible_metric(6, &cw, 42).unwrap();
        let b = sample_compatible_metric(6, &cw, 42).unwrap();
        assert_eq!(a.h, b.h);
    }

    #[test]
    fn w_pairing_sampling_works() {
        let qw = PairingMatrix::w_pairing(3, Ordering::Block);
        let m = sample_compatible_metric_with_amplitude(&qw, 7, 0.5).unwrap();
        assert!(m.residual <= 1e-10);
    }

    #[test]
    fn incompatible_metric_rejected() {
        let cw = PairingMatrix::standard_weight(2);
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            cr(2.0), cr(1.0), cr(1.0), cr(1.0),
        ]));
        assert!(matches!(
            CompatibleMetric::new(h, cw),
            Err(Error::IncompatibleMetric { .. })
        ));
    }
}
