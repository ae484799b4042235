//! The anti-linear real structure κ attached to a compatible metric by
//! h(u,v) = C(u, κ(v)), and the reciprocal-eigenspace exchange it induces on
//! the comparison automorphism of two compatible metrics.

use crate::error::{Error, Result};
use crate::linalg::{fro, generalized_herm_eigen, inv, CMatrix, CVector};

use super::metric::{CompatibleMetric, EPS_COMPAT};
use super::pairing::{compatibility_residual, PairingMatrix};

/// κ(v) = K·conj(v).
#[derive(Debug, Clone)]
pub struct RealStructure {
    pub kappa: CMatrix,
}

impl RealStructure {
    pub fn apply(&self, v: &CVector) -> CVector {
        &self.kappa * v.map(|z| z.conj())
    }

    /// ‖K·conj(K) − 1‖_F; zero when κ is an involution.
    pub fn involution_defect(&self) -> f64 {
        let n = self.kappa.nrows();
        let sq = &self.kappa * self.kappa.map(|z| z.conj());
        fro(&(sq - CMatrix::identity(n, n)))
    }
}

/// In the convention h(u,v) = conj-transpose(v)·H·u and C(u,v) = vᵀ·C·u,
/// the defining relation forces K = C⁻¹·Hᵀ (= C·conj(H) for the standard
/// real involutive pairings and Hermitian H).
pub fn real_structure(metric: &CompatibleMetric) -> Result<RealStructure> {
    real_structure_of(&metric.h, &metric.pairing)
}

/// Same as [`real_structure`] for a raw matrix; rejects metrics whose
/// compatibility residual exceeds the certification tolerance.
pub fn real_structure_of(h: &CMatrix, c: &PairingMatrix) -> Result<RealStructure> {
    let residual = compatibility_residual(h, c)?;
    if residual > EPS_COMPAT {
        return Err(Error::IncompatibleMetric { residual });
    }
    let cinv = inv(&c.entries).ok_or(Error::SingularPairing { det: 0.0 })?;
    let kappa = cinv * h.transpose();
    Ok(RealStructure { kappa })
}

/// Eigen data of the comparison automorphism s = H₁⁻¹·H₂ of two metrics:
/// positive eigenvalues ascending with H₁-orthonormal eigenvector columns.
pub struct ComparisonEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn comparison_eigen(h1: &CMatrix, h2: &CMatrix) -> Result<ComparisonEigen> {
    let (values, vectors) = generalized_herm_eigen(h1, h2)
        .ok_or(Error::NotPositiveDefinite { minor: h1.nrows(), value: f64::NAN })?;
    Ok(ComparisonEigen { values, vectors })
}

/// Worst h₁-angle between κ(V_a) and V_{a⁻¹} over the spectrum of
/// s = H₁⁻¹H₂. Zero when κ exchanges reciprocal eigenspaces exactly.
pub fn eigenspace_exchange_angle(
    h1: &CompatibleMetric,
    h2: &CompatibleMetric,
) -> Result<f64> {
    if h1.dim() != h2.dim() {
        return Err(Error::DimensionMismatch("metric dims differ".into()));
    }
    let kappa = real_structure(h1)?;
    let eig = comparison_eigen(&h1.h, &h2.h)?;
    let dim = eig.values.len();

    // group eigenvalues into clusters so repeated eigenvalues form one space
    let mut cluster_of = vec![0usize; dim];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..dim {
        let a = eig.values[i];
        if let Some(cid) = clusters.iter().position(|members| {
            let rep = eig.values[members[0]];
            (a - rep).abs() <= 1e-8 * rep.max(1.0)
        }) {
            clusters[cid].push(i);
            cluster_of[i] = cid;
        } else {
            cluster_of[i] = clusters.len();
            clusters.push(vec![i]);
        }
    }

    let mut worst = 0.0_f64;
    for i in 0..dim {
        let a = eig.values[i];
        let v = eig.vectors.column(i).into_owned();
        let w = kappa.apply(&v);
        // members of the reciprocal cluster
        let target: Vec<usize> = (0..dim)
            .filter(|&j| (eig.values[j] * a - 1.0).abs() <= 1e-6)
            .collect();
        let wn = (w.adjoint() * &h1.h * &w)[(0, 0)].re.sqrt();
        if target.is_empty() {
            worst = 1.0_f64.max(worst);
            continue;
        }
        let mut inside = CVector::zeros(dim);
        for &j in &target {
            let u = eig.vectors.column(j).into_owned();
            let coef = (u.adjoint() * &h1.h * &w)[(0, 0)];
            inside += u.scale(1.0) * coef;
        }
        let resid = &w - &inside;
        let rn = (resid.adjoint() * &h1.h * &resid)[(0, 0)].re.max(0.0).sqrt();
        worst = worst.max(rn / wn.max(1e-300));
    }
    let _ = cluster_of;
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::metric::sample_compatible_metric;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_metric_gives_kappa_equal_pairing() {
        let cw = PairingMatrix::standard_weight(2);
        let m = CompatibleMetric::new(CMatrix::identity(4, 4), cw.clone()).unwrap();
        let k = real_structure(&m).unwrap();
        assert_eq!(k.kappa, cw.entries);
    }

    #[test]
    fn kappa_is_an_involution_on_random_metrics() {
        for n in 1..=4 {
            let cw = PairingMatrix::standard_weight(n);
            for seed in 0..30 {
                let m = sample_compatible_metric(2 * n, &cw, seed).unwrap();
                let k = real_structure(&m).unwrap();
                assert!(k.involution_defect() <= 1e-10, "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn defining_relation_holds_on_random_vectors() {
        let cw = PairingMatrix::standard_weight(3);
        let m = sample_compatible_metric(6, &cw, 11).unwrap();
        let k = real_structure(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let u = CVector::from_fn(6, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let v = CVector::from_fn(6, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let h_uv = (v.adjoint() * &m.h * &u)[(0, 0)];
            let kv = k.apply(&v);
            let c_ukv = (kv.transpose() * &cw.entries * &u)[(0, 0)];
            assert!((h_uv - c_ukv).norm() <= 1e-10);
        }
    }

    #[test]
    fn kappa_exchanges_reciprocal_eigenspaces() {
        for n in 2..=4 {
            let cw = PairingMatrix::standard_weight(n);
            for seed in 0..10 {
                let h1 = sample_compatible_metric(2 * n, &cw, seed).unwrap();
                let h2 = sample_compatible_metric(2 * n, &cw, seed + 1000).unwrap();
                let angle = eigenspace_exchange_angle(&h1, &h2).unwrap();
                assert!(angle <= 1e-8, "n={n} seed={seed} angle {angle:.3e}");
            }
        }
    }

    #[test]
    fn incompatible_metric_rejected_with_residual() {
        let cw = PairingMatrix::standard_weight(2);
        let mut h = CMatrix::identity(4, 4);
        h[(0, 0)] = crate::linalg::cr(2.0);
        match real_structure_of(&h, &cw) {
            Err(Error::IncompatibleMetric { residual }) => assert!(residual > 0.1),
            other => panic!("expected incompatibility error, got {other:?}"),
        }
    }
}
