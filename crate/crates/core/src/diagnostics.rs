//! Verification of the inequalities and identities a compatible harmonic
//! metric must satisfy: weak domination of the diagonal reference metric,
//! the filtration-determinant and slot-metric identities with the vanishing
//! of the off-pattern Higgs components, the energy-density bound with its
//! exponential strengthening, and the cooperative system obeyed by the
//! filtration logs v_k.

use serde::{Deserialize, Serialize};

use crate::algebra::{filtration_dets, gram_schmidt_transition, slot_metrics};
use crate::bundle::{higgs_norm_squared, theta_matrices, BundleSpec, HiggsTuple};
use crate::domain::laplacian_gx;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::solver::MetricField;

/// Per-filtration-step domination margins of `h` against a reference field:
/// margin_k = min over interior nodes of log det(ref|F_k) − log det(h|F_k).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominationReport {
    /// minima per k = 1..2n
    pub min_margins: Vec<f64>,
    /// the largest margin anywhere (strictness witness)
    pub max_margin: f64,
    pub worst: f64,
    /// per-node margin minimized over k (zero on the boundary ring)
    pub margin_field: Vec<f64>,
}

impl DominationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.worst >= -tol
    }
}

/// log-determinants of the filtration steps at every node.
fn log_dets(field: &MetricField) -> Result<Vec<Vec<f64>>> {
    field
        .h
        .iter()
        .map(|h| Ok(filtration_dets(h)?.iter().skip(1).map(|d| d.ln()).collect()))
        .collect()
}

pub fn domination_report(
    h: &MetricField,
    reference: &MetricField,
) -> Result<DominationReport> {
    if h.grid.nr != reference.grid.nr || h.grid.nphi != reference.grid.nphi {
        return Err(Error::GridMismatch);
    }
    let dim = h.dim();
    let ld_h = log_dets(h)?;
    let ld_r = log_dets(reference)?;
    let mut min_margins = vec![f64::INFINITY; dim];
    let mut max_margin = f64::NEG_INFINITY;
    let mut margin_field = vec![0.0_f64; h.grid.node_count()];
    for p in h.grid.interior_nodes() {
        let mut node_min = f64::INFINITY;
        for k in 0..dim {
            let m = ld_r[p][k] - ld_h[p][k];
            min_margins[k] = min_margins[k].min(m);
            max_margin = max_margin.max(m);
            node_min = node_min.min(m);
        }
        margin_field[p] = node_min;
    }
    let worst = min_margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DominationReport { min_margins, max_margin, worst, margin_field })
}

/// Violations of the structural identities of an SO-compatible metric, all
/// reported as maxima over the sampled nodes:
/// determinant symmetry det(h|F_k) = det(h|F_{2n−k}), slot reciprocity
/// h_k·h_{2n−k+1} = 1, the odd-rank middle identities
/// det(h|F_n) = det(h|F_{n+1}) and H_n = H_{n+1} = 1, and the vanishing
/// Higgs components γ (n even) or γ′ (n odd) of the orthogonally decomposed
/// Higgs field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuralReport {
    pub det_symmetry: f64,
    pub slot_reciprocity: f64,
    pub middle_dets: f64,
    pub middle_slots: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
}

impl StructuralReport {
    pub fn max_violation(&self) -> f64 {
        self.det_symmetry
            .max(self.slot_reciprocity)
            .max(self.middle_dets)
            .max(self.middle_slots)
            .max(self.gamma)
            .max(self.gamma_prime)
    }
}

/// Pointwise structural identities for a single metric matrix and a Higgs
/// matrix in the weight frame.
pub fn structural_identities_at(
    spec: &BundleSpec,
    h: &CMatrix,
    a: &CMatrix,
) -> Result<StructuralReport> {
    let n = spec.n;
    let dim = 2 * n;
    let dets = filtration_dets(h)?;
    let slots = slot_metrics(h)?;

    let mut det_symmetry = 0.0_f64;
    for k in 1..dim {
        let rel = (dets[k] - dets[dim - k]).abs() / dets[k].abs().max(1e-300);
        det_symmetry = det_symmetry.max(rel);
    }
    let mut slot_reciprocity = 0.0_f64;
    for k in 1..=dim {
        slot_reciprocity = slot_reciprocity.max((slots[k - 1] * slots[dim - k] - 1.0).abs());
    }
    let (middle_dets, middle_slots) = if n % 2 == 1 {
        let rel = (dets[n] - dets[n + 1]).abs() / dets[n].abs().max(1e-300);
        let hs = (slots[n - 1] - 1.0).abs().max((slots[n] - 1.0).abs());
        (rel, hs)
    } else {
        (0.0, 0.0)
    };

    // off-pattern Higgs components in the orthogonal slot decomposition
    let t = gram_schmidt_transition(h)?;
    let ahat = &t.inverse_p * a * &t.p;
    let (gamma, gamma_prime) = if n >= 2 {
        (ahat[(n, n - 1)].norm(), ahat[(n + 1, n)].norm())
    } else {
        (0.0, 0.0)
    };
    let (gamma, gamma_prime) =
        if n % 2 == 0 { (gamma, 0.0) } else { (0.0, gamma_prime) };

    Ok(StructuralReport { det_symmetry, slot_reciprocity, middle_dets, middle_slots, gamma, gamma_prime })
}

/// Field version: maxima over interior nodes, with the Higgs matrix
/// evaluated per node.
pub fn structural_identities(
    spec: &BundleSpec,
    q: &HiggsTuple,
    h: &MetricField,
) -> Result<StructuralReport> {
    let grid = &h.grid;
    let mut acc = StructuralReport {
        det_symmetry: 0.0,
        slot_reciprocity: 0.0,
        middle_dets: 0.0,
        middle_slots: 0.0,
        gamma: 0.0,
        gamma_prime: 0.0,
    };
    for p in grid.interior_nodes() {
        let a = theta_matrices(spec, q, grid.z(p)).1;
        let r = structural_identities_at(spec, &h.h[p], &a)?;
        acc.det_symmetry = acc.det_symmetry.max(r.det_symmetry);
        acc.slot_reciprocity = acc.slot_reciprocity.max(r.slot_reciprocity);
        acc.middle_dets = acc.middle_dets.max(r.middle_dets);
        acc.middle_slots = acc.middle_slots.max(r.middle_slots);
        acc.gamma = acc.gamma.max(r.gamma);
        acc.gamma_prime = acc.gamma_prime.max(r.gamma_prime);
    }
    Ok(acc)
}

/// Energy density report: e(f) = (2n−2)·|θ|²_{h,g_X} per node, the constant
/// lower bound 2n(n−1)²(2n−1)/3, and the exponential strengthening
/// e/(2n−2) ≥ Q·exp(w_n/Q) with Q = n(n−1)(2n−1)/3 and w_n = −2Σ_{k<n} v_k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub higgs_norm_sq: Vec<f64>,
    pub energy: Vec<f64>,
    pub bound: f64,
    /// min over interior of e(f) − bound
    pub min_margin: f64,
    /// min over interior of e/(2n−2) − Q·exp(w_n/Q)
    pub min_strengthening_margin: f64,
    /// min over interior of w_n (≥ 0 under weak domination)
    pub min_wn: f64,
}

pub fn energy_report(
    spec: &BundleSpec,
    q: &HiggsTuple,
    h: &MetricField,
    reference: &MetricField,
) -> Result<EnergyReport> {
    let grid = &h.grid;
    let n = spec.n;
    let nodes = grid.node_count();
    let big_q = (n * (n - 1) * (2 * n - 1)) as f64 / 3.0;
    let bound = (2 * n) as f64 * ((n - 1) * (n - 1) * (2 * n - 1)) as f64 / 3.0;

    let ld_h = log_dets(h)?;
    let ld_r = log_dets(reference)?;
    let mut higgs_norm_sq = Vec::with_capacity(nodes);
    let mut energy = Vec::with_capacity(nodes);
    let mut min_margin = f64::INFINITY;
    let mut min_strength = f64::INFINITY;
    let mut min_wn = f64::INFINITY;
    for p in 0..nodes {
        let a = theta_matrices(spec, q, grid.z(p)).1;
        let hn = higgs_norm_squared(&a, &h.h[p], grid.g(p));
        let e = (2 * n - 2) as f64 * hn;
        higgs_norm_sq.push(hn);
        energy.push(e);
        if grid.is_boundary(p) {
            continue;
        }
        min_margin = min_margin.min(e - bound);
        if n >= 2 {
            let wn: f64 = -2.0
                * (0..(n - 1))
                    .map(|k| ld_h[p][k] - ld_r[p][k])
                    .sum::<f64>();
            min_wn = min_wn.min(wn);
            let strengthened = big_q * (wn / big_q).exp();
            min_strength = min_strength.min(hn - strengthened);
        }
    }
    if n < 2 {
        min_strength = 0.0;
        min_wn = 0.0;
    }
    Ok(EnergyReport {
        higgs_norm_sq,
        energy,
        bound,
        min_margin,
        min_strengthening_margin: min_strength,
        min_wn,
    })
}

/// The discrete cooperative system obeyed by v_k = log det(h|F_k) −
/// log det(h_X|F_k) for k = 1..n:
///   ½·Δ v_k + c_k(v_{k−1} − 2v_k + v_{k+1}) ≥ 0   (k < n),
///   ½·Δ v_n + c_n(v_{n−2} − v_n) ≥ 0,
/// with the coefficients assembled from the reference filtration ratios and
/// the closed-form integral ∫₀¹e^{(1−t)x}dt = (eˣ−1)/x.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VkReport {
    /// sup over interior nodes of v_k, per k = 1..n
    pub sup_interior: Vec<f64>,
    /// sup over boundary nodes of v_k
    pub sup_boundary: Vec<f64>,
    /// min over interior of the k-th differential-inequality residual
    pub min_inequality_residual: Vec<f64>,
    /// min over nodes and k of the coefficients c_k (cooperativity demands ≥ 0)
    pub min_coefficient: f64,
    /// the coupling graph of the system is connected (full coupling)
    pub fully_coupled: bool,
    /// the Δ²-based tolerance scale: max_k sup |Δ v_k|
    pub laplacian_scale: f64,
    /// scale of the log-determinant fields being differenced, for the
    /// reported δ = 10·Δ²·scale threshold
    pub logdet_scale: f64,
    /// per-node v_k samples, k = 1..n
    pub v_fields: Vec<Vec<f64>>,
}

/// (eˣ − 1)/x with its x → 0 limit.
fn expm1_over_x(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

pub fn vk_cooperative_check(
    spec: &BundleSpec,
    h: &MetricField,
    reference: &MetricField,
) -> Result<VkReport> {
    let n = spec.n;
    if n < 2 {
        return Ok(VkReport {
            sup_interior: vec![],
            sup_boundary: vec![],
            min_inequality_residual: vec![],
            min_coefficient: 0.0,
            fully_coupled: true,
            laplacian_scale: 0.0,
            logdet_scale: 0.0,
            v_fields: vec![],
        });
    }
    let grid = &h.grid;
    let nodes = grid.node_count();
    let ld_h = log_dets(h)?;
    let ld_r = log_dets(reference)?;

    // v_k fields, k = 1..n (index k-1)
    let mut v: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); nodes]; n];
    for p in 0..nodes {
        for k in 0..n {
            v[k][p] = C64::new(ld_h[p][k] - ld_r[p][k], 0.0);
        }
    }
    let lap: Vec<Vec<C64>> = v.iter().map(|f| laplacian_gx(grid, f)).collect();

    let mut sup_interior = vec![f64::NEG_INFINITY; n];
    let mut sup_boundary = vec![f64::NEG_INFINITY; n];
    let mut min_resid = vec![f64::INFINITY; n];
    let mut min_coeff = f64::INFINITY;
    let mut lap_scale = 0.0_f64;

    for p in 0..nodes {
        let dets_r = filtration_dets(&reference.h[p])?;
        let vk = |k: isize| -> f64 {
            if k <= 0 { 0.0 } else { v[(k - 1) as usize][p].re }
        };
        if grid.is_boundary(p) {
            for k in 0..n {
                sup_boundary[k] = sup_boundary[k].max(vk(k as isize + 1));
            }
            continue;
        }
        let two_over_g = 2.0 / grid.g(p);
        for k in 1..=n {
            sup_interior[k - 1] = sup_interior[k - 1].max(vk(k as isize));
            lap_scale = lap_scale.max(lap[k - 1][p].re.abs());
            let (coeff, coupling) = if k < n {
                let ratio = dets_r[k - 1] * dets_r[k + 1] / (dets_r[k] * dets_r[k]);
                let x = vk(k as isize - 1) + vk(k as isize + 1) - 2.0 * vk(k as isize);
                let c = ratio * two_over_g * expm1_over_x(x);
                (c, x)
            } else {
                let ratio = dets_r[n - 2] / dets_r[n];
                let x = vk(n as isize - 2) - vk(n as isize);
                let c = ratio * two_over_g * expm1_over_x(x);
                (c, x)
            };
            min_coeff = min_coeff.min(coeff);
            let resid = 0.5 * lap[k - 1][p].re + coeff * coupling;
            min_resid[k - 1] = min_resid[k - 1].min(resid);
        }
    }

    // full coupling: rows k ↔ k±1 (k < n) plus n ↔ n−2 connect {1..n}
    let fully_coupled = {
        let mut seen = vec![false; n + 1];
        let mut stack = vec![1usize];
        while let Some(k) = stack.pop() {
            if k == 0 || k > n || seen[k] {
                continue;
            }
            seen[k] = true;
            if k < n {
                stack.push(k + 1);
                if k > 1 {
                    stack.push(k - 1);
                }
            } else if n >= 2 {
                stack.push(n - 2);
            }
        }
        (1..=n).all(|k| seen[k] || k == 0)
    };

    // scale of the differenced fields, for the reported δ threshold
    let mut logdet_scale = 1.0_f64;
    for field in [&ld_h, &ld_r] {
        for k in 0..n {
            let f: Vec<C64> = (0..nodes).map(|p| C64::new(field[p][k], 0.0)).collect();
            let lap_f = laplacian_gx(grid, &f);
            for p in grid.interior_nodes() {
                logdet_scale = logdet_scale.max(lap_f[p].re.abs());
            }
        }
    }

    let v_fields = v
        .iter()
        .map(|f| f.iter().map(|z| z.re).collect::<Vec<f64>>())
        .collect();

    Ok(VkReport {
        sup_interior,
        sup_boundary,
        min_inequality_residual: min_resid,
        min_coefficient: min_coeff,
        fully_coupled,
        laplacian_scale: lap_scale,
        logdet_scale,
        v_fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{build_bundle, hx_field, sample_so_compatible};
    use crate::domain::build_grid;
    use crate::solver::MetricField;
    use std::sync::Arc;

    fn hx_metric(n: usize, radius: f64, nr: usize, nphi: usize) -> MetricField {
        let spec = build_bundle(n).unwrap();
        let grid = Arc::new(build_grid(radius, nr, nphi).unwrap());
        let h = hx_field(&spec, &grid);
        MetricField { grid, h }
    }

    #[test]
    fn reference_dominates_itself_with_zero_margins() {
        for n in 1..=5 {
            let f = hx_metric(n, 0.6, 12, 16);
            let rep = domination_report(&f, &f).unwrap();
            assert_eq!(rep.worst, 0.0, "n={n}");
            assert_eq!(rep.max_margin, 0.0);
        }
    }

    #[test]
    fn reference_minors_at_center_n2() {
        // minors of diag(1/2, 1, 1, 2) are (1/2, 1/2, 1/2, 1): the middle
        // symmetry det F_1 = det F_3 is visible directly
        let spec = build_bundle(2).unwrap();
        let h = crate::bundle::hx_matrix(&spec, 4.0);
        let dets = filtration_dets(&h).unwrap();
        let expect = [1.0, 0.5, 0.5, 0.5, 1.0];
        for (d, e) in dets.iter().zip(expect.iter()) {
            assert!((d - e).abs() < 1e-14);
        }
    }

    #[test]
    fn structural_identities_on_random_so_compatible() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for n in 1..=4usize {
            let spec = build_bundle(n).unwrap();
            for seed in 0..50u64 {
                let h = sample_so_compatible(&spec, seed, 0.6).unwrap();
                let mut q = HiggsTuple::zero(n);
                for j in 0..n {
                    q.coefficients[j] = vec![
                        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                    ];
                }
                let z = num_complex::Complex64::new(
                    0.8 * (rng.random::<f64>() - 0.5),
                    0.8 * (rng.random::<f64>() - 0.5),
                );
                let a = theta_matrices(&spec, &q, z).1;
                let rep = structural_identities_at(&spec, &h, &a).unwrap();
                assert!(
                    rep.max_violation() <= 1e-10,
                    "n={n} seed={seed}: {rep:?}"
                );
            }
        }
    }

    #[test]
    fn non_compatible_metric_breaks_reciprocity() {
        let spec = build_bundle(2).unwrap();
        let mut found = 0;
        for seed in 0..20u64 {
            let mut h = sample_so_compatible(&spec, seed, 0.6).unwrap();
            h[(0, 0)] *= 3.0;
            let a = theta_matrices(&spec, &HiggsTuple::zero(2), num_complex::Complex64::new(0.1, 0.2)).1;
            let rep = structural_identities_at(&spec, &h, &a).unwrap();
            if rep.slot_reciprocity > 1e-3 {
                found += 1;
            }
        }
        assert!(found >= 18, "{found}/20");
    }

    #[test]
    fn energy_of_reference_is_the_closed_form() {
        for n in 2..=3usize {
            let spec = build_bundle(n).unwrap();
            let f = hx_metric(n, 0.5, 12, 16);
            let q = HiggsTuple::zero(n);
            let rep = energy_report(&spec, &q, &f, &f).unwrap();
            let expect = (2 * n) as f64 * ((n - 1) * (n - 1) * (2 * n - 1)) as f64 / 3.0;
            for p in f.grid.interior_nodes() {
                assert!((rep.energy[p] - expect).abs() < 1e-12, "n={n}");
            }
            assert!(rep.min_margin.abs() < 1e-12);
            assert!(rep.min_strengthening_margin.abs() < 1e-12);
        }
    }

    #[test]
    fn vk_of_reference_vanishes_identically() {
        let spec = build_bundle(2).unwrap();
        let f = hx_metric(2, 0.5, 16, 16);
        let rep = vk_cooperative_check(&spec, &f, &f).unwrap();
        for k in 0..2 {
            assert!(rep.sup_interior[k].abs() < 1e-13);
            assert!(rep.min_inequality_residual[k].abs() < 1e-10);
        }
        assert!(rep.fully_coupled);
        assert!(rep.min_coefficient > 0.0);
    }

    #[test]
    fn vk_coefficient_oracle_at_reference() {
        // c_1 at v ≡ 0 must equal the constant k(2n−1−k)/2 = 1 for n=2, k=1
        let spec = build_bundle(2).unwrap();
        let f = hx_metric(2, 0.5, 12, 16);
        let p = 0;
        let dets_r = filtration_dets(&f.h[p]).unwrap();
        let ratio = dets_r[0] * dets_r[2] / (dets_r[1] * dets_r[1]);
        let c1 = ratio * 2.0 / f.grid.g(p);
        assert!((c1 - 1.0).abs() < 1e-13, "c1 = {c1}");
        // and c_n = 1/(a_{n−1}a_n) = 1
        let ratio_n = dets_r[0] / dets_r[2];
        let cn = ratio_n * 2.0 / f.grid.g(p);
        assert!((cn - 1.0).abs() < 1e-13, "cn = {cn}");
    }
}
