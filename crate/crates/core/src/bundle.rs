//! Construction of the SO₀(n,n) Hitchin-section data: the orthogonal
//! pairings on V and W, the Higgs field in block and weight orderings, the
//! holomorphic filtration and the diagonal reference metric h_X.
//!
//! Weight ordering lists the line-bundle slots as
//! K^{n−1}, K^{n−2}, …, K, 𝒪, 𝒪′, K^{−1}, …, K^{1−n}
//! with the second trivial slot 𝒪′ fixed at position n+1. The two trivial
//! slots are distinguished positionally only.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::algebra::{Ordering, PairingMatrix};
use crate::domain::DiskGrid;
use crate::error::{Error, Result};
use crate::linalg::{cr, CMatrix, C64};

/// What lives in a weight-frame slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotLabel {
    /// K^e, the e-th power of the canonical bundle (e = 0 is 𝒪)
    Power(i32),
    /// the second trivial line bundle
    OPrime,
}

/// The tuple of holomorphic differentials: q_j is a 2j-differential for
/// j ≤ n−1 and q_n is an n-differential, each stored as polynomial
/// coefficients in the disk coordinate (constant term first).
#[derive(Debug, Clone, PartialEq)]
pub struct HiggsTuple {
    pub n: usize,
    pub coefficients: Vec<Vec<C64>>,
}

impl HiggsTuple {
    pub fn zero(n: usize) -> Self {
        Self { n, coefficients: vec![Vec::new(); n] }
    }

    /// Tuple with a single nonzero slot (1-based j), e.g. the top
    /// differential j = n.
    pub fn single(n: usize, j: usize, coeffs: Vec<C64>) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::Precondition(format!("differential index {j} outside 1..={n}")));
        }
        let mut t = Self::zero(n);
        t.coefficients[j - 1] = coeffs;
        Ok(t)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| c.iter().all(|z| z.norm() == 0.0))
    }

    /// Degree d_j of the j-th differential (1-based): 2j for j ≤ n−1, n for j = n.
    pub fn degree(&self, j: usize) -> usize {
        if j == self.n { self.n } else { 2 * j }
    }

    /// Evaluate q_j (1-based) at z by Horner.
    pub fn eval(&self, j: usize, z: Complex64) -> C64 {
        let coeffs = &self.coefficients[j - 1];
        let mut acc = C64::new(0.0, 0.0);
        for &c in coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "differentials": (1..=self.n).map(|j| json!({
                "j": j,
                "degree": self.degree(j),
                "coefficients": self.coefficients[j - 1]
                    .iter()
                    .map(|z| json!([z.re, z.im]))
                    .collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidConfig { violations: vec![m.to_string()] };
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| bad("higgs.n"))? as usize;
        let mut t = Self::zero(n);
        let diffs = v
            .get("differentials")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("higgs.differentials"))?;
        for d in diffs {
            let j = d.get("j").and_then(Value::as_u64).ok_or_else(|| bad("higgs.j"))? as usize;
            if j == 0 || j > n {
                return Err(bad("higgs.j out of range"));
            }
            let coeffs = d
                .get("coefficients")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("higgs.coefficients"))?;
            t.coefficients[j - 1] = coeffs
                .iter()
                .map(|pair| {
                    let p = pair.as_array().filter(|p| p.len() == 2);
                    p.map(|p| C64::new(p[0].as_f64().unwrap_or(0.0), p[1].as_f64().unwrap_or(0.0)))
                        .ok_or_else(|| bad("higgs coefficient must be [re, im]"))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(t)
    }
}

/// The full bundle data for one rank parameter n.
#[derive(Debug, Clone)]
pub struct BundleSpec {
    pub n: usize,
    pub q_v: PairingMatrix,
    pub q_w: PairingMatrix,
    pub c_weight: PairingMatrix,
    /// block index → weight index (0-based)
    pub sigma: Vec<usize>,
    /// what sits in each weight slot
    pub slots: Vec<SlotLabel>,
    /// n = 1 collapses the symmetric space to a point
    pub degenerate: bool,
}

/// Index sets of the holomorphic filtration in the weight frame: F_k is
/// spanned by the first k slots.
#[derive(Debug, Clone)]
pub struct FiltrationIndex {
    pub sets: Vec<Vec<usize>>,
}

impl FiltrationIndex {
    pub fn new(dim: usize) -> Self {
        Self { sets: (0..=dim).map(|k| (0..k).collect()).collect() }
    }
}

impl BundleSpec {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn filtration(&self) -> FiltrationIndex {
        FiltrationIndex::new(self.dim())
    }

    /// Conjugate a block-ordered matrix into the weight frame.
    pub fn block_to_weight(&self, m: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(self.sigma[i], self.sigma[j])] = m[(i, j)];
            }
        }
        out
    }

    /// Conjugate a weight-ordered matrix into the block frame.
    pub fn weight_to_block(&self, m: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = m[(self.sigma[i], self.sigma[j])];
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let cpx_matrix = |m: &CMatrix| -> Value {
            Value::Array(
                (0..m.nrows())
                    .map(|i| {
                        Value::Array(
                            (0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect(),
                        )
                    })
                    .collect(),
            )
        };
        json!({
            "n": self.n,
            "q_v": cpx_matrix(&self.q_v.entries),
            "q_w": cpx_matrix(&self.q_w.entries),
            "c_weight": cpx_matrix(&self.c_weight.entries),
            "sigma": self.sigma,
            "slots": self.slots.iter().map(|s| match s {
                SlotLabel::Power(e) => json!({"power": e}),
                SlotLabel::OPrime => json!("o_prime"),
            }).collect::<Vec<_>>(),
            "filtration": self.filtration().sets,
            "degenerate": self.degenerate,
        })
    }
}

/// Weight position (0-based) of the slot holding K^e.
fn weight_position(n: usize, e: i32) -> usize {
    if e >= 0 {
        n - e as usize - 1
    } else {
        n + (-e) as usize
    }
}

pub fn build_bundle(n: usize) -> Result<BundleSpec> {
    if n == 0 {
        return Err(Error::Precondition("rank parameter n must be >= 1".into()));
    }
    let q_v = PairingMatrix::anti_diagonal(n, Ordering::Block);
    let q_w = PairingMatrix::w_pairing(n, Ordering::Block);
    let c_weight = PairingMatrix::standard_weight(n);
    let dim = 2 * n;

    let mut sigma = vec![0usize; dim];
    let mut slots = vec![SlotLabel::OPrime; dim];
    for b in 0..n {
        // V slot b holds K^{n-1-2b}
        let e = n as i32 - 1 - 2 * b as i32;
        let w = weight_position(n, e);
        sigma[b] = w;
        slots[w] = SlotLabel::Power(e);
    }
    for b in 0..n {
        // W slot b holds K^{n-2-2b} for b < n-1, O' last
        let w = if b + 1 < n {
            let e = n as i32 - 2 - 2 * b as i32;
            let w = weight_position(n, e);
            slots[w] = SlotLabel::Power(e);
            w
        } else {
            slots[n] = SlotLabel::OPrime;
            n
        };
        sigma[n + b] = w;
    }

    let spec = BundleSpec { n, q_v, q_w, c_weight, sigma, slots, degenerate: n == 1 };

    // the permuted block pairing must reproduce the closed-form C exactly
    let mut c_block = CMatrix::zeros(dim, dim);
    c_block.view_mut((0, 0), (n, n)).copy_from(&spec.q_v.entries);
    c_block.view_mut((n, n), (n, n)).copy_from(&spec.q_w.entries);
    let conj = spec.block_to_weight(&c_block);
    if conj != spec.c_weight.entries {
        return Err(Error::DimensionMismatch(
            "permutation of diag(Q_V, Q_W) does not match the weight pairing".into(),
        ));
    }
    Ok(spec)
}

/// η(q) at a point: first row (q₁, …, q_{n−1}, q_n), sub-diagonal ones, the
/// Toeplitz band q_{j−i+1} above the diagonal for columns below n, zero last
/// column except its top entry.
pub fn eta_matrix(spec: &BundleSpec, q: &HiggsTuple, z: Complex64) -> CMatrix {
    let n = spec.n;
    let mut m = CMatrix::zeros(n, n);
    for i in 1..=n {
        for j in 1..=n {
            let v = if i == j + 1 {
                cr(1.0)
            } else if i == 1 && j == n {
                q.eval(n, z)
            } else if i <= j && j <= n - 1 {
                q.eval(j - i + 1, z)
            } else {
                C64::new(0.0, 0.0)
            };
            m[(i - 1, j - 1)] = v;
        }
    }
    m
}

/// The Higgs matrix in both orderings: A_block = [[0, η],[η†, 0]] with
/// η† = Q_W⁻¹·ηᵀ·Q_V, and A_weight its σ-conjugate. The pairings are 0/1
/// matrices, so the adjoint is an exact entry rearrangement and the
/// skew-symmetry A_blockᵀ·Q̃ + Q̃·A_block = 0 with Q̃ = diag(Q_V, −Q_W)
/// holds identically in floating point.
pub fn theta_matrices(spec: &BundleSpec, q: &HiggsTuple, z: Complex64) -> (CMatrix, CMatrix) {
    let n = spec.n;
    let eta = eta_matrix(spec, q, z);
    let eta_dag = &spec.q_w.entries * eta.transpose() * &spec.q_v.entries;
    let mut a_block = CMatrix::zeros(2 * n, 2 * n);
    a_block.view_mut((0, n), (n, n)).copy_from(&eta);
    a_block.view_mut((n, 0), (n, n)).copy_from(&eta_dag);
    let a_weight = spec.block_to_weight(&a_block);
    (a_block, a_weight)
}

/// Skew-symmetry residual ‖Aᵀ·Q̃ + Q̃·A‖_F of a block-ordered Higgs matrix.
pub fn skew_symmetry_residual(spec: &BundleSpec, a_block: &CMatrix) -> f64 {
    let n = spec.n;
    let dim = 2 * n;
    let mut qt = CMatrix::zeros(dim, dim);
    qt.view_mut((0, 0), (n, n)).copy_from(&spec.q_v.entries);
    qt.view_mut((n, n), (n, n)).copy_from(&spec.q_w.entries.clone().scale(-1.0));
    (a_block.transpose() * &qt + &qt * a_block).norm()
}

/// The closed-form constants a_{k,n} of the diagonal reference metric,
/// a_{k,n} = [∏_{l<n} l(2n−1−l)/2]⁻¹·∏_{l<k} l(2n−1−l)/2 for k = 1..2n−1.
pub fn hx_constants(n: usize) -> Vec<f64> {
    let step = |l: usize| l as f64 * (2 * n - 1 - l) as f64 / 2.0;
    let prefactor: f64 = (1..n).map(step).product();
    let mut out = Vec::with_capacity(2 * n - 1);
    let mut cum = 1.0;
    for k in 1..=(2 * n - 1) {
        if k > 1 {
            cum *= step(k - 1);
        }
        out.push(cum / prefactor);
    }
    out
}

/// Diagonal h_X at one point, in the weight frame: slot k ≤ n carries
/// a_{k,n}·(g/2)^{k−n}, the 𝒪′ slot carries 1, slot n+1+m carries
/// a_{n+m,n}·(g/2)^m. Here g/2 is the fiber metric of the hyperbolic metric
/// on K^{−1}, so the slot weights are powers of g/2, not of the raw
/// conformal factor.
pub fn hx_matrix(spec: &BundleSpec, g: f64) -> CMatrix {
    let n = spec.n;
    let a = hx_constants(n);
    let lam = 0.5 * g;
    let dim = 2 * n;
    let mut m = CMatrix::zeros(dim, dim);
    for w in 1..=dim {
        let v = if w == n + 1 {
            1.0
        } else {
            let k = if w <= n { w } else { w - 1 };
            a[k - 1] * lam.powi(k as i32 - n as i32)
        };
        m[(w - 1, w - 1)] = cr(v);
    }
    m
}

/// h_X sampled on a grid.
pub fn hx_field(spec: &BundleSpec, grid: &DiskGrid) -> Vec<CMatrix> {
    (0..grid.node_count()).map(|p| hx_matrix(spec, grid.g(p))).collect()
}

/// |θ(q)|²_{h,g_X} at one point: (2/g)·tr(A·H⁻¹·A†·H), the conformally
/// natural squared norm of the Higgs field.
pub fn higgs_norm_squared(a: &CMatrix, h: &CMatrix, g: f64) -> f64 {
    let hinv = crate::linalg::inv(h).expect("metric is positive definite");
    (2.0 / g) * (a * hinv * a.adjoint() * h).trace().re
}

/// Seeded random metric compatible with the full SO-structure: independent
/// compatible factors on V and W assembled block-diagonally and conjugated
/// into the weight frame.
pub fn sample_so_compatible(spec: &BundleSpec, seed: u64, amplitude: f64) -> Result<CMatrix> {
    use crate::algebra::sample_compatible_metric_with_amplitude;
    let n = spec.n;
    let hv = sample_compatible_metric_with_amplitude(&spec.q_v, seed.wrapping_mul(2).wrapping_add(1), amplitude)?;
    let hw = sample_compatible_metric_with_amplitude(&spec.q_w, seed.wrapping_mul(2).wrapping_add(2), amplitude)?;
    let mut block = CMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&hv.h);
    block.view_mut((n, n), (n, n)).copy_from(&hw.h);
    Ok(spec.block_to_weight(&block))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::compatibility_residual;
    use crate::domain::build_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tuple(n: usize, rng: &mut impl Rng) -> HiggsTuple {
        let mut t = HiggsTuple::zero(n);
        for j in 0..n {
            let deg = rng.random_range(0..4);
            t.coefficients[j] = (0..=deg)
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
        }
        t
    }

    #[test]
    fn c_weight_n2_matches_display() {
        let spec = build_bundle(2).unwrap();
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
        assert_eq!(spec.c_weight.entries, expected);
    }

    #[test]
    fn c_weight_n1_is_identity() {
        let spec = build_bundle(1).unwrap();
        assert_eq!(spec.c_weight.entries, CMatrix::identity(2, 2));
        assert!(spec.degenerate);
    }

    #[test]
    fn c_weight_squares_to_identity_all_n() {
        for n in 1..=6 {
            let spec = build_bundle(n).unwrap();
            let sq = &spec.c_weight.entries * &spec.c_weight.entries;
            assert_eq!(sq, CMatrix::identity(2 * n, 2 * n), "n={n}");
        }
    }

    #[test]
    fn eta_n2_with_simple_q() {
        let spec = build_bundle(2).unwrap();
        // q1 = z, q2 = 7
        let mut q = HiggsTuple::zero(2);
        q.coefficients[0] = vec![cr(0.0), cr(1.0)];
        q.coefficients[1] = vec![cr(7.0)];
        let z = Complex64::new(0.3, -0.2);
        let eta = eta_matrix(&spec, &q, z);
        assert_eq!(eta[(0, 0)], C64::new(0.3, -0.2));
        assert_eq!(eta[(0, 1)], cr(7.0));
        assert_eq!(eta[(1, 0)], cr(1.0));
        assert_eq!(eta[(1, 1)], cr(0.0));
    }

    #[test]
    fn eta_zero_tuple_is_subdiagonal_shift() {
        for n in 2..=5 {
            let spec = build_bundle(n).unwrap();
            let q = HiggsTuple::zero(n);
            let eta = eta_matrix(&spec, &q, Complex64::new(0.1, 0.4));
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j + 1 { 1.0 } else { 0.0 };
                    assert_eq!(eta[(i, j)], cr(expect), "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn weight_theta_n2_zero_tuple() {
        let spec = build_bundle(2).unwrap();
        let q = HiggsTuple::zero(2);
        let (_, aw) = theta_matrices(&spec, &q, Complex64::new(0.2, 0.1));
        let expected = CMatrix::from_row_slice(
            4,
            4,
            &[
                cr(0.0), cr(0.0), cr(0.0), cr(0.0),
                cr(1.0), cr(0.0), cr(0.0), cr(0.0),
                cr(0.0), cr(0.0), cr(0.0), cr(0.0),
                cr(0.0), cr(1.0), cr(0.0), cr(0.0),
            ],
        );
        assert_eq!(aw, expected);
    }

    #[test]
    fn weight_theta_structure_random_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 2..=5usize {
            let spec = build_bundle(n).unwrap();
            for _ in 0..20 {
                let q = random_tuple(n, &mut rng);
                let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.9;
                let (ab, aw) = theta_matrices(&spec, &q, z);

                // trace free and exactly skew-symmetric
                assert_eq!(aw.trace(), C64::new(0.0, 0.0));
                assert_eq!(skew_symmetry_residual(&spec, &ab), 0.0);

                // sub-diagonal ones except the two middle hops, one at (n+2, n)
                for k in 1..(2 * n) {
                    let expect = if k == n || k == n + 1 { cr(0.0) } else { cr(1.0) };
                    assert_eq!(aw[(k, k - 1)], expect, "n={n} sub-diagonal at {k}");
                }
                assert_eq!(aw[(n + 1, n - 1)], cr(1.0));

                // nothing else below the sub-diagonal
                for i in 0..(2 * n) {
                    for j in 0..(2 * n) {
                        if i > j + 1 && !(i == n + 1 && j == n - 1) {
                            assert_eq!(aw[(i, j)], cr(0.0), "n={n} ({i},{j})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn frame_consistency_block_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in 1..=5usize {
            let spec = build_bundle(n).unwrap();
            for _ in 0..20 {
                let q = random_tuple(n, &mut rng);
                let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.8;
                let (ab, aw) = theta_matrices(&spec, &q, z);
                assert_eq!(spec.block_to_weight(&ab), aw);
                assert_eq!(spec.weight_to_block(&aw), ab);
            }
        }
    }

    #[test]
    fn hx_constants_small_n() {
        assert_eq!(hx_constants(2), vec![1.0, 1.0, 1.0]);
        let a3 = hx_constants(3);
        let expect = [1.0 / 6.0, 1.0 / 3.0, 1.0, 3.0, 6.0];
        for (got, want) in a3.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-14);
        }
        for n in 1..=6 {
            let a = hx_constants(n);
            assert!((a[n - 1] - 1.0).abs() < 1e-12, "a_nn must be 1 for n={n}");
        }
    }

    #[test]
    fn hx_matrix_center_n2() {
        let spec = build_bundle(2).unwrap();
        let m = hx_matrix(&spec, 4.0);
        let expect = [0.5, 1.0, 1.0, 2.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((m[(i, i)].re - e).abs() < 1e-15, "slot {i}");
        }
    }

    #[test]
    fn hx_is_compatible_and_det_symmetric() {
        for n in 1..=5usize {
            let spec = build_bundle(n).unwrap();
            let grid = build_grid(0.6, 12, 16).unwrap();
            let field = hx_field(&spec, &grid);
            for p in (0..grid.node_count()).step_by(37) {
                let res = compatibility_residual(&field[p], &spec.c_weight).unwrap();
                assert!(res <= 1e-12, "n={n} node {p} residual {res:.3e}");
                let dets = crate::algebra::filtration_dets(&field[p]).unwrap();
                for k in 1..(2 * n) {
                    let rel = (dets[k] - dets[2 * n - k]).abs() / dets[k].abs();
                    assert!(rel <= 1e-12, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn hx_higgs_norm_is_the_closed_form() {
        for n in 1..=5usize {
            let spec = build_bundle(n).unwrap();
            let q = HiggsTuple::zero(n);
            let grid = build_grid(0.5, 12, 16).unwrap();
            let field = hx_field(&spec, &grid);
            let expect = (n * (n - 1) * (2 * n - 1)) as f64 / 3.0;
            for p in (0..grid.node_count()).step_by(23) {
                let (_, aw) = theta_matrices(&spec, &q, grid.z(p));
                let got = higgs_norm_squared(&aw, &field[p], grid.g(p));
                assert!((got - expect).abs() <= 1e-12, "n={n} node {p}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn higgs_tuple_json_round_trip() {
        let mut q = HiggsTuple::zero(3);
        q.coefficients[0] = vec![C64::new(0.5, -0.25)];
        q.coefficients[2] = vec![cr(0.0), C64::new(0.0, 1.0)];
        let v = q.to_json();
        let back = HiggsTuple::from_json(&v).unwrap();
        assert_eq!(q, back);
    }
}
