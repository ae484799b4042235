//! Integration tests of the Dirichlet solver: residual consistency at the
//! exact reference metric, linearization correctness against finite
//! differences, recovery of the reference solution, and the paired-metric
//! trace diagnostics.

use std::sync::Arc;

use hitchin_lab::algebra::{project_to_compatible_tangent, random_hermitian};
use hitchin_lab::bundle::{build_bundle, hx_matrix, theta_matrices, HiggsTuple};
use hitchin_lab::domain::build_grid;
use hitchin_lab::linalg::{cr, fro, herm_exp, hermitize, CMatrix, C64};
use hitchin_lab::solver::{
    build_cache, directional_derivative, exhaustion_sequence, hitchin_residual, hx_boundary,
    metric_pair_diagnostics, orthonormal_residual, solve_dirichlet, theta_field, Method,
    MetricField, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hx_metric_field(n: usize, radius: f64, nr: usize, nphi: usize) -> (Arc<hitchin_lab::domain::DiskGrid>, MetricField) {
    let spec = build_bundle(n).unwrap();
    let grid = Arc::new(build_grid(radius, nr, nphi).unwrap());
    let h = hitchin_lab::bundle::hx_field(&spec, &grid);
    (grid.clone(), MetricField { grid, h })
}

#[test]
fn residual_at_reference_metric_refines_second_order() {
    let spec = build_bundle(2).unwrap();
    let q = HiggsTuple::zero(2);
    let mut sups = Vec::new();
    for &(nr, nphi) in &[(24usize, 48usize), (48, 96), (96, 192)] {
        let (_, field) = hx_metric_field(2, 0.5, nr, nphi);
        let (_, sup) = hitchin_residual(&spec, &q, &field).unwrap();
        sups.push(sup);
    }
    let o1 = (sups[0] / sups[1]).log2();
    let o2 = (sups[1] / sups[2]).log2();
    assert!(o1 >= 1.8 && o2 >= 1.8, "orders {o1:.2} {o2:.2} (sups {sups:?})");
}

#[test]
fn residual_is_hermitian_in_orthonormal_frame() {
    let spec = build_bundle(3).unwrap();
    let mut q = HiggsTuple::zero(3);
    q.coefficients[2] = vec![cr(0.02)];
    let (_, field) = hx_metric_field(3, 0.6, 16, 24);
    let (rhat, _) = hitchin_residual(&spec, &q, &field).unwrap();
    for m in &rhat {
        assert!((m - m.adjoint()).norm() <= 1e-12 * m.norm().max(1.0));
    }
}

#[test]
fn flat_rank_one_case_has_zero_residual() {
    // n = 1: the unit metric is harmonic for every differential
    let spec = build_bundle(1).unwrap();
    let mut q = HiggsTuple::zero(1);
    q.coefficients[0] = vec![cr(0.3), C64::new(0.0, 0.7)];
    let grid = Arc::new(build_grid(0.6, 16, 24).unwrap());
    let h = vec![CMatrix::identity(2, 2); grid.node_count()];
    let field = MetricField { grid, h };
    let (_, sup) = hitchin_residual(&spec, &q, &field).unwrap();
    assert!(sup <= 1e-12, "sup residual {sup:.3e}");
}

#[test]
fn directional_derivative_matches_finite_differences() {
    let spec = build_bundle(2).unwrap();
    let mut q = HiggsTuple::zero(2);
    q.coefficients[1] = vec![cr(0.05)];
    let grid = Arc::new(build_grid(0.5, 12, 16).unwrap());
    let a = theta_field(&spec, &q, &grid);
    let adag: Vec<CMatrix> = a.iter().map(|m| m.adjoint()).collect();

    // a smooth non-reference Hermitian field to linearize around
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let base: Vec<CMatrix> = (0..grid.node_count())
        .map(|p| {
            let z = grid.z(p);
            let bump = 0.2 * (1.0 - (z.norm_sqr() / 0.25)).max(0.0);
            let m = random_hermitian(4, 1.0, &mut rng).scale(0.0)
                + hermitize(&CMatrix::from_fn(4, 4, |i, j| {
                    C64::new(
                        bump * ((i + j) as f64 * 0.1 + z.re * 0.3),
                        bump * (i as f64 - j as f64) * 0.05 * z.im,
                    )
                }));
            herm_exp(&m) * hx_matrix(&spec, grid.g(p)).scale(1.0)
        })
        .map(|m| hermitize(&m))
        .collect();

    // smooth Hermitian direction, zero on the boundary
    let delta: Vec<CMatrix> = (0..grid.node_count())
        .map(|p| {
            if grid.is_boundary(p) {
                CMatrix::zeros(4, 4)
            } else {
                let z = grid.z(p);
                hermitize(&CMatrix::from_fn(4, 4, |i, j| {
                    C64::new(
                        0.01 * (z.re + (i * j) as f64 * 0.07),
                        0.01 * z.im * (i as f64 - j as f64),
                    )
                }))
            }
        })
        .collect();

    let cache = build_cache(&grid, &a, &adag, &base).unwrap();
    let analytic = directional_derivative(&grid, &cache, &delta);

    let mut worst = 0.0_f64;
    let mut scale = 1e-300_f64;
    for &eps in &[1e-5] {
        let plus: Vec<CMatrix> =
            base.iter().zip(&delta).map(|(h, d)| h + d.clone().scale(eps)).collect();
        let minus: Vec<CMatrix> =
            base.iter().zip(&delta).map(|(h, d)| h - d.clone().scale(eps)).collect();
        let gp = build_cache(&grid, &a, &adag, &plus).unwrap().g_field;
        let gm = build_cache(&grid, &a, &adag, &minus).unwrap().g_field;
        for p in grid.interior_nodes() {
            let fd = (&gp[p] - &gm[p]).scale(0.5 / eps);
            worst = worst.max(fro(&(&fd - &analytic[p])));
            scale = scale.max(fro(&analytic[p]));
        }
    }
    assert!(worst / scale <= 1e-6, "relative Jacobian defect {:.3e}", worst / scale);
}

#[test]
fn dirichlet_recovers_reference_solution() {
    let n = 2;
    let spec = build_bundle(n).unwrap();
    let q = HiggsTuple::zero(n);
    let grid = Arc::new(build_grid(0.5, 24, 32).unwrap());
    let boundary = hx_boundary(&spec, &grid);
    let config = SolverConfig::default();
    let (field, report) = solve_dirichlet(&spec, &q, &grid, &boundary, &config).unwrap();
    assert!(report.sup_residual <= 1e-8);
    assert!(report.iterations <= 25);

    // compare against the continuum solution in log-spectral distance
    let mut worst = 0.0_f64;
    for p in grid.interior_nodes() {
        let hx = hx_matrix(&spec, grid.g(p));
        let (vals, _) =
            hitchin_lab::linalg::generalized_herm_eigen(&hx, &field.h[p]).unwrap();
        for v in vals {
            worst = worst.max(v.ln().abs());
        }
    }
    assert!(worst <= 1e-3, "recovery error {worst:.3e}");
    // block-diagonality is an exact discrete symmetry; compatibility is only
    // a continuum one, so its drift scales with the discretization error
    assert!(report.block_offdiagonal <= 1e-10);
    let h2 = grid.h_max() * grid.h_max();
    assert!(
        report.compatibility_drift <= 10.0 * h2,
        "drift {:.3e} vs 10Δ² = {:.3e}",
        report.compatibility_drift,
        10.0 * h2
    );
}

#[test]
fn compatibility_drift_refines_second_order() {
    let spec = build_bundle(2).unwrap();
    let q = HiggsTuple::zero(2);
    let config = SolverConfig::default();
    let mut drifts = Vec::new();
    for &(nr, nphi) in &[(12usize, 16usize), (24, 32)] {
        let grid = Arc::new(build_grid(0.5, nr, nphi).unwrap());
        let boundary = hx_boundary(&spec, &grid);
        let (_, report) = solve_dirichlet(&spec, &q, &grid, &boundary, &config).unwrap();
        drifts.push(report.compatibility_drift);
    }
    let order = (drifts[0] / drifts[1]).log2();
    assert!(order >= 1.6, "drift order {order:.2} (drifts {drifts:?})");
}

#[test]
fn compat_projection_restores_exact_compatibility() {
    let spec = build_bundle(2).unwrap();
    let q = HiggsTuple::zero(2);
    let grid = Arc::new(build_grid(0.5, 12, 16).unwrap());
    let boundary = hx_boundary(&spec, &grid);
    let config = SolverConfig { compat_projection_every: Some(1), ..SolverConfig::default() };
    let (_, report) = solve_dirichlet(&spec, &q, &grid, &boundary, &config).unwrap();
    assert!(report.compatibility_drift <= 1e-10);
}

#[test]
fn newton_and_heat_flow_agree() {
    let n = 2;
    let spec = build_bundle(n).unwrap();
    let mut q = HiggsTuple::zero(n);
    q.coefficients[1] = vec![cr(0.05)];
    let grid = Arc::new(build_grid(0.5, 16, 24).unwrap());
    let boundary = hx_boundary(&spec, &grid);
    let newton_cfg = SolverConfig::default();
    let flow_cfg = SolverConfig { method: Method::HeatFlow, max_iterations: 400, ..SolverConfig::default() };
    let (hn, rn) = solve_dirichlet(&spec, &q, &grid, &boundary, &newton_cfg).unwrap();
    let (hf, rf) = solve_dirichlet(&spec, &q, &grid, &boundary, &flow_cfg).unwrap();
    assert!(rn.sup_residual <= 1e-8 && rf.sup_residual <= 1e-8);
    let mut dist = 0.0_f64;
    for p in grid.interior_nodes() {
        let (vals, _) = hitchin_lab::linalg::generalized_herm_eigen(&hn.h[p], &hf.h[p]).unwrap();
        for v in vals {
            dist = dist.max(v.ln().abs());
        }
    }
    assert!(dist <= 1e-7, "methods differ by {dist:.3e}");
}

#[test]
fn pair_diagnostics_identity_case() {
    let (_, f1) = hx_metric_field(2, 0.5, 16, 24);
    let (s, rep) = metric_pair_diagnostics(&f1, &f1).unwrap();
    for m in &s {
        assert!((m - CMatrix::identity(4, 4)).norm() < 1e-12);
    }
    assert!((rep.max_interior_trace - 4.0).abs() < 1e-12);
    assert!(rep.sup_subharmonic_defect.abs() < 1e-10);
}

#[test]
fn exhaustion_rejects_unsorted_radii() {
    let spec = build_bundle(2).unwrap();
    let q = HiggsTuple::zero(2);
    let cfg = SolverConfig::default();
    let err = exhaustion_sequence(&spec, &q, &[0.7, 0.5], 0.3, 16, 24, &cfg, hitchin_lab::solver::ExhaustionBaseline::Analytic);
    assert!(err.is_err());
}

#[test]
fn perturbed_metric_linearization_is_symmetric_sanity() {
    // the metric-lowered residual must stay Hermitian along Newton iterates
    let spec = build_bundle(2).unwrap();
    let q = HiggsTuple::zero(2);
    let grid = Arc::new(build_grid(0.5, 12, 16).unwrap());
    let a = theta_field(&spec, &q, &grid);
    let adag: Vec<CMatrix> = a.iter().map(|m| m.adjoint()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h: Vec<CMatrix> = (0..grid.node_count())
        .map(|p| {
            let base = hx_matrix(&spec, grid.g(p));
            let m = project_to_compatible_tangent(
                &random_hermitian(4, 0.05 * rng.random::<f64>(), &mut rng),
                &spec.c_weight,
            );
            let l = hitchin_lab::linalg::herm_sqrt(&base);
            hermitize(&(&l * herm_exp(&m) * &l))
        })
        .collect();
    let cache = build_cache(&grid, &a, &adag, &h).unwrap();
    for p in grid.interior_nodes() {
        let g = &cache.g_field[p];
        assert!((g - g.adjoint()).norm() <= 1e-12 * g.norm().max(1.0), "node {p}");
    }
    let (_, sup) = orthonormal_residual(&grid, &h, &cache.g_field).unwrap();
    assert!(sup.is_finite());
}
