//! Browser bindings for the harmonic-metric laboratory: a reference-metric
//! explorer, a small interactive Dirichlet solve, and the algebra identity
//! suite, each returning JSON for the static page in `www/` to render.
//!
//! Build for the web with
//! `cargo build -p hitchin-lab-wasm --target wasm32-unknown-unknown --release`
//! followed by `wasm-bindgen --target web` on the produced cdylib (or
//! `wasm-pack build crates/wasm-demo --target web`).

use std::sync::Arc;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use hitchin_lab::algebra::{
    check_triangular_identities, det_of, filtration_dets, gram_schmidt_transition,
    real_structure, sample_compatible_metric, PairingMatrix,
};
use hitchin_lab::bundle::{build_bundle, higgs_norm_squared, hx_field, theta_matrices, HiggsTuple};
use hitchin_lab::diagnostics::{domination_report, energy_report, vk_cooperative_check};
use hitchin_lab::domain::build_grid;
use hitchin_lab::linalg::C64;
use hitchin_lab::solver::{hx_boundary, solve_dirichlet, MetricField, SolverConfig};

fn grid_json(grid: &hitchin_lab::domain::DiskGrid) -> Value {
    json!({
        "radius": grid.radius,
        "nr": grid.nr,
        "nphi": grid.nphi,
        "rings": grid.rings,
    })
}

fn err_json(e: impl std::fmt::Display) -> String {
    json!({"error": e.to_string()}).to_string()
}

/// The diagonal reference metric on a grid: conformal factor, per-slot
/// log metric coefficients, and the constant Higgs-norm field it produces.
#[wasm_bindgen]
pub fn reference_metric_json(n: usize, radius: f64, nr: usize, nphi: usize) -> String {
    let inner = || -> Result<String, hitchin_lab::Error> {
        let spec = build_bundle(n)?;
        let grid = Arc::new(build_grid(radius, nr, nphi)?);
        let field = hx_field(&spec, &grid);
        let q = HiggsTuple::zero(n);
        let g: Vec<f64> = (0..grid.node_count()).map(|p| grid.g(p)).collect();
        let log_top_slot: Vec<f64> = field.iter().map(|h| h[(0, 0)].re.ln()).collect();
        let higgs_norm: Vec<f64> = (0..grid.node_count())
            .map(|p| {
                let a = theta_matrices(&spec, &q, grid.z(p)).1;
                higgs_norm_squared(&a, &field[p], grid.g(p))
            })
            .collect();
        let expected = (n * (n - 1) * (2 * n - 1)) as f64 / 3.0;
        Ok(json!({
            "grid": grid_json(&grid),
            "conformal_factor": g,
            "log_top_slot": log_top_slot,
            "higgs_norm_sq": higgs_norm,
            "higgs_norm_expected": expected,
            "hx_constants": hitchin_lab::bundle::hx_constants(n),
        })
        .to_string())
    };
    inner().unwrap_or_else(err_json)
}

/// Dirichlet solve with a single top differential q_n = c (constant in z):
/// returns the solver trace and the domination/energy/v_k fields against
/// the same-grid zero-differential baseline.
#[wasm_bindgen]
pub fn solve_disk_json(
    n: usize,
    c_re: f64,
    c_im: f64,
    radius: f64,
    nr: usize,
    nphi: usize,
    tol: f64,
) -> String {
    let inner = || -> Result<String, hitchin_lab::Error> {
        let spec = build_bundle(n)?;
        let grid = Arc::new(build_grid(radius, nr, nphi)?);
        let boundary = hx_boundary(&spec, &grid);
        let config = SolverConfig { residual_tol: tol, ..SolverConfig::default() };
        let q = HiggsTuple::single(n, n, vec![C64::new(c_re, c_im)])?;
        let (solved, report) = solve_dirichlet(&spec, &q, &grid, &boundary, &config)?;
        let baseline = if q.is_zero() {
            solved.clone()
        } else {
            solve_dirichlet(&spec, &HiggsTuple::zero(n), &grid, &boundary, &config)?.0
        };
        let hx = MetricField { grid: Arc::clone(&grid), h: hx_field(&spec, &grid) };
        let dom = domination_report(&solved, &baseline)?;
        let en = energy_report(&spec, &q, &solved, &hx)?;
        let vk = vk_cooperative_check(&spec, &solved, &baseline)?;
        Ok(json!({
            "grid": grid_json(&grid),
            "solver": {
                "sup_residual": report.sup_residual,
                "iterations": report.iterations,
                "trace": report.iteration_trace,
                "compatibility_drift": report.compatibility_drift,
            },
            "domination": {
                "worst": dom.worst,
                "strictest": dom.max_margin,
                "field": dom.margin_field,
            },
            "energy": {
                "bound": en.bound,
                "field": en.energy,
            },
            "v_fields": vk.v_fields,
        })
        .to_string())
    };
    inner().unwrap_or_else(err_json)
}

/// Seeded identity suite on random compatible metrics: worst violations.
#[wasm_bindgen]
pub fn algebra_suite_json(n: usize, samples: usize, seed: u64) -> String {
    let inner = || -> Result<String, hitchin_lab::Error> {
        let cw = PairingMatrix::standard_weight(n);
        let mut worst_compat = 0.0_f64;
        let mut worst_det = 0.0_f64;
        let mut worst_tri = 0.0_f64;
        let mut worst_sym = 0.0_f64;
        let mut worst_kappa = 0.0_f64;
        for s in 0..samples as u64 {
            let m = sample_compatible_metric(2 * n, &cw, seed.wrapping_add(s))?;
            worst_compat = worst_compat.max(m.residual);
            worst_det = worst_det.max((det_of(&m.h) - 1.0).abs());
            let t = gram_schmidt_transition(&m.h)?;
            worst_tri = worst_tri.max(check_triangular_identities(&t, &cw)?.max_violation());
            let dets = filtration_dets(&m.h)?;
            for k in 1..2 * n {
                worst_sym = worst_sym.max((dets[k] - dets[2 * n - k]).abs() / dets[k].abs());
            }
            worst_kappa = worst_kappa.max(real_structure(&m)?.involution_defect());
        }
        Ok(json!({
            "n": n,
            "samples": samples,
            "seed": seed,
            "compatibility_residual": worst_compat,
            "determinant_defect": worst_det,
            "triangular_identities": worst_tri,
            "filtration_det_symmetry": worst_sym,
            "kappa_involution": worst_kappa,
            "pass": worst_compat <= 1e-10
                && worst_det <= 1e-10
                && worst_tri <= 1e-10
                && worst_sym <= 1e-10
                && worst_kappa <= 1e-10,
        })
        .to_string())
    };
    inner().unwrap_or_else(err_json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_metric_payload_is_well_formed() {
        let s = reference_metric_json(2, 0.6, 12, 16);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v.get("error").is_none(), "{s}");
        assert_eq!(v["grid"]["nr"], 12);
        let expected = v["higgs_norm_expected"].as_f64().unwrap();
        assert!((expected - 2.0).abs() < 1e-14);
        for x in v["higgs_norm_sq"].as_array().unwrap() {
            assert!((x.as_f64().unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_payload_contains_fields() {
        let s = solve_disk_json(2, 0.05, 0.0, 0.5, 12, 16, 1e-8);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v.get("error").is_none(), "{s}");
        assert!(v["solver"]["sup_residual"].as_f64().unwrap() <= 1e-8);
        assert!(v["domination"]["worst"].as_f64().unwrap() >= -1e-6);
        assert_eq!(v["energy"]["field"].as_array().unwrap().len(), 12 * 16);
    }

    #[test]
    fn algebra_payload_passes() {
        let s = algebra_suite_json(3, 25, 1);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["pass"], true, "{s}");
    }

    #[test]
    fn bad_parameters_become_error_payloads() {
        let s = reference_metric_json(2, 1.5, 12, 16);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v.get("error").is_some());
    }
}
