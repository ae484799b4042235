//! Experiment runner: algebra identity suites, bundle construction dumps,
//! Dirichlet solves with diagnostics, exhaustion studies, and re-diagnosis
//! of stored runs.
//!
//! Every run writes `config.json` (the resolved configuration), a
//! `report.json` with one entry per assertion, per-node CSV fields and
//! optional SVG heatmaps into the output directory. The process exits 0
//! exactly when every enabled assertion passes. Identical configurations
//! (and seeds) reproduce byte-identical reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use hitchin_lab::algebra::{
    check_triangular_identities, det_of, eigenspace_exchange_angle, endomorphism_norm,
    gram_schmidt_transition, quasi_cyclic_stability_margin, quasi_cyclic_volume,
    random_hermitian, real_structure, sample_compatible_metric, stability_epsilon0, vector_norm,
    PairingMatrix,
};
use hitchin_lab::bundle::{
    build_bundle, hx_field, sample_so_compatible, skew_symmetry_residual, theta_matrices,
    BundleSpec, HiggsTuple,
};
use hitchin_lab::diagnostics::{
    domination_report, energy_report, structural_identities, vk_cooperative_check,
};
use hitchin_lab::domain::{build_grid, fields_to_csv};
use hitchin_lab::error::Error;
use hitchin_lab::linalg::{cr, CMatrix, CVector, C64};
use hitchin_lab::output::{
    heatmap_svg, metric_field_from_csv, metric_field_to_csv, write_json, write_string,
};
use hitchin_lab::solver::{
    exhaustion_sequence, hx_boundary, project_field, solve_dirichlet, ExhaustionBaseline, Method,
    MetricField, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "hitchin-lab",
    version,
    about = "Numerical laboratory for Hitchin-section harmonic metrics on geodesic disks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the finite-dimensional identity suites on seeded random metrics
    VerifyAlgebra(VerifyArgs),
    /// Construct the bundle data and dump it as JSON
    BuildBundle(BundleArgs),
    /// Solve the Dirichlet problem and run the full diagnostics
    Solve(SolveArgs),
    /// Run an exhaustion study over an increasing family of disks
    Exhaust(ExhaustArgs),
    /// Recompute diagnostics from the stored fields of a previous solve run
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs/verify-algebra")]
    out: PathBuf,
    /// JSON config file; its keys override the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BundleArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value = "runs/build-bundle")]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// coefficients of q_j as comma-separated complex entries "re" or
    /// "re:im", constant term first
    #[arg(long = "q1")]
    q1: Option<String>,
    #[arg(long = "q2")]
    q2: Option<String>,
    #[arg(long = "q3")]
    q3: Option<String>,
    #[arg(long = "q4")]
    q4: Option<String>,
    #[arg(long = "q5")]
    q5: Option<String>,
    #[arg(long = "q6")]
    q6: Option<String>,
    #[arg(long, default_value_t = 0.7)]
    radius: f64,
    /// grid as NRxNPHI
    #[arg(long, default_value = "32x64")]
    grid: String,
    #[arg(long, value_enum, default_value = "newton")]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 25)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs/solve")]
    out: PathBuf,
    /// skip the SVG heatmaps
    #[arg(long)]
    no_plots: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ExhaustArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long = "q1")]
    q1: Option<String>,
    #[arg(long = "q2")]
    q2: Option<String>,
    #[arg(long = "q3")]
    q3: Option<String>,
    #[arg(long = "q4")]
    q4: Option<String>,
    /// strictly increasing comma-separated radii
    #[arg(long, default_value = "0.5,0.7,0.85,0.92")]
    radii: String,
    #[arg(long, default_value_t = 0.3)]
    probe: f64,
    #[arg(long, default_value = "48x96")]
    grid: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value = "runs/exhaust")]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// a previous solve run directory containing config.json and fields/
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Newton,
    HeatFlow,
}

/// One verdict line of a report.
struct Assertion {
    id: &'static str,
    description: String,
    value: f64,
    threshold: f64,
    /// true: pass iff value <= threshold; false: pass iff value >= threshold
    upper: bool,
}

impl Assertion {
    fn upper(id: &'static str, description: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { id, description: description.into(), value, threshold, upper: true }
    }
    fn lower(id: &'static str, description: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { id, description: description.into(), value, threshold, upper: false }
    }
    fn pass(&self) -> bool {
        if self.upper { self.value <= self.threshold } else { self.value >= self.threshold }
    }
    fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "description": self.description,
            "value": self.value,
            "threshold": self.threshold,
            "comparison": if self.upper { "<=" } else { ">=" },
            "pass": self.pass(),
        })
    }
}

fn finish(
    out: &Path,
    config: Value,
    mut report: Value,
    assertions: &[Assertion],
) -> Result<bool, Error> {
    let all_pass = assertions.iter().all(Assertion::pass);
    report["assertions"] = Value::Array(assertions.iter().map(Assertion::to_json).collect());
    report["pass"] = Value::Bool(all_pass);
    write_json(&out.join("config.json"), &config)?;
    write_json(&out.join("report.json"), &report)?;
    for a in assertions {
        println!(
            "[{}] {}: {} = {:.6e} ({} {:.6e})",
            if a.pass() { "pass" } else { "FAIL" },
            a.id,
            a.description,
            a.value,
            if a.upper { "<=" } else { ">=" },
            a.threshold
        );
    }
    println!("report: {}", out.join("report.json").display());
    Ok(all_pass)
}

fn parse_complex_list(s: &str) -> Result<Vec<C64>, Error> {
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if tok.is_empty() {
                return Err(Error::InvalidConfig {
                    violations: vec![format!("empty coefficient in '{s}'")],
                });
            }
            let (re, im) = match tok.split_once(':') {
                Some((a, b)) => (a, b),
                None => (tok, "0"),
            };
            let re: f64 = re.trim().parse().map_err(|_| Error::InvalidConfig {
                violations: vec![format!("bad coefficient '{tok}'")],
            })?;
            let im: f64 = im.trim().parse().map_err(|_| Error::InvalidConfig {
                violations: vec![format!("bad coefficient '{tok}'")],
            })?;
            Ok(C64::new(re, im))
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<(usize, usize), Error> {
    let bad =
        || Error::InvalidConfig { violations: vec![format!("grid must be NRxNPHI, got '{s}'")] };
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn higgs_from_args(n: usize, qs: [&Option<String>; 6]) -> Result<HiggsTuple, Error> {
    let mut tuple = HiggsTuple::zero(n);
    let mut violations = Vec::new();
    for (idx, q) in qs.iter().enumerate() {
        if let Some(text) = q {
            let j = idx + 1;
            if j > n {
                violations.push(format!("--q{j} given but n = {n}"));
                continue;
            }
            match parse_complex_list(text) {
                Ok(c) => tuple.coefficients[j - 1] = c,
                Err(Error::InvalidConfig { violations: mut v }) => violations.append(&mut v),
                Err(e) => return Err(e),
            }
        }
    }
    if violations.is_empty() {
        Ok(tuple)
    } else {
        Err(Error::InvalidConfig { violations })
    }
}

/// Overlay a JSON config file (when given) onto flag-derived JSON: file
/// entries win over flags.
fn overlay_config(base: &mut Value, path: &Option<PathBuf>) -> Result<(), Error> {
    let Some(path) = path else { return Ok(()) };
    let text = std::fs::read_to_string(path)?;
    let file: Value = serde_json::from_str(&text)?;
    let Value::Object(file_map) = file else {
        return Err(Error::InvalidConfig {
            violations: vec!["config file must be a JSON object".into()],
        });
    };
    let Value::Object(base_map) = base else { unreachable!() };
    for (k, v) in file_map {
        base_map.insert(k, v);
    }
    Ok(())
}

fn run_verify_algebra(args: &VerifyArgs) -> Result<bool, Error> {
    let mut config = json!({
        "command": "verify-algebra",
        "n": args.n,
        "samples": args.samples,
        "seed": args.seed,
    });
    overlay_config(&mut config, &args.config)?;
    let n = config["n"].as_u64().unwrap_or(args.n as u64) as usize;
    let samples = config["samples"].as_u64().unwrap_or(args.samples as u64) as usize;
    let seed = config["seed"].as_u64().unwrap_or(args.seed);
    if n == 0 || n > 6 {
        return Err(Error::InvalidConfig { violations: vec!["n must lie in 1..=6".into()] });
    }

    let spec = build_bundle(n)?;
    let cw = PairingMatrix::standard_weight(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut max_compat = 0.0_f64;
    let mut max_det = 0.0_f64;
    let mut max_tri = 0.0_f64;
    let mut max_unitary = 0.0_f64;
    let mut max_det_sym = 0.0_f64;
    let mut max_slot_rec = 0.0_f64;
    let mut max_kappa = 0.0_f64;
    let mut max_exchange = 0.0_f64;
    let mut max_structural = 0.0_f64;
    let mut max_skew = 0.0_f64;

    for s in 0..samples as u64 {
        let m = sample_compatible_metric(2 * n, &cw, seed.wrapping_add(s))?;
        max_compat = max_compat.max(m.residual);
        max_det = max_det.max((det_of(&m.h) - 1.0).abs());
        let t = gram_schmidt_transition(&m.h)?;
        let tri = check_triangular_identities(&t, &cw)?;
        max_tri = max_tri.max(tri.max_violation());
        max_unitary = max_unitary.max(tri.unitarity_defect);
        let dets = hitchin_lab::algebra::filtration_dets(&m.h)?;
        for k in 1..2 * n {
            max_det_sym = max_det_sym.max((dets[k] - dets[2 * n - k]).abs() / dets[k].abs());
        }
        let slots = hitchin_lab::algebra::slot_metrics(&m.h)?;
        for k in 1..=2 * n {
            max_slot_rec = max_slot_rec.max((slots[k - 1] * slots[2 * n - k] - 1.0).abs());
        }
        let kap = real_structure(&m)?;
        max_kappa = max_kappa.max(kap.involution_defect());

        // SO-structure suite on block-diagonal samples
        let hso = sample_so_compatible(&spec, seed.wrapping_add(s), 0.6)?;
        let z = num_complex::Complex64::new(
            0.8 * (rng.random::<f64>() - 0.5),
            0.8 * (rng.random::<f64>() - 0.5),
        );
        let mut q = HiggsTuple::zero(n);
        for j in 0..n {
            q.coefficients[j] = vec![
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            ];
        }
        let (ab, aw) = theta_matrices(&spec, &q, z);
        max_skew = max_skew.max(skew_symmetry_residual(&spec, &ab));
        let st = hitchin_lab::diagnostics::structural_identities_at(&spec, &hso, &aw)?;
        max_structural = max_structural.max(st.max_violation());
    }

    // eigenspace exchange on metric pairs
    let pair_count = (samples / 4).clamp(4, 100) as u64;
    for s in 0..pair_count {
        let h1 = sample_compatible_metric(2 * n, &cw, seed.wrapping_add(1000 + s))?;
        let h2 = sample_compatible_metric(2 * n, &cw, seed.wrapping_add(2000 + s))?;
        max_exchange = max_exchange.max(eigenspace_exchange_angle(&h1, &h2)?);
    }

    // wedge-volume oracle agreement and the perturbation lemmas
    let mut max_vol_rel = 0.0_f64;
    let mut min_stab_slack = f64::INFINITY;
    let mut min_split_slack = f64::INFINITY;
    for s in 0..100u64 {
        let m = 2 + (s as usize % 5);
        let f = CMatrix::from_fn(m, m, |i, j| {
            if i == j + 1 {
                cr(1.0)
            } else {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.4
            }
        });
        let e = CVector::from_fn(m, |i, _| if i == 0 { cr(1.0) } else { cr(0.0) });
        let g = random_hermitian(m, 0.4, &mut rng);
        let h = hitchin_lab::linalg::herm_exp(&g);
        let vol = quasi_cyclic_volume(&f, &e, &h)?;
        // independent Gram determinant
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
        if oracle > 1e-12 {
            max_vol_rel = max_vol_rel.max((vol - oracle).abs() / oracle);
        }

        let en = vector_norm(&e, &h);
        let rho = 0.8 * vol / en.powi(m as i32 - 1);
        if rho > 0.0 {
            let a = endomorphism_norm(&f, &h)?;
            let eps0 = stability_epsilon0(m, a, rho);
            let dir = CMatrix::from_fn(m, m, |_, _| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let dn = endomorphism_norm(&dir, &h)?;
            let f1 = &f + dir.scale(0.5 * eps0 / dn);
            let rep = quasi_cyclic_stability_margin(&f, &f1, &e, &h, rho)?;
            if let Some(slack) = rep.slack {
                min_stab_slack = min_stab_slack.min(slack);
            }
        }

        // eigenvalue-split bound on compatible pairs
        let nn = 1 + (s as usize % 4);
        let cwn = PairingMatrix::standard_weight(nn);
        let h1 = sample_compatible_metric(2 * nn, &cwn, seed.wrapping_add(3000 + s))?;
        let h2 = sample_compatible_metric(2 * nn, &cwn, seed.wrapping_add(4000 + s))?;
        let sm = hitchin_lab::linalg::inv(&h1.h).unwrap() * &h2.h;
        let ff = random_hermitian(2 * nn, 1.0, &mut rng);
        let eig = hitchin_lab::linalg::generalized_herm_eigen(&h1.h, &(&h1.h * &sm)).unwrap().0;
        let max_s = eig.iter().cloned().fold(0.0_f64, f64::max);
        if max_s > 1.0 + 1e-7 {
            let nu = (max_s - 1.0).min(1.0);
            let rep = hitchin_lab::algebra::nu_split_bound(&ff, &sm, &h1.h, nu)?;
            min_split_slack = min_split_slack.min(rep.slack());
        }
    }

    let assertions = vec![
        Assertion::upper(
            "compatibility_residual",
            "sampled metrics satisfy the pairing compatibility",
            max_compat,
            1e-10,
        ),
        Assertion::upper("unit_determinant", "compatible metrics have determinant 1", max_det, 1e-10),
        Assertion::upper(
            "triangular_identities",
            "Gram-Schmidt transition modulus identities",
            max_tri,
            1e-10,
        ),
        Assertion::upper(
            "transition_unitarity",
            "Pt*C*P is unitary for compatible metrics",
            max_unitary,
            1e-10,
        ),
        Assertion::upper(
            "filtration_det_symmetry",
            "det(h|F_k) = det(h|F_2n-k)",
            max_det_sym,
            1e-10,
        ),
        Assertion::upper("slot_reciprocity", "h_k * h_{2n-k+1} = 1", max_slot_rec, 1e-10),
        Assertion::upper(
            "real_structure_involution",
            "kappa squares to the identity",
            max_kappa,
            1e-10,
        ),
        Assertion::upper("eigenspace_exchange", "kappa maps V_a into V_{1/a}", max_exchange, 1e-8),
        Assertion::upper(
            "so_structural_identities",
            "block-compatible identities incl. vanishing off-pattern Higgs components",
            max_structural,
            1e-10,
        ),
        Assertion::upper(
            "higgs_skew_symmetry",
            "theta is skew-symmetric for diag(Q_V, -Q_W)",
            max_skew,
            1e-14,
        ),
        Assertion::upper(
            "wedge_volume_oracle",
            "wedge volume matches the Gram-determinant oracle",
            max_vol_rel,
            1e-12,
        ),
        Assertion::lower(
            "wedge_stability_slack",
            "wedge volume stays above rho/2 under admissible perturbations",
            min_stab_slack,
            0.0,
        ),
        Assertion::lower(
            "eigenvalue_split_slack",
            "off-split blocks bounded by the commutator estimate",
            min_split_slack,
            0.0,
        ),
    ];
    let report = json!({
        "command": "verify-algebra",
        "n": n,
        "samples": samples,
        "seed": seed,
    });
    finish(&args.out, config, report, &assertions)
}

fn run_build_bundle(args: &BundleArgs) -> Result<bool, Error> {
    let mut config = json!({"command": "build-bundle", "n": args.n});
    overlay_config(&mut config, &args.config)?;
    let n = config["n"].as_u64().unwrap_or(args.n as u64) as usize;
    let spec = build_bundle(n)?;
    write_json(&args.out.join("bundle.json"), &spec.to_json())?;
    let a = hitchin_lab::bundle::hx_constants(n);
    let assertions = vec![
        Assertion::upper(
            "pairing_involution",
            "the weight pairing squares to the identity",
            (&spec.c_weight.entries * &spec.c_weight.entries - CMatrix::identity(2 * n, 2 * n))
                .norm(),
            0.0,
        ),
        Assertion::upper(
            "reference_metric_normalization",
            "the middle reference constant a_n equals 1",
            (a[n - 1] - 1.0).abs(),
            1e-12,
        ),
    ];
    let report = json!({
        "command": "build-bundle",
        "n": n,
        "hx_constants": a,
        "bundle": spec.to_json(),
    });
    finish(&args.out, config, report, &assertions)
}

/// The diagnostics shared by `solve` and `diagnose`: domination, energy,
/// cooperative system and structural identities, measured against a
/// same-grid baseline that cancels the shared discretization bias.
fn diagnostics_assertions(
    spec: &BundleSpec,
    q: &HiggsTuple,
    field: &MetricField,
    baseline: &MetricField,
    tol: f64,
    assertions: &mut Vec<Assertion>,
    report: &mut Value,
) -> Result<(), Error> {
    let grid = &field.grid;
    let hx = MetricField { grid: Arc::clone(grid), h: hx_field(spec, grid) };
    let h2 = grid.h_max() * grid.h_max();

    let dom = domination_report(field, baseline)?;
    let dom_analytic = domination_report(field, &hx)?;
    let en = energy_report(spec, q, field, &hx)?;
    let en_base = energy_report(spec, &HiggsTuple::zero(spec.n), baseline, &hx)?;
    let en_proj = energy_report(spec, q, &project_field(spec, field), &hx)?;
    let vk = vk_cooperative_check(spec, field, baseline)?;
    let st = structural_identities(spec, q, field)?;
    let drift = field.compatibility_drift(spec);

    let corrected_energy_margin = grid
        .interior_nodes()
        .map(|p| en.energy[p] - en_base.energy[p])
        .fold(f64::INFINITY, f64::min);

    let margin_tol = (100.0 * tol).max(1e-8);
    assertions.push(Assertion::lower(
        "weak_domination",
        "filtration determinants of h stay below the reference (baseline-corrected)",
        dom.worst,
        -margin_tol,
    ));
    assertions.push(Assertion::lower(
        "energy_lower_bound",
        "energy density dominates the constant bound (baseline-corrected)",
        corrected_energy_margin,
        -(100.0 * tol).max(1e-6),
    ));
    assertions.push(Assertion::lower(
        "energy_strengthening",
        "exponential strengthening on the compatibility-projected field",
        en_proj.min_strengthening_margin,
        -1e-8,
    ));
    if spec.n >= 2 {
        let sup_v = vk.sup_interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let delta = 10.0 * h2 * vk.logdet_scale;
        assertions.push(Assertion::upper(
            "vk_nonpositive",
            "filtration logs v_k are nonpositive in the interior (baseline-corrected)",
            sup_v,
            margin_tol,
        ));
        let min_ineq =
            vk.min_inequality_residual.iter().cloned().fold(f64::INFINITY, f64::min);
        assertions.push(Assertion::lower(
            "vk_cooperative_inequalities",
            "discrete cooperative differential inequalities for v_k",
            min_ineq,
            -delta,
        ));
        let max_principle = (0..spec.n)
            .map(|k| vk.sup_interior[k] - vk.sup_boundary[k])
            .fold(f64::NEG_INFINITY, f64::max);
        assertions.push(Assertion::upper(
            "vk_maximum_principle",
            "interior sup of v_k bounded by its boundary sup",
            max_principle,
            delta,
        ));
        assertions.push(Assertion::lower(
            "vk_cooperative_coefficients",
            "coupling coefficients are nonnegative and the system is fully coupled",
            if vk.fully_coupled { vk.min_coefficient } else { -1.0 },
            0.0,
        ));
    }
    assertions.push(Assertion::upper(
        "structural_identities",
        "compatible-metric identities hold at the compatibility-drift scale",
        st.max_violation(),
        (100.0 * drift).max(1e-9),
    ));

    report["domination"] = json!({
        "baseline_corrected": {"worst": dom.worst, "strictest": dom.max_margin, "per_k": dom.min_margins},
        "vs_analytic_reference": {"worst": dom_analytic.worst, "strictest": dom_analytic.max_margin},
    });
    report["energy"] = json!({
        "bound": en.bound,
        "raw_min_margin": en.min_margin,
        "baseline_corrected_min_margin": corrected_energy_margin,
        "strengthening_min_margin_projected": en_proj.min_strengthening_margin,
        "min_wn": en.min_wn,
    });
    report["vk"] = json!({
        "sup_interior": vk.sup_interior,
        "sup_boundary": vk.sup_boundary,
        "min_inequality_residual": vk.min_inequality_residual,
        "min_coefficient": vk.min_coefficient,
        "fully_coupled": vk.fully_coupled,
        "delta": 10.0 * h2 * vk.logdet_scale,
    });
    report["structural"] = json!({
        "det_symmetry": st.det_symmetry,
        "slot_reciprocity": st.slot_reciprocity,
        "middle_dets": st.middle_dets,
        "middle_slots": st.middle_slots,
        "gamma": st.gamma,
        "gamma_prime": st.gamma_prime,
        "compatibility_drift": drift,
    });

    // per-node CSV of the diagnostic fields
    let mut names: Vec<String> = vec!["energy".into(), "domination_margin".into()];
    let mut fields: Vec<Vec<C64>> = vec![
        en.energy.iter().map(|&x| C64::new(x, 0.0)).collect(),
        dom.margin_field.iter().map(|&x| C64::new(x, 0.0)).collect(),
    ];
    for (k, v) in vk.v_fields.iter().enumerate() {
        names.push(format!("v_{}", k + 1));
        fields.push(v.iter().map(|&x| C64::new(x, 0.0)).collect());
    }
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let field_refs: Vec<&[C64]> = fields.iter().map(|f| f.as_slice()).collect();
    report["__csv"] = json!(fields_to_csv(grid, &name_refs, &field_refs));
    Ok(())
}

fn run_solve(args: &SolveArgs) -> Result<bool, Error> {
    let mut config = json!({
        "command": "solve",
        "n": args.n,
        "radius": args.radius,
        "grid": args.grid,
        "method": match args.method { MethodArg::Newton => "newton", MethodArg::HeatFlow => "heat_flow" },
        "tol": args.tol,
        "max_iter": args.max_iter,
        "seed": args.seed,
        "higgs": higgs_from_args(args.n, [&args.q1, &args.q2, &args.q3, &args.q4, &args.q5, &args.q6])?.to_json(),
        "plots": !args.no_plots,
    });
    overlay_config(&mut config, &args.config)?;

    let mut violations = Vec::new();
    let n = config["n"].as_u64().unwrap_or(0) as usize;
    if n == 0 || n > 6 {
        violations.push("n must lie in 1..=6".to_string());
    }
    let radius = config["radius"].as_f64().unwrap_or(-1.0);
    if !(radius > 0.0 && radius < 1.0) {
        violations.push("radius must lie in (0,1)".to_string());
    }
    let tol = config["tol"].as_f64().unwrap_or(-1.0);
    if !(tol > 0.0) {
        violations.push("tol must be positive".to_string());
    }
    if !violations.is_empty() {
        return Err(Error::InvalidConfig { violations });
    }
    let (nr, nphi) = parse_grid(config["grid"].as_str().unwrap_or(""))?;
    let q = HiggsTuple::from_json(&config["higgs"])?;
    let spec = build_bundle(n)?;
    let grid = Arc::new(build_grid(radius, nr, nphi)?);
    let method = match config["method"].as_str() {
        Some("heat_flow") => Method::HeatFlow,
        _ => Method::Newton,
    };
    let solver = SolverConfig {
        method,
        residual_tol: tol,
        max_iterations: config["max_iter"].as_u64().unwrap_or(25) as usize,
        ..SolverConfig::default()
    };
    solver.validate()?;

    let boundary = hx_boundary(&spec, &grid);
    let (field, solve_report) = solve_dirichlet(&spec, &q, &grid, &boundary, &solver)?;

    // same-grid zero-differential baseline for bias-corrected diagnostics
    let baseline = if q.is_zero() {
        field.clone()
    } else {
        solve_dirichlet(&spec, &HiggsTuple::zero(spec.n), &grid, &boundary, &solver)?.0
    };

    let mut assertions = vec![
        Assertion::upper(
            "residual_tolerance",
            "sup of the orthonormal-frame residual over interior nodes",
            solve_report.sup_residual,
            solver.residual_tol,
        ),
        Assertion::upper(
            "block_structure",
            "V-W off-diagonal blocks of the converged metric",
            solve_report.block_offdiagonal,
            1e-9,
        ),
        Assertion::lower(
            "positivity",
            "smallest eigenvalue over all metric samples",
            solve_report.positivity_min_eig,
            0.0,
        ),
    ];
    let mut report = json!({
        "command": "solve",
        "solver": serde_json::to_value(&solve_report)?,
        "parameters": {"n": n, "radius": radius, "nr": nr, "nphi": nphi},
    });
    if q.is_zero() {
        let hx = MetricField { grid: Arc::clone(&grid), h: hx_field(&spec, &grid) };
        let mut worst = 0.0_f64;
        for p in grid.interior_nodes() {
            let (vals, _) = hitchin_lab::linalg::generalized_herm_eigen(&hx.h[p], &field.h[p])
                .ok_or(Error::Precondition("reference comparison failed".into()))?;
            for v in vals {
                worst = worst.max(v.ln().abs());
            }
        }
        let h2 = grid.h_max() * grid.h_max();
        assertions.push(Assertion::upper(
            "reference_recovery",
            "log-spectral distance to the diagonal reference metric",
            worst,
            (10.0 * h2).max(1e-3),
        ));
        report["reference_recovery"] = json!(worst);
    } else {
        diagnostics_assertions(&spec, &q, &field, &baseline, tol, &mut assertions, &mut report)?;
    }

    // field dumps
    let out = &args.out;
    write_string(&out.join("fields/metric.csv"), &metric_field_to_csv(&field))?;
    if !q.is_zero() {
        write_string(&out.join("fields/baseline.csv"), &metric_field_to_csv(&baseline))?;
    }
    if let Some(csv) = report.get("__csv").and_then(Value::as_str).map(str::to_string) {
        write_string(&out.join("fields/diagnostics.csv"), &csv)?;
        report.as_object_mut().unwrap().remove("__csv");
    }
    if config["plots"].as_bool().unwrap_or(true) {
        let hx = MetricField { grid: Arc::clone(&grid), h: hx_field(&spec, &grid) };
        let en = energy_report(&spec, &q, &field, &hx)?;
        write_string(
            &out.join("plots/energy.svg"),
            &heatmap_svg(&grid, &en.energy, "energy density"),
        )?;
        if !q.is_zero() {
            let dom = domination_report(&field, &baseline)?;
            write_string(
                &out.join("plots/domination_margin.svg"),
                &heatmap_svg(&grid, &dom.margin_field, "domination margin (baseline-corrected)"),
            )?;
            let vk = vk_cooperative_check(&spec, &field, &baseline)?;
            for (k, v) in vk.v_fields.iter().enumerate() {
                write_string(
                    &out.join(format!("plots/v_{}.svg", k + 1)),
                    &heatmap_svg(&grid, v, &format!("v_{}", k + 1)),
                )?;
            }
        }
    }
    finish(out, config, report, &assertions)
}

fn run_exhaust(args: &ExhaustArgs) -> Result<bool, Error> {
    let mut config = json!({
        "command": "exhaust",
        "n": args.n,
        "radii": args.radii,
        "probe": args.probe,
        "grid": args.grid,
        "tol": args.tol,
        "higgs": higgs_from_args(args.n, [&args.q1, &args.q2, &args.q3, &args.q4, &None, &None])?.to_json(),
    });
    overlay_config(&mut config, &args.config)?;
    let n = config["n"].as_u64().unwrap_or(0) as usize;
    let radii: Vec<f64> = config["radii"]
        .as_str()
        .unwrap_or("")
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::InvalidConfig {
            violations: vec!["radii must be comma-separated floats".into()],
        })?;
    let (nr, nphi) = parse_grid(config["grid"].as_str().unwrap_or(""))?;
    let q = HiggsTuple::from_json(&config["higgs"])?;
    let spec = build_bundle(n)?;
    let solver = SolverConfig {
        residual_tol: config["tol"].as_f64().unwrap_or(1e-8),
        ..SolverConfig::default()
    };
    let probe = config["probe"].as_f64().unwrap_or(args.probe);
    let rep = exhaustion_sequence(
        &spec,
        &q,
        &radii,
        probe,
        nr,
        nphi,
        &solver,
        ExhaustionBaseline::DiscreteQZero,
    )?;

    let nd = rep.differences.len();
    let tail_decrease = if nd >= 2 {
        rep.differences[nd - 2] - rep.differences[nd - 1]
    } else {
        f64::NEG_INFINITY
    };
    let assertions = vec![Assertion::lower(
        "exhaustion_cauchy_tail",
        "probe distances of consecutive solves decrease over the final step",
        tail_decrease,
        0.0,
    )];
    let report = json!({
        "command": "exhaust",
        "result": serde_json::to_value(&rep)?,
    });
    finish(&args.out, config, report, &assertions)
}

fn run_diagnose(args: &DiagnoseArgs) -> Result<bool, Error> {
    let run = &args.run;
    let fields_dir = run.join("fields");
    if !fields_dir.is_dir() {
        return Err(Error::Precondition(format!("missing fields/ in {}", run.display())));
    }
    let config: Value = serde_json::from_str(&std::fs::read_to_string(run.join("config.json"))?)?;
    let n = config["n"].as_u64().unwrap_or(0) as usize;
    let radius = config["radius"].as_f64().unwrap_or(0.0);
    let (nr, nphi) = parse_grid(config["grid"].as_str().unwrap_or(""))?;
    let tol = config["tol"].as_f64().unwrap_or(1e-8);
    let q = HiggsTuple::from_json(&config["higgs"])?;
    let spec = build_bundle(n)?;
    let grid = Arc::new(build_grid(radius, nr, nphi)?);

    let metric_csv = std::fs::read_to_string(fields_dir.join("metric.csv"))?;
    let field = metric_field_from_csv(Arc::clone(&grid), 2 * n, &metric_csv)?;
    let baseline = if q.is_zero() {
        field.clone()
    } else {
        let base_csv = std::fs::read_to_string(fields_dir.join("baseline.csv"))?;
        metric_field_from_csv(Arc::clone(&grid), 2 * n, &base_csv)?
    };

    let mut assertions = Vec::new();
    let mut report = json!({"command": "diagnose", "source_run": run.display().to_string()});
    if !q.is_zero() {
        diagnostics_assertions(&spec, &q, &field, &baseline, tol, &mut assertions, &mut report)?;
    }
    let out = args.out.clone().unwrap_or_else(|| run.join("diagnose"));
    if let Some(csv) = report.get("__csv").and_then(Value::as_str).map(str::to_string) {
        write_string(&out.join("fields/diagnostics.csv"), &csv)?;
        report.as_object_mut().unwrap().remove("__csv");
    }
    finish(&out, config, report, &assertions)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::VerifyAlgebra(a) => run_verify_algebra(a),
        Command::BuildBundle(a) => run_build_bundle(a),
        Command::Solve(a) => run_solve(a),
        Command::Exhaust(a) => run_exhaust(a),
        Command::Diagnose(a) => run_diagnose(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more assertions failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::InvalidConfig { violations } = &e {
                eprintln!("{}", json!({"error": "invalid_config", "violations": violations}));
            }
            ExitCode::from(2)
        }
    }
}
