//! Acceptance suite: one test per shipped criterion, each printing a
//! PASS/FAIL line with its headline numbers. Tolerances are pinned in the
//! assertions, not configurable.

use conformal_lab::calculus::{self, classify_harmonicity, HarmonicityTag};
use conformal_lab::cli;
use conformal_lab::conformal::{
    identity_report, identity_reports, predicted_scalar_transform, rescale_metric,
    ConformalDeformation, IdentityId, IdentityVerdict,
};
use conformal_lab::curvature;
use conformal_lab::expr::parse;
use conformal_lab::geometry::{
    grid, model_zoo, ManifoldModel, ZooModel, ZooParams, HYPERBOLIC_CLIP_FACTOR,
};
use conformal_lab::integrability::{
    grad_l1_report, lp_report, volume_report, ExhaustionSpec, IntegrabilityVerdict,
};
use conformal_lab::theorems::closed_manifold_divergence_check;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;

fn criterion(number: u32, pass: bool, detail: &str) {
    println!(
        "[acceptance {number}] {}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {number} failed: {detail}");
}

fn euclidean(n: usize, hw: f64) -> ManifoldModel {
    model_zoo(
        ZooModel::Euclidean,
        n,
        &ZooParams {
            half_width: Some(hw),
            ..Default::default()
        },
    )
    .unwrap()
}

fn radius_sq(n: usize) -> String {
    (1..=n)
        .map(|i| format!("x{i}^2"))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn interior_points(model: &ManifoldModel, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.dimension();
    (0..count)
        .map(|_| {
            (0..n)
                .map(|i| {
                    let c = model.chart.center()[i];
                    let hw = 0.8 * model.chart.half_width();
                    c + rng.gen_range(-hw..hw)
                })
                .collect()
        })
        .collect()
}

/// Per-axis node counts keeping n-dimensional grids near the 33^3-node
/// budget: 33^3, 13^4 (< 15^4), and the pinned 9^5.
fn capped_axis_points(n: usize) -> usize {
    match n {
        3 => 33,
        4 => 13,
        5 => 9,
        _ => unreachable!("criterion covers n in 3..=5"),
    }
}

#[test]
fn acceptance_1_eq_2_1_cross_validation() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for n in [3usize, 4, 5] {
        let constructions: [(&str, ManifoldModel, String); 2] = [
            (
                "hyperbolic",
                euclidean(n, HYPERBOLIC_CLIP_FACTOR / (n as f64).sqrt()),
                format!("log(2/(1 - ({})))", radius_sq(n)),
            ),
            (
                "sphere",
                euclidean(n, 1.0),
                format!("log(2/(1 + {}))", radius_sq(n)),
            ),
        ];
        for (label, base, sigma_text) in constructions {
            let def = ConformalDeformation::from_sigma(n, parse(&sigma_text, n).unwrap()).unwrap();
            let rescaled = rescale_metric(&base, &def).unwrap();
            let g = grid(&base.chart, capped_axis_points(n)).unwrap();
            let residuals: Vec<f64> = (0..g.len())
                .into_par_iter()
                .map(|i| {
                    let x = g.point(i);
                    let pipeline = curvature::scalar_curvature(&rescaled, x).unwrap();
                    let law = predicted_scalar_transform(&base, &def, x).unwrap();
                    (pipeline - law).abs()
                })
                .collect();
            let max = residuals.iter().fold(0.0f64, |a, &b| a.max(b));
            detail.push(format!("{label} n={n} ({} nodes) max {max:.2e}", g.len()));
            worst = worst.max(max);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    criterion(
        1,
        worst <= 1e-8 && elapsed <= 60.0,
        &format!("worst {worst:.3e} in {elapsed:.1}s; {}", detail.join("; ")),
    );
}

#[test]
fn acceptance_2_constant_curvature_oracles() {
    let cases: Vec<(ManifoldModel, f64)> = vec![
        (euclidean(4, 1.0), 0.0),
        (
            model_zoo(ZooModel::FlatTorus, 3, &ZooParams::default()).unwrap(),
            0.0,
        ),
        (
            model_zoo(ZooModel::HyperbolicBall, 3, &ZooParams::default()).unwrap(),
            -6.0,
        ),
        (
            model_zoo(
                ZooModel::SphereStereographic,
                4,
                &ZooParams {
                    radius: Some(1.0),
                    ..Default::default()
                },
            )
            .unwrap(),
            12.0,
        ),
        (
            model_zoo(
                ZooModel::SphereStereographic,
                3,
                &ZooParams {
                    radius: Some(2.0),
                    ..Default::default()
                },
            )
            .unwrap(),
            1.5,
        ),
    ];
    let mut worst = 0.0f64;
    for (model, expected) in &cases {
        for x in interior_points(model, 50, 0xACCE) {
            let s = curvature::scalar_curvature(model, &x).unwrap();
            worst = worst.max((s - expected).abs());
        }
    }
    criterion(
        2,
        worst <= 1e-8,
        &format!("worst |s - closed form| {worst:.3e}"),
    );
}

#[test]
fn acceptance_3_predicted_gap_exactness() {
    let mut worst_rel = 0.0f64;
    for n in [3usize, 5] {
        let m = euclidean(n, 1.0);
        for lambda_text in ["1 + x1^2", "exp(x1*x2)"] {
            let def = ConformalDeformation::from_lambda(n, parse(lambda_text, n).unwrap()).unwrap();
            for x in interior_points(&m, 10, 0x6A9) {
                let g2 = calculus::grad_norm_sq(&m, def.lambda(), &x).unwrap();
                let lap_sq = conformal_lab::conformal::identity_residual(
                    IdentityId::LapSquarePaper,
                    &m,
                    &def,
                    &x,
                )
                .unwrap();
                worst_rel = worst_rel.max((lap_sq - g2).abs() / (1.0 + g2));
                let eq24 = conformal_lab::conformal::identity_residual(
                    IdentityId::Eq24Paper,
                    &m,
                    &def,
                    &x,
                )
                .unwrap();
                let gap = (n as f64 - 1.0) * g2;
                worst_rel = worst_rel.max((eq24 - gap).abs() / (1.0 + gap));
            }
        }
    }
    criterion(
        3,
        worst_rel <= 1e-7,
        &format!("worst relative gap error {worst_rel:.3e}"),
    );
}

#[test]
fn acceptance_4_conharmonic_construction() {
    let mut detail = Vec::new();
    let mut pass = true;
    for n in [3usize, 4, 5] {
        let m = euclidean(n, 1.0);
        let sigma = parse("log(2 + x1)", n)
            .unwrap()
            .scaled(2.0 / (n as f64 - 2.0));
        let def = ConformalDeformation::from_sigma(n, sigma).unwrap();
        let g = grid(&m.chart, if n == 5 { 5 } else { 7 }).unwrap();

        let eq31 = identity_report(IdentityId::Eq31, &m, &def, &g, 1e-9).unwrap();
        let eq32d = identity_report(IdentityId::Eq32Derived, &m, &def, &g, 1e-9).unwrap();
        pass &= eq31.max_abs_residual <= 1e-9 && eq32d.max_abs_residual <= 1e-9;

        let mut worst_rel = 0.0f64;
        for i in 0..g.len() {
            let x = g.point(i);
            let g2 = calculus::grad_norm_sq(&m, def.lambda(), x).unwrap();
            let gap = -2.0 * (n as f64 - 4.0) * g2;
            let res =
                conformal_lab::conformal::identity_residual(IdentityId::Eq32Paper, &m, &def, x)
                    .unwrap();
            worst_rel = worst_rel.max((res - gap).abs() / (1.0 + gap.abs()));
            if n == 4 {
                pass &= res.abs() <= 1e-9; // the gap coefficient vanishes
            }
        }
        pass &= worst_rel <= 1e-7;
        detail.push(format!(
            "n={n}: EQ_3_1 {:.1e}, EQ_3_2_DERIVED {:.1e}, gap rel {worst_rel:.1e}",
            eq31.max_abs_residual, eq32d.max_abs_residual
        ));
    }
    criterion(4, pass, &detail.join("; "));
}

#[test]
fn acceptance_5_yamabe_check() {
    let n = 3;
    let m = euclidean(n, 1.0);
    let u = parse("sqrt(2/(1 + x1^2 + x2^2 + x3^2))", n).unwrap();
    let def = ConformalDeformation::from_u(n, u).unwrap();
    let g = grid(&m.chart, 7).unwrap();
    let report = identity_report(IdentityId::Eq25, &m, &def, &g, 1e-8).unwrap();
    criterion(
        5,
        report.max_abs_residual <= 1e-8 && report.verdict == IdentityVerdict::Holds,
        &format!(
            "max Yamabe residual {:.3e} over {} nodes",
            report.max_abs_residual,
            g.len()
        ),
    );
}

#[test]
fn acceptance_6_tensor_symmetries() {
    let models = [
        euclidean(3, 1.0),
        model_zoo(ZooModel::SphereStereographic, 3, &ZooParams::default()).unwrap(),
        model_zoo(ZooModel::HyperbolicBall, 3, &ZooParams::default()).unwrap(),
        model_zoo(ZooModel::FlatTorus, 4, &ZooParams::default()).unwrap(),
    ];
    let mut worst = 0.0f64;
    for m in &models {
        for x in interior_points(m, 50, 0x5E6) {
            let sample = curvature::curvature_at(m, &x).unwrap();
            worst = worst.max(sample.max_symmetry_violation());
        }
    }
    criterion(
        6,
        worst <= 1e-9,
        &format!("worst symmetry violation {worst:.3e}"),
    );
}

#[test]
fn acceptance_7_integrability_verdicts() {
    let mut pass = true;
    let mut detail = Vec::new();

    let m = euclidean(3, 4.0);
    let gaussian = parse("exp(-(x1^2 + x2^2 + x3^2))", 3).unwrap();
    let report = lp_report(&m, &gaussian, 2.0, &ExhaustionSpec::default()).unwrap();
    let expect = (std::f64::consts::PI / 2.0).powf(1.5);
    let value = report.extrapolated_value.unwrap_or(f64::NAN);
    pass &=
        report.verdict == IntegrabilityVerdict::Finite && (value - expect).abs() <= 0.02 * expect;
    detail.push(format!("gaussian L2 {value:.4} vs {expect:.4}"));

    let one = parse("1", 3).unwrap();
    let report = lp_report(&m, &one, 2.0, &ExhaustionSpec::default()).unwrap();
    pass &= report.verdict == IntegrabilityVerdict::Diverging;
    detail.push(format!("constant {}", report.verdict.name()));

    let torus = model_zoo(ZooModel::FlatTorus, 2, &ZooParams::default()).unwrap();
    let wave = parse("sin(2*pi*x1)", 2).unwrap();
    let report = lp_report(&torus, &wave, 2.0, &ExhaustionSpec::default()).unwrap();
    let value = report.extrapolated_value.unwrap_or(f64::NAN);
    pass &= report.verdict == IntegrabilityVerdict::Finite && (value - 0.5).abs() <= 1e-3;
    detail.push(format!("torus sin^2 {value:.6}"));

    let torus3 = model_zoo(ZooModel::FlatTorus, 3, &ZooParams::default()).unwrap();
    let report = volume_report(&torus3, &ExhaustionSpec::default()).unwrap();
    let value = report.extrapolated_value.unwrap_or(f64::NAN);
    pass &= report.verdict == IntegrabilityVerdict::Finite && (value - 1.0).abs() <= 1e-10;
    detail.push(format!("torus volume {value:.12}"));

    criterion(7, pass, &detail.join("; "));
}

// ---- corpus ------------------------------------------------------------------

#[derive(serde::Deserialize)]
struct Manifest {
    scenario: Vec<ManifestEntry>,
}

#[derive(serde::Deserialize)]
struct ManifestEntry {
    file: String,
    expect_exit: i32,
    #[serde(default)]
    theorems: BTreeMap<String, String>,
    #[serde(default)]
    identities: BTreeMap<String, String>,
}

fn scenarios_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .canonicalize()
        .expect("scenarios directory exists")
}

fn load_manifest() -> Manifest {
    let path = scenarios_dir().join("manifest.toml");
    toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn acceptance_8_verdict_engine_corpus_and_hopf() {
    let manifest = load_manifest();
    assert!(manifest.scenario.len() >= 10, "corpus too small");
    let mut pass = true;
    let mut detail = Vec::new();
    let mut covered: Vec<String> = Vec::new();
    for entry in &manifest.scenario {
        let path = scenarios_dir().join(&entry.file);
        let result = cli::run_scenario_file(path.to_str().unwrap());
        let exit = match &result {
            Ok(outcome) => outcome.exit_code,
            Err(e) => e.exit_code(),
        };
        if exit != entry.expect_exit {
            pass = false;
            detail.push(format!(
                "{}: exit {exit} != {}",
                entry.file, entry.expect_exit
            ));
            continue;
        }
        if let Ok(outcome) = &result {
            for row in &outcome.rows {
                if row.kind == "theorem" {
                    covered.push(row.id.clone());
                    if row.verdict == "CONTRADICTION" {
                        pass = false;
                        detail.push(format!("{}: CONTRADICTION on {}", entry.file, row.id));
                    }
                }
            }
            for (id, expected) in entry.theorems.iter().chain(entry.identities.iter()) {
                let found = outcome.rows.iter().find(|r| &r.id == id);
                match found {
                    Some(row) if &row.verdict == expected => {}
                    Some(row) => {
                        pass = false;
                        detail.push(format!(
                            "{}: {id} verdict {} != {expected}",
                            entry.file, row.verdict
                        ));
                    }
                    None => {
                        pass = false;
                        detail.push(format!("{}: no row for {id}", entry.file));
                    }
                }
            }
        }
    }
    covered.sort();
    covered.dedup();
    for required in [
        "LEMMA", "T1", "T2", "T3", "T4", "T5", "C1", "C2", "C3", "C4", "C5", "C6",
    ] {
        if !covered.iter().any(|c| c == required) {
            pass = false;
            detail.push(format!("corpus does not cover {required}"));
        }
    }

    // Hopf analogue: on the torus, one-signed-Laplacian nonconstant smooth
    // functions do not exist; over random trigonometric polynomials the
    // classifier must report harmonic (constants) or mixed, and the
    // divergence integral must vanish.
    let torus = model_zoo(ZooModel::FlatTorus, 2, &ZooParams::default()).unwrap();
    let g = grid(&torus.chart, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x40F);
    let mut worst_div = 0.0f64;
    for _ in 0..50 {
        let a = rng.gen_range(0.2..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let b = rng.gen_range(0.2..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let pa: f64 = rng.gen_range(0.0..1.0);
        let fa = rng.gen_range(1..=2);
        let text = format!("{a}*sin(2*pi*({fa}*x1 + {pa}))*cos(2*pi*x2) + {b}*cos(4*pi*x2)");
        let phi = parse(&text, 2).unwrap();
        let div = closed_manifold_divergence_check(&torus, &phi, &g)
            .unwrap()
            .abs();
        worst_div = worst_div.max(div);
        let class = classify_harmonicity(&torus, &phi, &g, 1e-8).unwrap();
        if !matches!(class.tag, HarmonicityTag::Harmonic | HarmonicityTag::Mixed) {
            pass = false;
            detail.push(format!(
                "one-signed classification {} for {text}",
                class.tag.name()
            ));
        }
    }
    pass &= worst_div <= 1e-9;
    detail.push(format!("worst torus divergence {worst_div:.2e}"));

    criterion(8, pass, &detail.join("; "));
}

#[test]
fn acceptance_9_thread_count_determinism() {
    let manifest = load_manifest();
    let run_all = || -> String {
        let mut combined = String::new();
        for entry in &manifest.scenario {
            if entry.expect_exit == 2 {
                continue; // config errors produce no report
            }
            let path = scenarios_dir().join(&entry.file);
            let outcome = cli::run_scenario_file(path.to_str().unwrap()).unwrap();
            combined.push_str(&outcome.csv);
        }
        combined
    };
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run_all);
    let multi = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(run_all);
    criterion(
        9,
        single == multi && !single.is_empty(),
        &format!(
            "{} report bytes identical across 1 and 4 threads",
            single.len()
        ),
    );
}

#[test]
fn gradient_l1_report_of_gaussian_converges() {
    // companion to criterion 7: the gradient-norm integrand needs a wider
    // window before its tail drops under the convergence threshold
    let m = euclidean(3, 6.0);
    let gaussian = parse("exp(-(x1^2 + x2^2 + x3^2))", 3).unwrap();
    let report = grad_l1_report(&m, &gaussian, &ExhaustionSpec::default()).unwrap();
    assert_eq!(report.verdict, IntegrabilityVerdict::Finite);
}

#[test]
fn identity_reports_share_per_node_work_consistently() {
    // multi-id and single-id paths agree bit for bit
    let n = 3;
    let m = euclidean(n, 1.0);
    let def = ConformalDeformation::from_sigma(n, parse("0.2*x1 + 0.1*x2^2", n).unwrap()).unwrap();
    let g = grid(&m.chart, 3).unwrap();
    let ids = [IdentityId::Eq21, IdentityId::Eq23, IdentityId::Eq26];
    let batch = identity_reports(&ids, &m, &def, &g, 1e-8).unwrap();
    for (i, &id) in ids.iter().enumerate() {
        let single = identity_report(id, &m, &def, &g, 1e-8).unwrap();
        assert_eq!(single.max_abs_residual, batch[i].max_abs_residual);
        assert_eq!(single.mean_abs_residual, batch[i].mean_abs_residual);
    }
}
