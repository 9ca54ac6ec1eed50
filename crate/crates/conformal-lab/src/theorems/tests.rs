use super::*;
use crate::expr::parse;
use crate::geometry::{grid, model_zoo, ZooModel, ZooParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

fn torus(n: usize) -> ManifoldModel {
    model_zoo(ZooModel::FlatTorus, n, &ZooParams::default()).unwrap()
}

fn scenario<'a>(
    model: &'a ManifoldModel,
    def: Option<&'a ConformalDeformation>,
    grid: &'a Grid,
) -> TheoremScenario<'a> {
    TheoremScenario {
        model,
        deformation: def,
        phi: None,
        lp: Vec::new(),
        grid,
        exhaustion: ExhaustionSpec::geometric(6, 17),
        tol_identity: 1e-8,
        tol_class: 1e-8,
    }
}

#[test]
fn t1_constant_sigma_holds_as_homothety() {
    let m = euclidean(3, 1.0);
    let g = grid(&m.chart, 5).unwrap();
    let def = ConformalDeformation::from_sigma(3, parse("0.7", 3).unwrap()).unwrap();
    let verdict = check(TheoremId::T1, &scenario(&m, Some(&def), &g)).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::HoldsOnGrid);
    for hyp in &verdict.hypotheses {
        assert!(
            matches!(
                hyp.status,
                HypothesisStatus::VerifiedNumerically | HypothesisStatus::Declared
            ),
            "{}: {}",
            hyp.name,
            hyp.status.name()
        );
    }
    let mapping = verdict.conclusion.mapping.unwrap();
    assert!(mapping.is_homothetic());
}

#[test]
fn t1_hyperbolic_target_violates_sign_hypothesis() {
    // flat base, ball factor: s = 0, sbar = -6, so s <= e^{2 sigma} sbar
    // fails everywhere.
    let n = 3;
    let hw = crate::geometry::HYPERBOLIC_CLIP_FACTOR / (n as f64).sqrt();
    let m = euclidean(n, hw);
    let g = grid(&m.chart, 5).unwrap();
    let ss = "x1^2 + x2^2 + x3^2";
    let def =
        ConformalDeformation::from_sigma(n, parse(&format!("log(2/(1 - ({ss})))"), n).unwrap())
            .unwrap();
    let verdict = check(TheoremId::T1, &scenario(&m, Some(&def), &g)).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::NotApplicable);
    let sign = verdict
        .hypotheses
        .iter()
        .find(|h| h.name.contains("e^{2 sigma}"))
        .unwrap();
    assert_eq!(sign.status, HypothesisStatus::Violated);
    assert!(sign.witness.is_some());
}

#[test]
fn c1_flat_torus_with_zero_sigma_holds() {
    let m = torus(3);
    let g = grid(&m.chart, 4).unwrap();
    let def = ConformalDeformation::from_sigma(3, parse("0", 3).unwrap()).unwrap();
    let verdict = check(TheoremId::C1, &scenario(&m, Some(&def), &g)).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::HoldsOnGrid);
    assert_eq!(verdict.conclusion.max_abs_s, Some(0.0));
    assert_eq!(verdict.conclusion.max_abs_sbar, Some(0.0));
}

#[test]
fn t2_torus_with_lambda_lp_holds() {
    let m = torus(3);
    let g = grid(&m.chart, 4).unwrap();
    let def = ConformalDeformation::from_sigma(3, parse("0.2", 3).unwrap()).unwrap();
    let mut scn = scenario(&m, Some(&def), &g);
    scn.lp = vec![LpRequest {
        quantity: LpQuantity::Lambda,
        p: 2.0,
    }];
    let verdict = check(TheoremId::T2, &scn).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::HoldsOnGrid);
}

#[test]
fn t2_without_lambda_lp_is_missing_ingredient() {
    let m = torus(3);
    let g = grid(&m.chart, 4).unwrap();
    let def = ConformalDeformation::from_sigma(3, parse("0.2", 3).unwrap()).unwrap();
    assert!(matches!(
        check(TheoremId::T2, &scenario(&m, Some(&def), &g)),
        Err(TheoremError::MissingIngredient { .. })
    ));
}

#[test]
fn t5_flat_torus_4d_constant_sigma_holds() {
    let m = torus(4);
    let g = grid(&m.chart, 4).unwrap();
    let def = ConformalDeformation::from_sigma(4, parse("0.3", 4).unwrap()).unwrap();
    let verdict = check(TheoremId::T5, &scenario(&m, Some(&def), &g)).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::HoldsOnGrid);
    let conh = verdict
        .hypotheses
        .iter()
        .find(|h| h.name.starts_with("conharmonic"))
        .unwrap();
    assert_eq!(conh.status, HypothesisStatus::VerifiedNumerically);
    let ric = verdict
        .hypotheses
        .iter()
        .find(|h| h.name == "Ric >= 0")
        .unwrap();
    assert_eq!(ric.status, HypothesisStatus::VerifiedNumerically);
}

#[test]
fn c5_euclidean_conharmonic_is_inconclusive() {
    // sigma = 2 log(2 + x1) is conharmonic by construction, but its gradient
    // norm does not decay, so the exhaustion trend keeps growing on a
    // declared-infinite-volume chart: the L^1 hypothesis stays undecided.
    let m = euclidean(3, 1.0);
    let g = grid(&m.chart, 5).unwrap();
    let def =
        ConformalDeformation::from_sigma(3, parse("log(2 + x1)", 3).unwrap().scaled(2.0)).unwrap();
    let verdict = check(TheoremId::C5, &scenario(&m, Some(&def), &g)).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::Inconclusive);
    let grad = verdict
        .hypotheses
        .iter()
        .find(|h| h.name.contains("in L^1"))
        .unwrap();
    assert_eq!(grad.status, HypothesisStatus::Inconclusive);
    let conh = verdict
        .hypotheses
        .iter()
        .find(|h| h.name.starts_with("conharmonic"))
        .unwrap();
    assert_eq!(conh.status, HypothesisStatus::VerifiedNumerically);
}

#[test]
fn c6_torus_4d_holds() {
    let m = torus(4);
    let g = grid(&m.chart, 4).unwrap();
    let def = ConformalDeformation::from_sigma(4, parse("0.15", 4).unwrap()).unwrap();
    let mut scn = scenario(&m, Some(&def), &g);
    scn.lp = vec![LpRequest {
        quantity: LpQuantity::Lambda,
        p: 2.0,
    }];
    let verdict = check(TheoremId::C6, &scn).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::HoldsOnGrid);
}

#[test]
fn lemma_on_torus_constant_phi_holds() {
    let m = torus(3);
    let g = grid(&m.chart, 4).unwrap();
    let def = ConformalDeformation::from_sigma(3, parse("0.3", 3).unwrap()).unwrap();
    let verdict = check(TheoremId::Lemma, &scenario(&m, Some(&def), &g)).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::HoldsOnGrid);
    assert_eq!(
        verdict.conclusion.harmonicity.as_ref().unwrap().tag,
        HarmonicityTag::Harmonic
    );
}

#[test]
fn lemma_lp_route_on_torus() {
    // phi = -0.2 <= 0, superharmonic (harmonic), L^2 finite on the torus:
    // conclusion phi constant.
    let m = torus(3);
    let g = grid(&m.chart, 4).unwrap();
    let phi = parse("0 - 0.2", 3).unwrap();
    let mut scn = scenario(&m, None, &g);
    scn.phi = Some(&phi);
    scn.lp = vec![LpRequest {
        quantity: LpQuantity::Sigma,
        p: 2.0,
    }];
    let verdict = check(TheoremId::Lemma, &scn).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::HoldsOnGrid);
    assert_eq!(verdict.conclusion.phi_spread, Some(0.0));
}

#[test]
fn lemma_mixed_phi_is_not_applicable() {
    let m = torus(2);
    let g = grid(&m.chart, 8).unwrap();
    let phi = parse("sin(2*pi*x1)", 2).unwrap();
    let mut scn = scenario(&m, None, &g);
    scn.phi = Some(&phi);
    let verdict = check(TheoremId::Lemma, &scn).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::NotApplicable);
}

#[test]
fn t1_lp_route_on_infinite_volume_requires_isometry() {
    // sigma = 0 with a sigma L^p entry: route (ii) verifies (sigma <= 0 and
    // the zero integrand is finite), the model declares infinite volume, so
    // the conclusion must be isometric - and it is.
    let m = euclidean(3, 1.0);
    let g = grid(&m.chart, 5).unwrap();
    let def = ConformalDeformation::from_sigma(3, parse("0", 3).unwrap()).unwrap();
    let mut scn = scenario(&m, Some(&def), &g);
    scn.lp = vec![LpRequest {
        quantity: LpQuantity::Sigma,
        p: 2.0,
    }];
    let verdict = check(TheoremId::T1, &scn).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::HoldsOnGrid);
    assert_eq!(
        verdict.conclusion.mapping.as_ref().unwrap().tag,
        crate::conformal::MappingTag::Isometric
    );
    assert!(verdict
        .conclusion
        .notes
        .iter()
        .any(|n| n.contains("isometric required")));
}

#[test]
fn lemma_lp_route_on_infinite_volume_forces_zero() {
    // On a declared-infinite-volume model the constancy conclusion is
    // sharpened to phi = 0; the zero function satisfies everything.
    let m = euclidean(3, 4.0);
    let g = grid(&m.chart, 5).unwrap();
    let phi = parse("0", 3).unwrap();
    let mut scn = scenario(&m, None, &g);
    scn.phi = Some(&phi);
    scn.lp = vec![LpRequest {
        quantity: LpQuantity::Sigma,
        p: 2.0,
    }];
    let verdict = check(TheoremId::Lemma, &scn).unwrap();
    assert_eq!(verdict.conclusion_status, ConclusionStatus::HoldsOnGrid);
    assert_eq!(verdict.conclusion.phi_absmax, Some(0.0));
    assert!(verdict
        .conclusion
        .notes
        .iter()
        .any(|n| n.contains("phi = 0 on declared infinite volume")));
}

#[test]
fn dimension_guards() {
    let m5 = torus(5);
    let g5 = grid(&m5.chart, 3).unwrap();
    let def5 = ConformalDeformation::from_sigma(5, parse("0.1", 5).unwrap()).unwrap();
    assert!(matches!(
        check(TheoremId::T2, &scenario(&m5, Some(&def5), &g5)),
        Err(TheoremError::InadmissibleDimension { .. })
    ));
    let m3 = torus(3);
    let g3 = grid(&m3.chart, 3).unwrap();
    let def3 = ConformalDeformation::from_sigma(3, parse("0.1", 3).unwrap()).unwrap();
    for id in [TheoremId::T3, TheoremId::T5, TheoremId::C6] {
        assert!(matches!(
            check(id, &scenario(&m3, Some(&def3), &g3)),
            Err(TheoremError::InadmissibleDimension { .. })
        ));
    }
}

#[test]
fn divergence_check_examples() {
    let t2 = torus(2);
    let g32 = grid(&t2.chart, 32).unwrap();
    let phi = parse("sin(2*pi*x1)*cos(2*pi*x2)", 2).unwrap();
    let v = closed_manifold_divergence_check(&t2, &phi, &g32).unwrap();
    assert!(v.abs() <= 1e-10, "value {v:e}");

    let constant = parse("5", 2).unwrap();
    let v = closed_manifold_divergence_check(&t2, &constant, &g32).unwrap();
    assert_eq!(v, 0.0);

    let t3 = torus(3);
    let g16 = grid(&t3.chart, 16).unwrap();
    let phi3 = parse("sin(2*pi*x1) + cos(4*pi*x2)", 3).unwrap();
    let v = closed_manifold_divergence_check(&t3, &phi3, &g16).unwrap();
    assert!(v.abs() <= 1e-10, "value {v:e}");

    let open = euclidean(2, 1.0);
    let g = grid(&open.chart, 5).unwrap();
    assert!(matches!(
        closed_manifold_divergence_check(&open, &parse("x1", 2).unwrap(), &g),
        Err(TheoremError::NonPeriodicAxis)
    ));
}

#[test]
fn hopf_analogue_over_random_trigonometric_polynomials() {
    // On the torus the only grid-classified strictly one-signed-Laplacian
    // smooth functions are constants: every non-constant draw must classify
    // harmonic-or-mixed with a near-zero divergence integral, and a
    // one-signed classification with a nonzero witness never appears.
    let m = torus(2);
    let g = grid(&m.chart, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    for case in 0..50 {
        let a = rng.gen_range(0.2..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let b = rng.gen_range(0.2..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let pa: f64 = rng.gen_range(0.0..1.0);
        let pb: f64 = rng.gen_range(0.0..1.0);
        let fa = rng.gen_range(1..=2);
        let fb = rng.gen_range(1..=2);
        let text =
            format!("{a}*sin(2*pi*({fa}*x1 + {pa}))*cos(2*pi*x2) + {b}*cos(2*pi*({fb}*x2 + {pb}))");
        let phi = parse(&text, 2).unwrap();
        let div = closed_manifold_divergence_check(&m, &phi, &g).unwrap();
        assert!(
            div.abs() <= 1e-9,
            "case {case}: divergence {div:e} for {text}"
        );
        let class = calculus::classify_harmonicity(&m, &phi, &g, 1e-8).unwrap();
        assert!(
            matches!(class.tag, HarmonicityTag::Harmonic | HarmonicityTag::Mixed),
            "case {case}: {} for {text}",
            class.tag.name()
        );
        // harmonic classification only happens when the witness is ~zero,
        // i.e. the function is constant up to rounding.
        if class.tag == HarmonicityTag::Harmonic {
            assert!(class.witness_min.abs().max(class.witness_max.abs()) <= 1e-8);
        }
    }
}

#[test]
fn tolerance_tightening_never_upgrades_a_hypothesis() {
    // Sweep tol_identity downward on three scenarios and check that each
    // hypothesis status only moves down the verified > inconclusive >
    // violated ranking.
    let m = torus(3);
    let g = grid(&m.chart, 4).unwrap();
    let defs = [
        ConformalDeformation::from_sigma(3, parse("0.7", 3).unwrap()).unwrap(),
        ConformalDeformation::from_sigma(3, parse("0.000001*sin(2*pi*x1)", 3).unwrap()).unwrap(),
        ConformalDeformation::from_sigma(3, parse("0.2 + 0.0001*x1", 3).unwrap()).unwrap(),
    ];
    for def in &defs {
        let mut previous: Option<Vec<u8>> = None;
        for tol in [1e-2, 1e-6, 1e-10] {
            let mut scn = scenario(&m, Some(def), &g);
            scn.tol_identity = tol;
            scn.tol_class = tol;
            let verdict = check(TheoremId::C1, &scn).unwrap();
            let ranks: Vec<u8> = verdict.hypotheses.iter().map(|h| h.status.rank()).collect();
            if let Some(prev) = &previous {
                for (a, b) in prev.iter().zip(&ranks) {
                    assert!(
                        b <= a,
                        "tightening tol upgraded a hypothesis: {prev:?} -> {ranks:?}"
                    );
                }
            }
            previous = Some(ranks);
        }
    }
}

#[test]
fn near_zero_sign_margin_flips_with_tolerance() {
    // sigma tiny but non-constant: sbar has ~1e-5-scale values of both
    // signs, so C1's sign hypotheses verify at loose tolerance and violate
    // at tight tolerance.
    let m = torus(3);
    let g = grid(&m.chart, 4).unwrap();
    let def =
        ConformalDeformation::from_sigma(3, parse("0.00001*sin(2*pi*x1)", 3).unwrap()).unwrap();
    let loose = {
        let mut scn = scenario(&m, Some(&def), &g);
        scn.tol_identity = 1e-1;
        check(TheoremId::C1, &scn).unwrap()
    };
    let tight = {
        let mut scn = scenario(&m, Some(&def), &g);
        scn.tol_identity = 1e-12;
        check(TheoremId::C1, &scn).unwrap()
    };
    let sign_status = |v: &TheoremVerdict| {
        v.hypotheses
            .iter()
            .find(|h| h.name == "sbar >= 0")
            .unwrap()
            .status
    };
    assert_eq!(sign_status(&loose), HypothesisStatus::VerifiedNumerically);
    assert_eq!(sign_status(&tight), HypothesisStatus::Violated);
    assert_eq!(tight.conclusion_status, ConclusionStatus::NotApplicable);
}
