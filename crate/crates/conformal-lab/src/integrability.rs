//! Exhaustion-based estimates of the integral hypotheses: L^p norms,
//! gradient L^1 norms, and volume, over nested subdomains of the chart.
//!
//! The hypotheses are global statements over a complete manifold; a chart
//! exhaustion can only sample a window of it, so `finite`/`diverging` are
//! heuristic trend verdicts and `inconclusive` (neither criterion met) must
//! propagate to theorem checks as inconclusive, never as satisfied.

use crate::calculus::{self, CalculusError};
use crate::expr::ScalarExpression;
use crate::geometry::{grid_scaled, GeometryError, ManifoldModel};
use crate::linalg::pairwise_sum;
use rayon::prelude::*;

/// A stage-to-stage relative increment at or below this marks convergence.
pub const CONVERGENCE_INCREMENT_THRESHOLD: f64 = 1e-3;
/// Increment ratios at or above this across the last stages mark divergence.
pub const DIVERGENCE_RATIO_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrabilityError {
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("exhaustion stages must be strictly increasing in (0, 1], got {0:?}")]
    BadStages(Vec<f64>),
    #[error("exponent p must be >= 1, got {0}")]
    BadExponent(f64),
}

/// Nested subdomains: scale factors applied to the chart half-width on
/// non-periodic axes (periodic axes always cover their full circle), each
/// sampled with `points_per_axis` midpoint nodes.
#[derive(Debug, Clone)]
pub struct ExhaustionSpec {
    pub stages: Vec<f64>,
    pub points_per_axis: usize,
}

impl ExhaustionSpec {
    /// Geometric stages from 0.2 to 1.0.
    pub fn geometric(count: usize, points_per_axis: usize) -> Self {
        assert!(count >= 2);
        let stages = (0..count)
            .map(|k| 0.2f64.powf(1.0 - k as f64 / (count as f64 - 1.0)))
            .collect();
        ExhaustionSpec {
            stages,
            points_per_axis,
        }
    }

    fn validate(&self) -> Result<(), IntegrabilityError> {
        let ok = self.stages.len() >= 2
            && self.stages.windows(2).all(|w| w[0] < w[1])
            && self.stages.iter().all(|&t| t > 0.0 && t <= 1.0);
        if !ok {
            return Err(IntegrabilityError::BadStages(self.stages.clone()));
        }
        Ok(())
    }
}

impl Default for ExhaustionSpec {
    fn default() -> Self {
        ExhaustionSpec::geometric(6, 33)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrabilityVerdict {
    Finite,
    Diverging,
    Inconclusive,
}

impl IntegrabilityVerdict {
    pub fn name(self) -> &'static str {
        match self {
            IntegrabilityVerdict::Finite => "finite",
            IntegrabilityVerdict::Diverging => "diverging",
            IntegrabilityVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Stagewise integrals of a non-negative integrand with a trend verdict.
#[derive(Debug, Clone)]
pub struct IntegrabilityReport {
    pub quantity: String,
    pub p: f64,
    /// Stage integrals over the nested subdomains, in stage order.
    pub partials: Vec<f64>,
    pub verdict: IntegrabilityVerdict,
    /// Tail-sum extrapolation from the final increments; present only when
    /// the verdict is `finite`.
    pub extrapolated_value: Option<f64>,
    /// Set when a stage produced a non-finite integrand value.
    pub non_finite_integrand: bool,
    /// Location of the largest integrand sample on the final stage.
    pub max_integrand_point: Option<Vec<f64>>,
}

enum Integrand<'a> {
    /// |phi|^p
    AbsPow(&'a ScalarExpression, f64),
    /// |grad phi|^p (gradient norm in the model metric)
    GradNormPow(&'a ScalarExpression, f64),
    /// constant 1
    Volume,
}

impl Integrand<'_> {
    fn eval(&self, model: &ManifoldModel, x: &[f64]) -> Result<f64, CalculusError> {
        match self {
            Integrand::AbsPow(phi, p) => Ok(pow_abs(phi.evaluate(x)?, *p)),
            Integrand::GradNormPow(phi, p) => {
                Ok(pow_abs(calculus::grad_norm_sq(model, phi, x)?.sqrt(), *p))
            }
            Integrand::Volume => Ok(1.0),
        }
    }
}

/// `|v|^p`, via `powi` when p is a small integer so scaling laws stay exact.
fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 1.0 {
        a
    } else if p.fract() == 0.0 && p.abs() <= 32.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// `int |phi|^p dVol` over the exhaustion.
pub fn lp_report(
    model: &ManifoldModel,
    phi: &ScalarExpression,
    p: f64,
    exhaustion: &ExhaustionSpec,
) -> Result<IntegrabilityReport, IntegrabilityError> {
    if !(p >= 1.0) {
        return Err(IntegrabilityError::BadExponent(p));
    }
    exhaustion_report(model, Integrand::AbsPow(phi, p), p, "|phi|^p", exhaustion)
}

/// `int |grad phi| dVol` over the exhaustion.
pub fn grad_l1_report(
    model: &ManifoldModel,
    phi: &ScalarExpression,
    exhaustion: &ExhaustionSpec,
) -> Result<IntegrabilityReport, IntegrabilityError> {
    exhaustion_report(
        model,
        Integrand::GradNormPow(phi, 1.0),
        1.0,
        "|grad phi|",
        exhaustion,
    )
}

/// Volume of the exhaustion stages.
pub fn volume_report(
    model: &ManifoldModel,
    exhaustion: &ExhaustionSpec,
) -> Result<IntegrabilityReport, IntegrabilityError> {
    exhaustion_report(model, Integrand::Volume, 1.0, "volume", exhaustion)
}

/// `int |grad phi|^p dVol` for scenario-driven L^p rows on the gradient.
pub fn grad_lp_report(
    model: &ManifoldModel,
    phi: &ScalarExpression,
    p: f64,
    exhaustion: &ExhaustionSpec,
) -> Result<IntegrabilityReport, IntegrabilityError> {
    if !(p >= 1.0) {
        return Err(IntegrabilityError::BadExponent(p));
    }
    exhaustion_report(
        model,
        Integrand::GradNormPow(phi, p),
        p,
        "|grad phi|^p",
        exhaustion,
    )
}

fn exhaustion_report(
    model: &ManifoldModel,
    integrand: Integrand<'_>,
    p: f64,
    quantity: &str,
    exhaustion: &ExhaustionSpec,
) -> Result<IntegrabilityReport, IntegrabilityError> {
    exhaustion.validate()?;
    let mut partials = Vec::with_capacity(exhaustion.stages.len());
    let mut non_finite = false;
    let mut max_integrand_point = None;
    for &scale in &exhaustion.stages {
        let stage_grid = grid_scaled(&model.chart, exhaustion.points_per_axis, scale)?;
        let samples: Vec<Result<f64, CalculusError>> = (0..stage_grid.len())
            .into_par_iter()
            .map(|i| {
                let x = stage_grid.point(i);
                Ok(integrand.eval(model, x)? * model.metric_at(x)?.sqrt_det * stage_grid.weight(i))
            })
            .collect();
        let values = calculus::collect_ordered(samples)?;
        if values.iter().any(|v| !v.is_finite()) {
            non_finite = true;
            break;
        }
        // track the hottest node of the (current) last stage as a witness
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > best {
                best = v;
                best_idx = i;
            }
        }
        max_integrand_point = Some(stage_grid.point(best_idx).to_vec());
        partials.push(pairwise_sum(&values));
    }

    let verdict = if non_finite {
        IntegrabilityVerdict::Diverging
    } else {
        classify_partials(&partials)
    };
    let extrapolated_value = (verdict == IntegrabilityVerdict::Finite).then(|| {
        let k = partials.len();
        let last = partials[k - 1];
        let d_last = last - partials[k - 2];
        let d_prev = if k >= 3 {
            partials[k - 2] - partials[k - 3]
        } else {
            0.0
        };
        // geometric tail estimate with a clamped decay ratio
        if d_prev.abs() > 0.0 {
            let q = (d_last / d_prev).clamp(0.0, 0.95);
            last + d_last * q / (1.0 - q)
        } else {
            last
        }
    });
    Ok(IntegrabilityReport {
        quantity: quantity.to_owned(),
        p,
        partials,
        verdict,
        extrapolated_value,
        non_finite_integrand: non_finite,
        max_integrand_point,
    })
}

fn classify_partials(partials: &[f64]) -> IntegrabilityVerdict {
    let k = partials.len();
    if k < 3 {
        return IntegrabilityVerdict::Inconclusive;
    }
    let increment = |i: usize| partials[i] - partials[i - 1];
    let rel = |i: usize| {
        let base = partials[i].abs();
        if base > 0.0 {
            increment(i) / base
        } else {
            0.0
        }
    };
    if rel(k - 1).abs() <= CONVERGENCE_INCREMENT_THRESHOLD
        && rel(k - 2).abs() <= CONVERGENCE_INCREMENT_THRESHOLD
    {
        return IntegrabilityVerdict::Finite;
    }
    let non_shrinking = |num: f64, den: f64| den > 0.0 && num / den >= DIVERGENCE_RATIO_THRESHOLD;
    let d_last = increment(k - 1);
    let d_prev = increment(k - 2);
    if k >= 4 {
        let d_prev2 = increment(k - 3);
        if non_shrinking(d_last, d_prev) && non_shrinking(d_prev, d_prev2) {
            return IntegrabilityVerdict::Diverging;
        }
    } else if non_shrinking(d_last, d_prev) {
        return IntegrabilityVerdict::Diverging;
    }
    IntegrabilityVerdict::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{model_zoo, ZooModel, ZooParams};

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

    #[test]
    fn gaussian_l2_is_finite_with_known_value() {
        // int e^{-2|x|^2} dx over R^3 = (pi/2)^{3/2}; the box +-4 already
        // carries all but ~1e-14 of the mass.
        let m = euclidean(3, 4.0);
        let phi = parse("exp(-(x1^2 + x2^2 + x3^2))", 3).unwrap();
        let report = lp_report(&m, &phi, 2.0, &ExhaustionSpec::default()).unwrap();
        assert_eq!(report.verdict, IntegrabilityVerdict::Finite);
        let expect = (std::f64::consts::PI / 2.0).powf(1.5);
        let got = report.extrapolated_value.unwrap();
        assert!(
            (got - expect).abs() <= 0.02 * expect,
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn constant_on_euclidean_diverges() {
        let m = euclidean(3, 4.0);
        let phi = parse("1", 3).unwrap();
        let report = lp_report(&m, &phi, 2.0, &ExhaustionSpec::default()).unwrap();
        assert_eq!(report.verdict, IntegrabilityVerdict::Diverging);
        // partials grow like the box volume
        let k = report.partials.len();
        assert!(report.partials[k - 1] > 2.0 * report.partials[k - 2]);
    }

    #[test]
    fn torus_sine_l2_value() {
        // int_0^1 sin^2(2 pi t) dt = 1/2; periodic axes are never shrunk, so
        // every stage already integrates over the whole torus.
        let m = model_zoo(ZooModel::FlatTorus, 2, &ZooParams::default()).unwrap();
        let phi = parse("sin(2*pi*x1)", 2).unwrap();
        let report = lp_report(&m, &phi, 2.0, &ExhaustionSpec::default()).unwrap();
        assert_eq!(report.verdict, IntegrabilityVerdict::Finite);
        let got = report.extrapolated_value.unwrap();
        assert!((got - 0.5).abs() <= 1e-3, "got {got}");
        for w in report.partials.windows(2) {
            assert!((w[0] - w[1]).abs() <= 1e-12);
        }
    }

    #[test]
    fn torus_volume_is_one() {
        let m = model_zoo(ZooModel::FlatTorus, 3, &ZooParams::default()).unwrap();
        let report = volume_report(&m, &ExhaustionSpec::default()).unwrap();
        assert_eq!(report.verdict, IntegrabilityVerdict::Finite);
        assert!((report.extrapolated_value.unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn euclidean_volume_diverges() {
        let m = euclidean(3, 4.0);
        let report = volume_report(&m, &ExhaustionSpec::default()).unwrap();
        assert_eq!(report.verdict, IntegrabilityVerdict::Diverging);
    }

    #[test]
    fn hyperbolic_volume_diverges_toward_clip_boundary() {
        let m = model_zoo(ZooModel::HyperbolicBall, 3, &ZooParams::default()).unwrap();
        let report = volume_report(&m, &ExhaustionSpec::default()).unwrap();
        assert_eq!(report.verdict, IntegrabilityVerdict::Diverging);
    }

    #[test]
    fn gradient_l1_examples() {
        // |grad e^{-r^2}| = 2 r e^{-r^2} decays slower than the squared
        // Gaussian; the box must reach +-6 before the increments drop below
        // the convergence threshold.
        let wide = euclidean(3, 6.0);
        let gaussian = parse("exp(-(x1^2 + x2^2 + x3^2))", 3).unwrap();
        let report = grad_l1_report(&wide, &gaussian, &ExhaustionSpec::default()).unwrap();
        assert_eq!(report.verdict, IntegrabilityVerdict::Finite);
        // closed form: int 2 r e^{-r^2} dVol = 8 pi int r^3 e^{-r^2} dr = 4 pi
        let expect = 4.0 * std::f64::consts::PI;
        let got = report.extrapolated_value.unwrap();
        assert!((got - expect).abs() <= 0.02 * expect, "got {got}");

        let m = euclidean(3, 4.0);
        let linear = parse("x1", 3).unwrap();
        let report = grad_l1_report(&m, &linear, &ExhaustionSpec::default()).unwrap();
        assert_eq!(report.verdict, IntegrabilityVerdict::Diverging);

        let constant = parse("3", 3).unwrap();
        let report = grad_l1_report(&m, &constant, &ExhaustionSpec::default()).unwrap();
        assert_eq!(report.verdict, IntegrabilityVerdict::Finite);
        assert_eq!(report.extrapolated_value.unwrap(), 0.0);
    }

    #[test]
    fn partials_are_non_decreasing_for_non_negative_integrands() {
        let cases: Vec<(ManifoldModel, ScalarExpression, f64)> = vec![
            (
                euclidean(3, 4.0),
                parse("exp(-(x1^2+x2^2+x3^2))", 3).unwrap(),
                2.0,
            ),
            (euclidean(3, 4.0), parse("1", 3).unwrap(), 2.0),
            (
                model_zoo(ZooModel::HyperbolicBall, 3, &ZooParams::default()).unwrap(),
                parse("x1", 3).unwrap(),
                1.0,
            ),
        ];
        for (m, phi, p) in &cases {
            let report = lp_report(m, phi, *p, &ExhaustionSpec::default()).unwrap();
            for w in report.partials.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "partials {:?}", report.partials);
            }
        }
    }

    #[test]
    fn scaling_by_power_of_two_is_exact() {
        // |c phi|^p = |c|^p |phi|^p with c a power of two and integer p:
        // every floating step scales exactly.
        let m = euclidean(3, 2.0);
        let phi = parse("sin(x1) + 0.25*x2", 3).unwrap();
        let scaled = phi.scaled(2.0);
        let spec = ExhaustionSpec::geometric(4, 9);
        let base = lp_report(&m, &phi, 2.0, &spec).unwrap();
        let double = lp_report(&m, &scaled, 2.0, &spec).unwrap();
        for (a, b) in base.partials.iter().zip(&double.partials) {
            assert_eq!(4.0 * a, *b);
        }
    }

    #[test]
    fn verdicts_stable_under_resolution_doubling() {
        let m3 = euclidean(3, 4.0);
        let torus = model_zoo(ZooModel::FlatTorus, 2, &ZooParams::default()).unwrap();
        let hyp = model_zoo(ZooModel::HyperbolicBall, 3, &ZooParams::default()).unwrap();
        let gaussian = parse("exp(-(x1^2+x2^2+x3^2))", 3).unwrap();
        let one3 = parse("1", 3).unwrap();
        let wave = parse("sin(2*pi*x1)", 2).unwrap();

        let coarse = ExhaustionSpec::geometric(6, 17);
        let fine = ExhaustionSpec::geometric(6, 34); // periodic allows even
        let fine_odd = ExhaustionSpec::geometric(6, 35);

        let pairs: Vec<(IntegrabilityVerdict, IntegrabilityVerdict)> = vec![
            (
                lp_report(&m3, &gaussian, 2.0, &coarse).unwrap().verdict,
                lp_report(&m3, &gaussian, 2.0, &fine_odd).unwrap().verdict,
            ),
            (
                lp_report(&m3, &one3, 2.0, &coarse).unwrap().verdict,
                lp_report(&m3, &one3, 2.0, &fine_odd).unwrap().verdict,
            ),
            (
                lp_report(&torus, &wave, 2.0, &coarse).unwrap().verdict,
                lp_report(&torus, &wave, 2.0, &fine).unwrap().verdict,
            ),
            (
                volume_report(&hyp, &coarse).unwrap().verdict,
                volume_report(&hyp, &fine_odd).unwrap().verdict,
            ),
        ];
        for (a, b) in pairs {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bad_stages_and_exponents_rejected() {
        let m = euclidean(2, 1.0);
        let phi = parse("x1", 2).unwrap();
        let bad = ExhaustionSpec {
            stages: vec![0.5, 0.5, 1.0],
            points_per_axis: 9,
        };
        assert!(matches!(
            lp_report(&m, &phi, 2.0, &bad),
            Err(IntegrabilityError::BadStages(_))
        ));
        assert!(matches!(
            lp_report(&m, &phi, 0.5, &ExhaustionSpec::default()),
            Err(IntegrabilityError::BadExponent(_))
        ));
    }
}
