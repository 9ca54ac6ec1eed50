//! Hypothesis-and-conclusion verdict engine for the Liouville-type rigidity
//! statements, plus the closed-manifold divergence check.
//!
//! Universally quantified statements cannot be proved by sampling; the
//! engine either (a) confirms the conclusion on an instance whose hypotheses
//! hold, or (b) locates the violated hypothesis. The verdict vocabulary
//! encodes exactly this. `CONTRADICTION` (hypotheses all verified/declared
//! yet the conclusion fails on the grid) is a tripwire for implementation
//! bugs or genuine counterexamples and must never occur in the shipped
//! scenario corpus.
//!
//! Declared model properties (completeness, volume finiteness) never
//! upgrade to "verified": they render as `declared`. Integral hypotheses are
//! estimated by chart exhaustion; a `diverging` trend on a model that
//! declares infinite volume is reported as inconclusive (the window cannot
//! decide the global integral), and an `inconclusive` trend always
//! propagates as inconclusive, never as satisfied.

use crate::calculus::{self, CalculusError, HarmonicityClass, HarmonicityTag};
use crate::conformal::{
    self, classify_mapping, ConformalDeformation, ConformalError, IdentityId, MappingClass,
};
use crate::curvature;
use crate::expr::ScalarExpression;
use crate::geometry::{GeometryError, Grid, ManifoldModel};
use crate::integrability::{
    self, ExhaustionSpec, IntegrabilityError, IntegrabilityReport, IntegrabilityVerdict,
};
use crate::linalg;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremId {
    Lemma,
    T1,
    T2,
    T3,
    T4,
    T5,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl TheoremId {
    pub const ALL: [TheoremId; 12] = [
        TheoremId::Lemma,
        TheoremId::T1,
        TheoremId::T2,
        TheoremId::T3,
        TheoremId::T4,
        TheoremId::T5,
        TheoremId::C1,
        TheoremId::C2,
        TheoremId::C3,
        TheoremId::C4,
        TheoremId::C5,
        TheoremId::C6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::Lemma => "LEMMA",
            TheoremId::T1 => "T1",
            TheoremId::T2 => "T2",
            TheoremId::T3 => "T3",
            TheoremId::T4 => "T4",
            TheoremId::T5 => "T5",
            TheoremId::C1 => "C1",
            TheoremId::C2 => "C2",
            TheoremId::C3 => "C3",
            TheoremId::C4 => "C4",
            TheoremId::C5 => "C5",
            TheoremId::C6 => "C6",
        }
    }

    /// Admissible chart dimensions for the statement.
    fn dims_admissible(self, n: usize) -> bool {
        match self {
            TheoremId::Lemma => n >= 2,
            TheoremId::T2 | TheoremId::C2 => n == 3 || n == 4,
            TheoremId::T3 | TheoremId::C3 => n == 5,
            TheoremId::T5 => n == 4,
            TheoremId::C6 => n >= 4,
            _ => n >= 3,
        }
    }

    fn dims_text(self) -> &'static str {
        match self {
            TheoremId::Lemma => "n >= 2",
            TheoremId::T2 | TheoremId::C2 => "n in {3, 4}",
            TheoremId::T3 | TheoremId::C3 => "n = 5",
            TheoremId::T5 => "n = 4",
            TheoremId::C6 => "n >= 4",
            _ => "n >= 3",
        }
    }
}

impl std::str::FromStr for TheoremId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TheoremId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| format!("unknown theorem id `{s}`"))
    }
}

impl std::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TheoremError {
    #[error("{id} requires dimension {expected}, got {n}")]
    InadmissibleDimension {
        id: TheoremId,
        n: usize,
        expected: String,
    },
    #[error("{id} needs {what} in the scenario")]
    MissingIngredient { id: TheoremId, what: String },
    #[error("the divergence check requires all axes periodic")]
    NonPeriodicAxis,
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Integrability(#[from] IntegrabilityError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisStatus {
    VerifiedNumerically,
    Declared,
    Violated,
    Inconclusive,
}

impl HypothesisStatus {
    pub fn name(self) -> &'static str {
        match self {
            HypothesisStatus::VerifiedNumerically => "verified_numerically",
            HypothesisStatus::Declared => "declared",
            HypothesisStatus::Violated => "violated",
            HypothesisStatus::Inconclusive => "inconclusive",
        }
    }

    /// Ordering used by the tolerance-monotonicity property: tightening a
    /// tolerance may only move a hypothesis down this ranking.
    pub fn rank(self) -> u8 {
        match self {
            HypothesisStatus::VerifiedNumerically | HypothesisStatus::Declared => 2,
            HypothesisStatus::Inconclusive => 1,
            HypothesisStatus::Violated => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisRecord {
    pub name: String,
    pub status: HypothesisStatus,
    /// Numeric summary, e.g. the grid minimum of a sign condition.
    pub evidence: String,
    /// Violated records carry the offending point.
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConclusionStatus {
    HoldsOnGrid,
    NotApplicable,
    Inconclusive,
    Contradiction,
}

impl ConclusionStatus {
    pub fn name(self) -> &'static str {
        match self {
            ConclusionStatus::HoldsOnGrid => "holds_on_grid",
            ConclusionStatus::NotApplicable => "not_applicable",
            ConclusionStatus::Inconclusive => "inconclusive",
            ConclusionStatus::Contradiction => "CONTRADICTION",
        }
    }
}

/// Conclusion-side evidence: mapping class and/or curvature magnitudes.
#[derive(Debug, Clone, Default)]
pub struct ConclusionEvidence {
    pub mapping: Option<MappingClass>,
    pub max_abs_s: Option<f64>,
    pub max_abs_sbar: Option<f64>,
    pub harmonicity: Option<HarmonicityClass>,
    pub phi_spread: Option<f64>,
    pub phi_absmax: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TheoremVerdict {
    pub id: TheoremId,
    pub n: usize,
    pub hypotheses: Vec<HypothesisRecord>,
    pub conclusion_status: ConclusionStatus,
    pub conclusion: ConclusionEvidence,
}

/// Which L^p checks the scenario requests, by quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpRequest {
    pub quantity: LpQuantity,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpQuantity {
    Sigma,
    Lambda,
    U,
    GradSigma,
    Volume,
}

impl LpQuantity {
    pub fn name(self) -> &'static str {
        match self {
            LpQuantity::Sigma => "sigma",
            LpQuantity::Lambda => "lambda",
            LpQuantity::U => "u",
            LpQuantity::GradSigma => "grad_sigma",
            LpQuantity::Volume => "volume",
        }
    }
}

impl std::str::FromStr for LpQuantity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "sigma" => LpQuantity::Sigma,
            "lambda" => LpQuantity::Lambda,
            "u" => LpQuantity::U,
            "grad_sigma" => LpQuantity::GradSigma,
            "volume" => LpQuantity::Volume,
            other => return Err(format!("unknown lp quantity `{other}`")),
        })
    }
}

/// Everything a theorem check may consume. For the lemma the test function
/// is `phi` when given, otherwise the deformation's sigma.
#[derive(Clone)]
pub struct TheoremScenario<'a> {
    pub model: &'a ManifoldModel,
    pub deformation: Option<&'a ConformalDeformation>,
    pub phi: Option<&'a ScalarExpression>,
    pub lp: Vec<LpRequest>,
    pub grid: &'a Grid,
    pub exhaustion: ExhaustionSpec,
    pub tol_identity: f64,
    pub tol_class: f64,
}

impl<'a> TheoremScenario<'a> {
    fn deformation(&self, id: TheoremId) -> Result<&'a ConformalDeformation, TheoremError> {
        self.deformation
            .ok_or_else(|| TheoremError::MissingIngredient {
                id,
                what: "a conformal deformation".into(),
            })
    }

    fn lemma_phi(&self, id: TheoremId) -> Result<&'a ScalarExpression, TheoremError> {
        if let Some(phi) = self.phi {
            return Ok(phi);
        }
        self.deformation
            .map(|d| d.sigma())
            .ok_or_else(|| TheoremError::MissingIngredient {
                id,
                what: "a test function (phi or a deformation)".into(),
            })
    }

    fn ps(&self, quantity: LpQuantity) -> Vec<f64> {
        self.lp
            .iter()
            .filter(|r| r.quantity == quantity)
            .map(|r| r.p)
            .collect()
    }
}

// ---- shared hypothesis builders -------------------------------------------

fn fmt_point(p: &[f64]) -> String {
    let coords: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
    format!("({})", coords.join(" "))
}

fn completeness_record(model: &ManifoldModel) -> HypothesisRecord {
    let inherited = if model.flags_inherited {
        " (inherited, unverified)"
    } else {
        ""
    };
    if model.declared_complete {
        HypothesisRecord {
            name: "(M,g) complete".into(),
            status: HypothesisStatus::Declared,
            evidence: format!("declared by model{inherited}"),
            witness: None,
        }
    } else {
        HypothesisRecord {
            name: "(M,g) complete".into(),
            status: HypothesisStatus::Violated,
            evidence: format!("model declares non-complete{inherited}"),
            witness: None,
        }
    }
}

/// Pointwise sign condition `values[i] >= -tol` over the grid.
fn sign_record(name: &str, values: &[f64], grid: &Grid, tol: f64) -> HypothesisRecord {
    let mut min = f64::INFINITY;
    let mut argmin = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < min {
            min = v;
            argmin = i;
        }
    }
    if min >= -tol {
        HypothesisRecord {
            name: name.into(),
            status: HypothesisStatus::VerifiedNumerically,
            evidence: format!("grid min {min:e}"),
            witness: None,
        }
    } else {
        HypothesisRecord {
            name: name.into(),
            status: HypothesisStatus::Violated,
            evidence: format!("grid min {min:e} at {}", fmt_point(grid.point(argmin))),
            witness: Some(grid.point(argmin).to_vec()),
        }
    }
}

/// Map an exhaustion trend onto a hypothesis status. A diverging trend
/// refutes the integral only when the window is the whole manifold in
/// spirit (declared finite volume); on declared-infinite-volume models it
/// stays inconclusive.
fn integral_record(
    name: &str,
    report: &IntegrabilityReport,
    model: &ManifoldModel,
) -> HypothesisRecord {
    let last = report.partials.last().copied().unwrap_or(f64::NAN);
    let summary = format!(
        "exhaustion {} after {} stages, last partial {last:e}",
        report.verdict.name(),
        report.partials.len()
    );
    match report.verdict {
        IntegrabilityVerdict::Finite => HypothesisRecord {
            name: name.into(),
            status: HypothesisStatus::VerifiedNumerically,
            evidence: format!(
                "{summary}, extrapolated {:e}",
                report.extrapolated_value.unwrap_or(last)
            ),
            witness: None,
        },
        IntegrabilityVerdict::Inconclusive => HypothesisRecord {
            name: name.into(),
            status: HypothesisStatus::Inconclusive,
            evidence: summary,
            witness: None,
        },
        IntegrabilityVerdict::Diverging => {
            if model.declared_infinite_volume {
                HypothesisRecord {
                    name: name.into(),
                    status: HypothesisStatus::Inconclusive,
                    evidence: format!(
                        "{summary}; window trend diverging on a declared-infinite-volume model, global integral undecidable from the chart"
                    ),
                    witness: None,
                }
            } else {
                HypothesisRecord {
                    name: name.into(),
                    status: HypothesisStatus::Violated,
                    evidence: summary,
                    witness: report.max_integrand_point.clone(),
                }
            }
        }
    }
}

/// Existential `quantity in L^p for some p` over the scenario's p list.
/// No passing p means inconclusive (the list cannot exhaust the existential),
/// per the declared-semantics of the checks.
fn existential_lp_record(name: &str, outcomes: &[(f64, HypothesisRecord)]) -> HypothesisRecord {
    if let Some((p, rec)) = outcomes
        .iter()
        .find(|(_, r)| r.status == HypothesisStatus::VerifiedNumerically)
    {
        return HypothesisRecord {
            name: name.into(),
            status: HypothesisStatus::VerifiedNumerically,
            evidence: format!("p = {p}: {}", rec.evidence),
            witness: None,
        };
    }
    let detail: Vec<String> = outcomes
        .iter()
        .map(|(p, r)| format!("p = {p}: {}", r.status.name()))
        .collect();
    HypothesisRecord {
        name: name.into(),
        status: HypothesisStatus::Inconclusive,
        evidence: format!(
            "no passing p among checked [{}]; the existential is not exhausted",
            detail.join("; ")
        ),
        witness: None,
    }
}

/// Curvature pair (s, sbar) plus sigma and lambda samples over the grid.
struct PairSamples {
    s: Vec<f64>,
    sbar: Vec<f64>,
    sigma: Vec<f64>,
    lambda: Vec<f64>,
}

fn pair_samples(
    model: &ManifoldModel,
    def: &ConformalDeformation,
    grid: &Grid,
) -> Result<PairSamples, TheoremError> {
    let rescaled = conformal::rescale_metric(model, def)?;
    let rows: Vec<Result<(f64, f64, f64, f64), ConformalError>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let s = curvature::scalar_curvature(model, x)?;
            let sbar = curvature::scalar_curvature(&rescaled, x)?;
            let sigma = def.sigma().evaluate(x)?;
            Ok((s, sbar, sigma, sigma.exp()))
        })
        .collect();
    let mut out = PairSamples {
        s: Vec::with_capacity(grid.len()),
        sbar: Vec::with_capacity(grid.len()),
        sigma: Vec::with_capacity(grid.len()),
        lambda: Vec::with_capacity(grid.len()),
    };
    for (node, row) in rows.into_iter().enumerate() {
        let (s, sbar, sigma, lambda) = row.map_err(|e| ConformalError::AtNode {
            node,
            source: Box::new(e),
        })?;
        out.s.push(s);
        out.sbar.push(sbar);
        out.sigma.push(sigma);
        out.lambda.push(lambda);
    }
    Ok(out)
}

fn conharmonic_record(
    model: &ManifoldModel,
    def: &ConformalDeformation,
    grid: &Grid,
    tol: f64,
) -> Result<HypothesisRecord, TheoremError> {
    let residuals: Vec<Result<f64, ConformalError>> = (0..grid.len())
        .into_par_iter()
        .map(|i| conformal::identity_residual(IdentityId::Eq31, model, def, grid.point(i)))
        .collect();
    let mut max = 0.0f64;
    let mut argmax = 0;
    for (node, r) in residuals.into_iter().enumerate() {
        let r = r
            .map_err(|e| ConformalError::AtNode {
                node,
                source: Box::new(e),
            })?
            .abs();
        if r > max {
            max = r;
            argmax = node;
        }
    }
    Ok(if max <= tol {
        HypothesisRecord {
            name: "conharmonic: lap sigma = -((n-2)/2)|grad sigma|^2".into(),
            status: HypothesisStatus::VerifiedNumerically,
            evidence: format!("max |EQ_3_1 residual| {max:e}"),
            witness: None,
        }
    } else {
        HypothesisRecord {
            name: "conharmonic: lap sigma = -((n-2)/2)|grad sigma|^2".into(),
            status: HypothesisStatus::Violated,
            evidence: format!(
                "max |EQ_3_1 residual| {max:e} at {}",
                fmt_point(grid.point(argmax))
            ),
            witness: Some(grid.point(argmax).to_vec()),
        }
    })
}

fn ricci_record(
    model: &ManifoldModel,
    grid: &Grid,
    tol: f64,
) -> Result<HypothesisRecord, TheoremError> {
    let per_node: Vec<Result<f64, CalculusError>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let (ricci, _) = curvature::ricci_scalar_at(model, x)?;
            let at = model.metric_at(x)?;
            linalg::min_generalized_eigenvalue(at.n, &ricci, &at.matrix).map_err(|e| {
                CalculusError::Geometry(GeometryError::NotSpd {
                    point: x.to_vec(),
                    order: e.order,
                    minor: e.minor,
                })
            })
        })
        .collect();
    let values = calculus::collect_ordered(per_node)?;
    let mut min = f64::INFINITY;
    let mut argmin = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < min {
            min = v;
            argmin = i;
        }
    }
    Ok(if min >= -tol {
        HypothesisRecord {
            name: "Ric >= 0".into(),
            status: HypothesisStatus::VerifiedNumerically,
            evidence: format!("min Ricci eigenvalue {min:e}"),
            witness: None,
        }
    } else {
        HypothesisRecord {
            name: "Ric >= 0".into(),
            status: HypothesisStatus::Violated,
            evidence: format!(
                "min Ricci eigenvalue {min:e} at {}",
                fmt_point(grid.point(argmin))
            ),
            witness: Some(grid.point(argmin).to_vec()),
        }
    })
}

// ---- conclusion helpers -----------------------------------------------------

struct ConclusionCheck {
    satisfied: bool,
    evidence: ConclusionEvidence,
}

fn mapping_conclusion(
    def: &ConformalDeformation,
    grid: &Grid,
    tol_class: f64,
    require_isometric: bool,
) -> Result<ConclusionCheck, TheoremError> {
    let mapping = classify_mapping(def, grid, tol_class)?;
    let satisfied = if require_isometric {
        mapping.tag == conformal::MappingTag::Isometric
    } else {
        mapping.is_homothetic()
    };
    Ok(ConclusionCheck {
        satisfied,
        evidence: ConclusionEvidence {
            mapping: Some(mapping),
            ..Default::default()
        },
    })
}

fn flat_pair_conclusion(samples: &PairSamples, tol: f64) -> (bool, f64, f64) {
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let ms = max_abs(&samples.s);
    let msb = max_abs(&samples.sbar);
    (ms <= tol && msb <= tol, ms, msb)
}

// ---- the verdict engine -----------------------------------------------------

/// Check one statement against a scenario.
pub fn check(id: TheoremId, scn: &TheoremScenario<'_>) -> Result<TheoremVerdict, TheoremError> {
    let n = scn.model.dimension();
    if !id.dims_admissible(n) {
        return Err(TheoremError::InadmissibleDimension {
            id,
            n,
            expected: id.dims_text().into(),
        });
    }
    match id {
        TheoremId::Lemma => check_lemma(scn),
        TheoremId::T1 => check_t1_family(id, scn, false),
        TheoremId::C1 => check_t1_family(id, scn, true),
        TheoremId::T2 | TheoremId::T3 | TheoremId::T4 => check_sign_lp_family(id, scn, false),
        TheoremId::C2 | TheoremId::C3 | TheoremId::C4 => check_sign_lp_family(id, scn, true),
        TheoremId::T5 => check_t5(scn),
        TheoremId::C5 => check_c5(scn),
        TheoremId::C6 => check_c6(scn),
    }
}

fn assemble(
    id: TheoremId,
    n: usize,
    hypotheses: Vec<HypothesisRecord>,
    conclusion: impl FnOnce() -> Result<ConclusionCheck, TheoremError>,
) -> Result<TheoremVerdict, TheoremError> {
    let any_violated = hypotheses
        .iter()
        .any(|h| h.status == HypothesisStatus::Violated);
    let any_inconclusive = hypotheses
        .iter()
        .any(|h| h.status == HypothesisStatus::Inconclusive);
    if any_violated {
        return Ok(TheoremVerdict {
            id,
            n,
            hypotheses,
            conclusion_status: ConclusionStatus::NotApplicable,
            conclusion: ConclusionEvidence::default(),
        });
    }
    if any_inconclusive {
        return Ok(TheoremVerdict {
            id,
            n,
            hypotheses,
            conclusion_status: ConclusionStatus::Inconclusive,
            conclusion: ConclusionEvidence::default(),
        });
    }
    let checked = conclusion()?;
    Ok(TheoremVerdict {
        id,
        n,
        hypotheses,
        conclusion_status: if checked.satisfied {
            ConclusionStatus::HoldsOnGrid
        } else {
            ConclusionStatus::Contradiction
        },
        conclusion: checked.evidence,
    })
}

fn check_lemma(scn: &TheoremScenario<'_>) -> Result<TheoremVerdict, TheoremError> {
    let id = TheoremId::Lemma;
    let phi = scn.lemma_phi(id)?;
    let n = scn.model.dimension();
    let mut hyps = vec![completeness_record(scn.model)];

    let class = calculus::classify_harmonicity(scn.model, phi, scn.grid, scn.tol_identity)?;
    let superharmonic = matches!(
        class.tag,
        HarmonicityTag::Superharmonic | HarmonicityTag::Harmonic
    );
    hyps.push(HypothesisRecord {
        name: "phi superharmonic (on sampled grid)".into(),
        status: if superharmonic {
            HypothesisStatus::VerifiedNumerically
        } else {
            HypothesisStatus::Violated
        },
        evidence: format!(
            "classified {} with lap range [{:e}, {:e}]",
            class.tag.name(),
            class.witness_min,
            class.witness_max
        ),
        witness: None,
    });

    // Statement selection: the L^p route is engaged when the scenario lists
    // sigma/phi exponents; otherwise the gradient-L^1 route runs.
    let ps: Vec<f64> = scn
        .ps(LpQuantity::Sigma)
        .into_iter()
        .filter(|&p| p > 1.0)
        .collect();
    let lp_route = !ps.is_empty();

    let phi_values = sample_values(phi, scn.grid)?;
    let (phi_min, phi_max) = min_max(&phi_values);

    if lp_route {
        // negated max: phi <= 0 means -phi_max >= -tol
        let neg: Vec<f64> = phi_values.iter().map(|v| -v).collect();
        hyps.push(sign_record("phi <= 0", &neg, scn.grid, scn.tol_class));
        let mut outcomes = Vec::new();
        for p in ps {
            let report = integrability::lp_report(scn.model, phi, p, &scn.exhaustion)?;
            outcomes.push((p, integral_record("phi in L^p", &report, scn.model)));
        }
        hyps.push(existential_lp_record(
            "phi in L^p for some 1 < p < infinity",
            &outcomes,
        ));
    } else {
        let report = integrability::grad_l1_report(scn.model, phi, &scn.exhaustion)?;
        hyps.push(integral_record("|grad phi| in L^1", &report, scn.model));
    }

    let infinite_volume = scn.model.declared_infinite_volume;
    assemble(id, n, hyps, move || {
        if lp_route {
            // conclusion: phi constant; on infinite volume, phi = 0
            let spread = phi_max - phi_min;
            let absmax = phi_min.abs().max(phi_max.abs());
            let constant = spread <= scn.tol_class;
            let satisfied = if infinite_volume {
                constant && absmax <= scn.tol_class
            } else {
                constant
            };
            Ok(ConclusionCheck {
                satisfied,
                evidence: ConclusionEvidence {
                    phi_spread: Some(spread),
                    phi_absmax: Some(absmax),
                    notes: vec![if infinite_volume {
                        "conclusion: phi constant, and phi = 0 on declared infinite volume".into()
                    } else {
                        "conclusion: phi constant".into()
                    }],
                    ..Default::default()
                },
            })
        } else {
            let class = calculus::classify_harmonicity(scn.model, phi, scn.grid, scn.tol_identity)?;
            let satisfied = class.tag == HarmonicityTag::Harmonic;
            Ok(ConclusionCheck {
                satisfied,
                evidence: ConclusionEvidence {
                    harmonicity: Some(class),
                    notes: vec!["conclusion: phi harmonic (on sampled grid)".into()],
                    ..Default::default()
                },
            })
        }
    })
}

/// T1 (sign `s <= e^{2 sigma} sbar`) and C1 (signs `s <= 0`, `sbar >= 0`),
/// each with the route disjunction: (i) `|grad sigma|` integrable, or
/// (ii) `sigma <= 0` and `sigma in L^p`.
fn check_t1_family(
    id: TheoremId,
    scn: &TheoremScenario<'_>,
    is_c1: bool,
) -> Result<TheoremVerdict, TheoremError> {
    let def = scn.deformation(id)?;
    let n = scn.model.dimension();
    let samples = pair_samples(scn.model, def, scn.grid)?;
    let mut hyps = vec![completeness_record(scn.model)];

    if is_c1 {
        let neg_s: Vec<f64> = samples.s.iter().map(|v| -v).collect();
        hyps.push(sign_record("s <= 0", &neg_s, scn.grid, scn.tol_identity));
        hyps.push(sign_record(
            "sbar >= 0",
            &samples.sbar,
            scn.grid,
            scn.tol_identity,
        ));
    } else {
        let margin: Vec<f64> = (0..scn.grid.len())
            .map(|i| (2.0 * samples.sigma[i]).exp() * samples.sbar[i] - samples.s[i])
            .collect();
        hyps.push(sign_record(
            "s <= e^{2 sigma} sbar",
            &margin,
            scn.grid,
            scn.tol_identity,
        ));
    }

    let ps: Vec<f64> = scn
        .ps(LpQuantity::Sigma)
        .into_iter()
        .filter(|&p| p > 1.0)
        .collect();
    let grad_requested = scn.lp.iter().any(|r| r.quantity == LpQuantity::GradSigma);
    let use_lp_route = !ps.is_empty();
    let use_grad_route = grad_requested || !use_lp_route;

    let mut route_records = Vec::new();
    if use_grad_route {
        let report = integrability::grad_l1_report(scn.model, def.sigma(), &scn.exhaustion)?;
        route_records.push(integral_record(
            "route (i): |grad sigma| in L^1",
            &report,
            scn.model,
        ));
    }
    let mut lp_route_verified = false;
    if use_lp_route {
        let neg: Vec<f64> = samples.sigma.iter().map(|v| -v).collect();
        let nonpos = sign_record("sigma <= 0", &neg, scn.grid, scn.tol_class);
        let mut outcomes = Vec::new();
        for p in &ps {
            let report = integrability::lp_report(scn.model, def.sigma(), *p, &scn.exhaustion)?;
            outcomes.push((*p, integral_record("sigma in L^p", &report, scn.model)));
        }
        let lp_rec = existential_lp_record("sigma in L^p for some 1 < p < infinity", &outcomes);
        // route (ii) = conjunction of non-positivity and the L^p condition
        let status = match (nonpos.status, lp_rec.status) {
            (HypothesisStatus::Violated, _) | (_, HypothesisStatus::Violated) => {
                HypothesisStatus::Violated
            }
            (HypothesisStatus::Inconclusive, _) | (_, HypothesisStatus::Inconclusive) => {
                HypothesisStatus::Inconclusive
            }
            _ => HypothesisStatus::VerifiedNumerically,
        };
        lp_route_verified = status == HypothesisStatus::VerifiedNumerically;
        route_records.push(HypothesisRecord {
            name: "route (ii): sigma <= 0 and sigma in L^p".into(),
            status,
            evidence: format!("{}; {}", nonpos.evidence, lp_rec.evidence),
            witness: nonpos.witness,
        });
    }
    // Disjunction over the engaged routes.
    let best = route_records
        .iter()
        .map(|r| r.status.rank())
        .max()
        .unwrap_or(0);
    let combined_status = if route_records
        .iter()
        .any(|r| r.status == HypothesisStatus::VerifiedNumerically)
    {
        HypothesisStatus::VerifiedNumerically
    } else if best >= 1 {
        HypothesisStatus::Inconclusive
    } else {
        HypothesisStatus::Violated
    };
    let evidence = route_records
        .iter()
        .map(|r| format!("{} -> {}", r.name, r.status.name()))
        .collect::<Vec<_>>()
        .join("; ");
    let witness = route_records
        .iter()
        .find_map(|r| r.witness.clone())
        .filter(|_| combined_status == HypothesisStatus::Violated);
    hyps.push(HypothesisRecord {
        name: "integrability route (i) or (ii)".into(),
        status: combined_status,
        evidence,
        witness,
    });

    // Isometric refinement: route (ii) verified on declared infinite volume.
    let require_isometric = lp_route_verified && scn.model.declared_infinite_volume;
    let tol_class = scn.tol_class;
    let grid = scn.grid;
    assemble(id, n, hyps, move || {
        let mut out = mapping_conclusion(def, grid, tol_class, require_isometric)?;
        if is_c1 {
            let (flat_ok, ms, msb) = flat_pair_conclusion(&samples, scn.tol_identity);
            out.satisfied = out.satisfied && flat_ok;
            out.evidence.max_abs_s = Some(ms);
            out.evidence.max_abs_sbar = Some(msb);
            out.evidence
                .notes
                .push("conclusion: homothetic and s = sbar = 0".into());
        } else {
            out.evidence.notes.push("conclusion: homothetic".into());
        }
        if require_isometric {
            out.evidence
                .notes
                .push("route (ii) on declared infinite volume: isometric required".into());
        }
        Ok(out)
    })
}

/// T2/T3/T4 (sign `s >= lambda^2 sbar` + an L^p condition on lambda or u)
/// and C2/C3/C4 (signs `s >= 0`, `sbar <= 0` instead, conclusion adds
/// `s = sbar = 0`).
fn check_sign_lp_family(
    id: TheoremId,
    scn: &TheoremScenario<'_>,
    corollary: bool,
) -> Result<TheoremVerdict, TheoremError> {
    let def = scn.deformation(id)?;
    let n = scn.model.dimension();
    let samples = pair_samples(scn.model, def, scn.grid)?;
    let mut hyps = vec![completeness_record(scn.model)];

    if corollary {
        hyps.push(sign_record(
            "s >= 0",
            &samples.s,
            scn.grid,
            scn.tol_identity,
        ));
        let neg_sbar: Vec<f64> = samples.sbar.iter().map(|v| -v).collect();
        hyps.push(sign_record(
            "sbar <= 0",
            &neg_sbar,
            scn.grid,
            scn.tol_identity,
        ));
    } else {
        let margin: Vec<f64> = (0..scn.grid.len())
            .map(|i| {
                let l2 = samples.lambda[i] * samples.lambda[i];
                samples.s[i] - l2 * samples.sbar[i]
            })
            .collect();
        hyps.push(sign_record(
            "s >= lambda^2 sbar",
            &margin,
            scn.grid,
            scn.tol_identity,
        ));
    }

    // The integrand and admissible exponents differ per statement.
    let (quantity, hyp_name): (LpQuantity, &str) = match id {
        TheoremId::T2 | TheoremId::C2 | TheoremId::C6 => {
            (LpQuantity::Lambda, "lambda in L^p for some p != 1")
        }
        TheoremId::T3 | TheoremId::C3 => (
            LpQuantity::Lambda,
            "lambda in L^{2p} for some 1 < p < infinity",
        ),
        _ => (LpQuantity::U, "lambda^{(n-2)/2} in L^p for some p != 1"),
    };
    let double_exponent = matches!(id, TheoremId::T3 | TheoremId::C3);
    let ps: Vec<f64> = scn
        .ps(quantity)
        .into_iter()
        .filter(|&p| if double_exponent { p > 1.0 } else { p != 1.0 })
        .collect();
    if ps.is_empty() {
        return Err(TheoremError::MissingIngredient {
            id,
            what: format!("lp entries for quantity `{}`", quantity.name()),
        });
    }
    let subject: &ScalarExpression = match quantity {
        LpQuantity::Lambda => def.lambda(),
        _ => def.u().ok_or_else(|| TheoremError::MissingIngredient {
            id,
            what: "the u representation (n >= 3)".into(),
        })?,
    };
    let mut outcomes = Vec::new();
    for p in &ps {
        let exponent = if double_exponent { 2.0 * p } else { *p };
        let report = integrability::lp_report(scn.model, subject, exponent, &scn.exhaustion)?;
        outcomes.push((*p, integral_record("integral", &report, scn.model)));
    }
    hyps.push(existential_lp_record(hyp_name, &outcomes));

    let tol_class = scn.tol_class;
    let tol_identity = scn.tol_identity;
    let grid = scn.grid;
    assemble(id, n, hyps, move || {
        let mut out = mapping_conclusion(def, grid, tol_class, false)?;
        if corollary {
            let (flat_ok, ms, msb) = flat_pair_conclusion(&samples, tol_identity);
            out.satisfied = out.satisfied && flat_ok;
            out.evidence.max_abs_s = Some(ms);
            out.evidence.max_abs_sbar = Some(msb);
            out.evidence
                .notes
                .push("conclusion: homothetic and s = sbar = 0".into());
        } else {
            out.evidence.notes.push("conclusion: homothetic".into());
            if id == TheoremId::T3 {
                out.evidence.notes.push(
                    "the statement also asserts s = sbar = 0; that part is evaluated under the sign pair of C3 only"
                        .into(),
                );
            }
        }
        Ok(out)
    })
}

fn check_t5(scn: &TheoremScenario<'_>) -> Result<TheoremVerdict, TheoremError> {
    let id = TheoremId::T5;
    let def = scn.deformation(id)?;
    let n = scn.model.dimension();
    let hyps = vec![
        completeness_record(scn.model),
        conharmonic_record(scn.model, def, scn.grid, scn.tol_identity)?,
        ricci_record(scn.model, scn.grid, scn.tol_identity)?,
    ];
    let tol_class = scn.tol_class;
    let grid = scn.grid;
    assemble(id, n, hyps, move || {
        let mut out = mapping_conclusion(def, grid, tol_class, false)?;
        out.evidence.notes.push("conclusion: homothetic".into());
        Ok(out)
    })
}

fn check_c5(scn: &TheoremScenario<'_>) -> Result<TheoremVerdict, TheoremError> {
    let id = TheoremId::C5;
    let def = scn.deformation(id)?;
    let n = scn.model.dimension();
    let grad_report = integrability::grad_l1_report(scn.model, def.sigma(), &scn.exhaustion)?;
    let hyps = vec![
        completeness_record(scn.model),
        conharmonic_record(scn.model, def, scn.grid, scn.tol_identity)?,
        integral_record("|grad sigma| in L^1", &grad_report, scn.model),
    ];
    let tol_class = scn.tol_class;
    let grid = scn.grid;
    assemble(id, n, hyps, move || {
        let mut out = mapping_conclusion(def, grid, tol_class, false)?;
        let spread = out.evidence.mapping.as_ref().map(|m| m.sigma_spread);
        out.satisfied = out.satisfied && spread.is_some_and(|s| s <= tol_class);
        out.evidence.phi_spread = spread;
        out.evidence
            .notes
            .push("conclusion: sigma constant, f homothetic".into());
        Ok(out)
    })
}

fn check_c6(scn: &TheoremScenario<'_>) -> Result<TheoremVerdict, TheoremError> {
    let id = TheoremId::C6;
    let def = scn.deformation(id)?;
    let n = scn.model.dimension();
    let ps: Vec<f64> = scn
        .ps(LpQuantity::Lambda)
        .into_iter()
        .filter(|&p| p != 1.0)
        .collect();
    if ps.is_empty() {
        return Err(TheoremError::MissingIngredient {
            id,
            what: "lp entries for quantity `lambda`".into(),
        });
    }
    let mut outcomes = Vec::new();
    for p in &ps {
        let report = integrability::lp_report(scn.model, def.lambda(), *p, &scn.exhaustion)?;
        outcomes.push((*p, integral_record("integral", &report, scn.model)));
    }
    let hyps = vec![
        completeness_record(scn.model),
        conharmonic_record(scn.model, def, scn.grid, scn.tol_identity)?,
        existential_lp_record("lambda in L^p for some p != 1", &outcomes),
    ];
    let tol_class = scn.tol_class;
    let grid = scn.grid;
    assemble(id, n, hyps, move || {
        let mut out = mapping_conclusion(def, grid, tol_class, false)?;
        out.evidence.notes.push("conclusion: homothetic".into());
        Ok(out)
    })
}

// ---- closed-manifold divergence ---------------------------------------------

/// Quadrature of `int lap phi dVol` over a fully periodic chart. For smooth
/// phi the uniform rule is spectrally accurate, so the value must sit at
/// rounding level; this is the mechanism behind the compact-case constancy
/// of one-signed-Laplacian functions.
pub fn closed_manifold_divergence_check(
    model: &ManifoldModel,
    phi: &ScalarExpression,
    grid: &Grid,
) -> Result<f64, TheoremError> {
    if !model.chart.all_periodic() {
        return Err(TheoremError::NonPeriodicAxis);
    }
    let samples: Vec<Result<f64, CalculusError>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let lap = calculus::laplace_beltrami(model, phi, x)?;
            Ok(lap * model.metric_at(x)?.sqrt_det * grid.weight(i))
        })
        .collect();
    let values = calculus::collect_ordered(samples)?;
    Ok(linalg::pairwise_sum(&values))
}

// ---- small helpers ----------------------------------------------------------

fn sample_values(phi: &ScalarExpression, grid: &Grid) -> Result<Vec<f64>, TheoremError> {
    let values: Vec<Result<f64, crate::expr::EvalError>> = (0..grid.len())
        .into_par_iter()
        .map(|i| phi.evaluate(grid.point(i)))
        .collect();
    let mut out = Vec::with_capacity(values.len());
    for (node, v) in values.into_iter().enumerate() {
        out.push(v.map_err(|e| {
            TheoremError::Calculus(CalculusError::AtNode {
                node,
                source: Box::new(CalculusError::Eval(e)),
            })
        })?);
    }
    Ok(out)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

#[cfg(test)]
mod tests;
