//! Scenario driver: load a declarative scenario, run the requested identity,
//! integrability, and theorem checks, and emit machine-readable reports plus
//! a human table.
//!
//! Exit-code contract: 0 when every identity verdict is `holds` or
//! `fails_as_predicted` and no theorem verdict is `CONTRADICTION`; 1 on any
//! check failure; 2 on configuration or parse errors.

pub mod report;
pub mod scenario;

pub use report::{to_csv, to_jsonl, to_table, ReportRow, CSV_HEADER};
pub use scenario::{load_file, load_str, OutputSection, RunPlan, ScenarioError};

use crate::conformal::{self, identity_reports, ConformalDeformation, IdentityId, IdentityReport};
use crate::curvature;
use crate::expr::{self, ScalarExpression};
use crate::geometry::{self, model_zoo, Grid, ManifoldModel, ZooModel, ZooParams};
use crate::integrability::{self, IntegrabilityReport};
use crate::linalg::pairwise_sum;
use crate::theorems::{self, LpQuantity, LpRequest, TheoremScenario, TheoremVerdict};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Configuration or parse failure; exit code 2.
    #[error(transparent)]
    Config(#[from] ScenarioError),
    /// A check failed to execute; exit code 1.
    #[error("check execution failed: {0}")]
    Execution(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Execution(_) => 1,
        }
    }
}

fn execution(context: impl std::fmt::Display, e: impl std::fmt::Display) -> RunError {
    RunError::Execution(format!("{context}: {e}"))
}

/// Everything one scenario run produced.
pub struct RunOutcome {
    pub rows: Vec<ReportRow>,
    pub csv: String,
    pub jsonl: String,
    pub table: String,
    pub exit_code: i32,
    pub output: Option<OutputSection>,
}

pub fn run_scenario_file(path: &str) -> Result<RunOutcome, RunError> {
    let plan = load_file(path)?;
    run_plan(&plan)
}

pub fn run_scenario_str(text: &str) -> Result<RunOutcome, RunError> {
    let plan = load_str(text)?;
    run_plan(&plan)
}

pub fn run_plan(plan: &RunPlan) -> Result<RunOutcome, RunError> {
    let mut rows = Vec::new();

    if plan.model.known_scalar_curvature.is_some() {
        rows.push(curvature_row(&plan.model, &plan.grid, plan.tol_identity)?);
    }

    if !plan.identities.is_empty() {
        let reports = identity_reports(
            &plan.identities,
            &plan.model,
            &plan.deformation,
            &plan.grid,
            plan.tol_identity,
        )
        .map_err(|e| execution("identities", e))?;
        rows.extend(reports.iter().map(identity_row));
    }

    for request in &plan.lp {
        rows.push(lp_row(plan, request)?);
    }

    for &id in &plan.theorems {
        let scn = TheoremScenario {
            model: &plan.model,
            deformation: Some(&plan.deformation),
            phi: None,
            lp: plan.lp.clone(),
            grid: &plan.grid,
            exhaustion: plan.exhaustion.clone(),
            tol_identity: plan.tol_identity,
            tol_class: plan.tol_class,
        };
        let verdict = theorems::check(id, &scn).map_err(|e| execution(id, e))?;
        rows.push(theorem_row(&verdict, plan.grid.len()));
    }

    let failed = rows.iter().any(|r| {
        ((r.kind == "identity" || r.kind == "curvature") && r.verdict == "fails_unexpectedly")
            || (r.kind == "theorem" && r.verdict == "CONTRADICTION")
    });
    Ok(RunOutcome {
        csv: to_csv(&rows),
        jsonl: to_jsonl(&rows),
        table: to_table(&rows),
        exit_code: if failed { 1 } else { 0 },
        output: plan.output.clone(),
        rows,
    })
}

/// Pipeline scalar curvature against the model's catalog value.
fn curvature_row(model: &ManifoldModel, grid: &Grid, tol: f64) -> Result<ReportRow, RunError> {
    let diffs: Vec<Result<(f64, f64), RunError>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let s = curvature::scalar_curvature(model, x).map_err(|e| execution("curvature", e))?;
            let known = model
                .known_scalar_curvature_at(x)
                .expect("checked by caller")
                .map_err(|e| execution("known curvature", e))?;
            Ok(((s - known).abs(), known.abs()))
        })
        .collect();
    let mut max_abs = 0.0f64;
    let mut known_scale = 0.0f64;
    let mut all = Vec::with_capacity(grid.len());
    for d in diffs {
        let (diff, known) = d?;
        max_abs = max_abs.max(diff);
        known_scale = known_scale.max(known);
        all.push(diff);
    }
    let mean = pairwise_sum(&all) / all.len() as f64;
    let tol_eff = tol * (1.0 + known_scale);
    Ok(ReportRow {
        kind: "curvature".into(),
        id: "SCALAR_VS_KNOWN".into(),
        n: model.dimension(),
        grid: grid.len(),
        max_abs_residual: Some(max_abs),
        mean_abs_residual: Some(mean),
        predicted_gap: None,
        verdict: if max_abs <= tol_eff {
            "holds"
        } else {
            "fails_unexpectedly"
        }
        .into(),
        notes: format!("pipeline scalar curvature vs catalog value; tol_eff={tol_eff:e}"),
    })
}

fn identity_row(r: &IdentityReport) -> ReportRow {
    ReportRow {
        kind: "identity".into(),
        id: r.id.name().into(),
        n: r.n,
        grid: r.grid_size,
        max_abs_residual: Some(r.max_abs_residual),
        mean_abs_residual: Some(r.mean_abs_residual),
        predicted_gap: r.predicted_gap_max,
        verdict: r.verdict.name().into(),
        notes: format!("tol_eff={:e}", r.tolerance_effective),
    }
}

fn lp_row(plan: &RunPlan, request: &LpRequest) -> Result<ReportRow, RunError> {
    let model = &plan.model;
    let def = &plan.deformation;
    let context = format!("lp {}:p={}", request.quantity.name(), request.p);
    let report: IntegrabilityReport = match request.quantity {
        LpQuantity::Sigma => {
            integrability::lp_report(model, def.sigma(), request.p, &plan.exhaustion)
        }
        LpQuantity::Lambda => {
            integrability::lp_report(model, def.lambda(), request.p, &plan.exhaustion)
        }
        LpQuantity::U => {
            let u = def
                .u()
                .ok_or_else(|| RunError::Execution("quantity `u` needs dimension >= 3".into()))?;
            integrability::lp_report(model, u, request.p, &plan.exhaustion)
        }
        LpQuantity::GradSigma => {
            integrability::grad_lp_report(model, def.sigma(), request.p, &plan.exhaustion)
        }
        LpQuantity::Volume => integrability::volume_report(model, &plan.exhaustion),
    }
    .map_err(|e| execution(&context, e))?;
    Ok(integrability_row(model, plan.grid.len(), request, &report))
}

fn integrability_row(
    model: &ManifoldModel,
    grid_len: usize,
    request: &LpRequest,
    report: &IntegrabilityReport,
) -> ReportRow {
    let last = report.partials.last().copied().unwrap_or(f64::NAN);
    let mut notes = format!(
        "integrand={}; stages={}; last_partial={:e}",
        report.quantity,
        report.partials.len(),
        last
    );
    if report.non_finite_integrand {
        notes.push_str("; non-finite integrand encountered");
    }
    ReportRow {
        kind: "integrability".into(),
        id: format!("{}:p={}", request.quantity.name(), request.p),
        n: model.dimension(),
        grid: grid_len,
        max_abs_residual: Some(last),
        mean_abs_residual: report.extrapolated_value,
        predicted_gap: None,
        verdict: report.verdict.name().into(),
        notes,
    }
}

fn theorem_row(verdict: &TheoremVerdict, grid_len: usize) -> ReportRow {
    let mut notes: Vec<String> = verdict
        .hypotheses
        .iter()
        .map(|h| format!("{}={}", h.name, h.status.name()))
        .collect();
    if let Some(mapping) = &verdict.conclusion.mapping {
        notes.push(format!(
            "mapping={} (spread={:e}; absmax={:e})",
            mapping.tag.name(),
            mapping.sigma_spread,
            mapping.sigma_absmax
        ));
    }
    if let (Some(s), Some(sbar)) = (
        verdict.conclusion.max_abs_s,
        verdict.conclusion.max_abs_sbar,
    ) {
        notes.push(format!("max|s|={s:e}; max|sbar|={sbar:e}"));
    }
    if let Some(h) = &verdict.conclusion.harmonicity {
        notes.push(format!("phi classified {} on sampled grid", h.tag.name()));
    }
    notes.extend(verdict.conclusion.notes.iter().cloned());
    ReportRow {
        kind: "theorem".into(),
        id: verdict.id.name().into(),
        n: verdict.n,
        grid: grid_len,
        max_abs_residual: None,
        mean_abs_residual: None,
        predicted_gap: None,
        verdict: verdict.conclusion_status.name().into(),
        notes: notes.join(" | "),
    }
}

// ---- zoo listing ------------------------------------------------------------

/// Catalogue table of the built-in models; stable ordering.
pub fn zoo_list() -> String {
    let mut out = String::from("model | completeness | volume | scalar curvature\n");
    out.push_str("euclidean | complete=yes | infinite_volume=yes | s = 0\n");
    out.push_str("sphere_stereographic | complete=yes | infinite_volume=no | s = n(n-1)/r^2\n");
    out.push_str("hyperbolic_ball | complete=yes | infinite_volume=yes | s = -n(n-1)\n");
    out.push_str("flat_torus | complete=yes | infinite_volume=no | s = 0\n");
    out.push_str("custom | complete=declared | infinite_volume=declared | s = user-supplied\n");
    out
}

// ---- identity sweep -----------------------------------------------------------

/// Residual-scaling CSV: one row per (identity, dimension) at the given
/// resolution. Autodiff residuals are resolution-independent up to rounding,
/// so rows at different `--grid` values trace flat lines.
pub fn identity_sweep(
    ids: &[IdentityId],
    model: ZooModel,
    dims: &[usize],
    resolution: usize,
) -> Result<String, RunError> {
    if resolution < 3 || resolution % 2 == 0 {
        return Err(RunError::Config(ScenarioError::Invalid {
            key: "--grid".into(),
            message: format!("resolution must be odd and >= 3, got {resolution}"),
        }));
    }
    let mut rows = Vec::new();
    for &id in ids {
        for &n in dims {
            let (base, def, note) = sweep_construction(model, n, id)?;
            let grid =
                geometry::grid(&base.chart, resolution).map_err(|e| execution("sweep grid", e))?;
            let report =
                conformal::identity_report(id, &base, &def, &grid, conformal::DEFAULT_IDENTITY_TOL)
                    .map_err(|e| execution(format!("{id} n={n}"), e))?;
            let mut row = identity_row(&report);
            row.grid = resolution;
            row.notes = format!("{}; {note}", row.notes);
            rows.push(row);
        }
    }
    Ok(to_csv(&rows))
}

/// The deformation each sweep measures: conharmonic family for the
/// conharmonic ids, the defining conformal factor for curved zoo targets,
/// and a quadratic lambda on flat models.
fn sweep_construction(
    model: ZooModel,
    n: usize,
    id: IdentityId,
) -> Result<(ManifoldModel, ConformalDeformation, String), RunError> {
    let radius_sq = (1..=n)
        .map(|i| format!("x{i}^2"))
        .collect::<Vec<_>>()
        .join(" + ");
    let conharmonic_ids = [
        IdentityId::Eq31,
        IdentityId::Eq32Paper,
        IdentityId::Eq32Derived,
    ];
    let euclidean = |hw: f64| -> Result<ManifoldModel, RunError> {
        model_zoo(
            ZooModel::Euclidean,
            n,
            &ZooParams {
                half_width: Some(hw),
                ..Default::default()
            },
        )
        .map_err(|e| execution("sweep model", e))
    };
    let parse_sigma = |text: &str| -> Result<ScalarExpression, RunError> {
        expr::parse(text, n).map_err(|e| execution("sweep deformation", e))
    };

    if conharmonic_ids.contains(&id) {
        let base = match model {
            ZooModel::FlatTorus => model_zoo(ZooModel::FlatTorus, n, &ZooParams::default())
                .map_err(|e| execution("sweep model", e))?,
            _ => euclidean(1.0)?,
        };
        let sigma = parse_sigma("log(2 + x1)")?.scaled(2.0 / (n as f64 - 2.0));
        let def = ConformalDeformation::from_sigma(n, sigma)
            .map_err(|e| execution("sweep deformation", e))?;
        return Ok((
            base,
            def,
            "conharmonic family sigma=(2/(n-2))*log(2+x1)".into(),
        ));
    }

    match model {
        ZooModel::Euclidean | ZooModel::FlatTorus => {
            let base = if model == ZooModel::FlatTorus {
                model_zoo(ZooModel::FlatTorus, n, &ZooParams::default())
                    .map_err(|e| execution("sweep model", e))?
            } else {
                euclidean(1.0)?
            };
            let def = ConformalDeformation::from_lambda(n, parse_sigma("1 + x1^2")?)
                .map_err(|e| execution("sweep deformation", e))?;
            Ok((base, def, "lambda=1+x1^2".into()))
        }
        ZooModel::HyperbolicBall => {
            let hw = geometry::HYPERBOLIC_CLIP_FACTOR / (n as f64).sqrt();
            let base = euclidean(hw)?;
            let sigma = parse_sigma(&format!("log(2/(1 - ({radius_sq})))"))?;
            let def = ConformalDeformation::from_sigma(n, sigma)
                .map_err(|e| execution("sweep deformation", e))?;
            Ok((base, def, "flat base to Poincare ball".into()))
        }
        ZooModel::SphereStereographic => {
            let base = euclidean(1.0)?;
            let sigma = parse_sigma(&format!("log(2/(1 + {radius_sq}))"))?;
            let def = ConformalDeformation::from_sigma(n, sigma)
                .map_err(|e| execution("sweep deformation", e))?;
            Ok((base, def, "flat base to unit round sphere".into()))
        }
        ZooModel::Custom => Err(RunError::Config(ScenarioError::Invalid {
            key: "--model".into(),
            message: "identity-sweep requires a named zoo model".into(),
        })),
    }
}
