//! Declarative scenario files: a documented TOML subset (tables, strings,
//! numbers, arrays, booleans) with a fixed key vocabulary.
//!
//! ```toml
//! [manifold]
//! model = "euclidean"        # euclidean | sphere_stereographic |
//!                            # hyperbolic_ball | flat_torus | custom
//! dimension = 3
//! radius = 1.0               # sphere only
//! half_width = 1.0
//! center = [0.0, 0.0, 0.0]
//! periodic = [false, false, false]   # custom only
//! entries = ["1", "0", ...]          # custom only (upper triangle or full)
//!
//! [deformation]              # exactly one of:
//! sigma = "0.5*x1"
//! # lambda = "1 + x1^2"
//! # u = "2 + x1"
//!
//! [checks]
//! identities = ["EQ_2_1"]
//! theorems = ["T1"]
//! lp = [{ quantity = "lambda", p = 2.0 }]
//!
//! [numeric]
//! grid = 9                   # odd, >= 3
//! tol_identity = 1e-8
//! tol_class = 1e-8
//! exhaustion_stages = 6
//!
//! [output]
//! format = "csv"             # csv | jsonl
//! path = "report.csv"
//! ```

use crate::conformal::{ConformalDeformation, IdentityId};
use crate::expr;
use crate::geometry::{self, Grid, ManifoldModel, ZooModel, ZooParams};
use crate::integrability::ExhaustionSpec;
use crate::theorems::{LpQuantity, LpRequest, TheoremId};
use serde::Deserialize;

/// Configuration-level failure: the scenario cannot even be attempted.
/// Maps to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scenario parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scenario key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    manifold: ManifoldSection,
    deformation: DeformationSection,
    checks: ChecksSection,
    #[serde(default)]
    numeric: NumericSection,
    #[serde(default)]
    output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldSection {
    model: String,
    dimension: usize,
    radius: Option<f64>,
    half_width: Option<f64>,
    center: Option<Vec<f64>>,
    periodic: Option<Vec<bool>>,
    entries: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeformationSection {
    sigma: Option<String>,
    lambda: Option<String>,
    u: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChecksSection {
    #[serde(default)]
    identities: Vec<String>,
    #[serde(default)]
    theorems: Vec<String>,
    #[serde(default)]
    lp: Vec<LpEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LpEntry {
    quantity: String,
    p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NumericSection {
    grid: usize,
    tol_identity: f64,
    tol_class: f64,
    exhaustion_stages: usize,
}

impl Default for NumericSection {
    fn default() -> Self {
        NumericSection {
            grid: 9,
            tol_identity: 1e-8,
            tol_class: 1e-8,
            exhaustion_stages: 6,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: String,
    pub path: String,
}

/// A validated, executable scenario.
#[derive(Debug)]
pub struct RunPlan {
    pub model: ManifoldModel,
    pub deformation: ConformalDeformation,
    pub identities: Vec<IdentityId>,
    pub theorems: Vec<TheoremId>,
    pub lp: Vec<LpRequest>,
    pub grid: Grid,
    pub tol_identity: f64,
    pub tol_class: f64,
    pub exhaustion: ExhaustionSpec,
    pub output: Option<OutputSection>,
}

pub fn load_file(path: &str) -> Result<RunPlan, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    load_str(&text)
}

pub fn load_str(text: &str) -> Result<RunPlan, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|span| text[..span.start.min(text.len())].lines().count().max(1))
            .unwrap_or(1);
        ScenarioError::Parse {
            line,
            message: e.message().to_owned(),
        }
    })?;
    build_plan(file)
}

fn build_plan(file: ScenarioFile) -> Result<RunPlan, ScenarioError> {
    let n = file.manifold.dimension;
    let kind: ZooModel = file
        .manifold
        .model
        .parse()
        .map_err(|e| invalid("manifold.model", format!("{e}")))?;
    let params = ZooParams {
        radius: file.manifold.radius,
        half_width: file.manifold.half_width,
        center: file.manifold.center.clone(),
        periodic: file.manifold.periodic.clone(),
        entries: file.manifold.entries.clone(),
        declared_complete: None,
        declared_infinite_volume: None,
        known_scalar_curvature: None,
    };
    let model =
        geometry::model_zoo(kind, n, &params).map_err(|e| invalid("manifold", format!("{e}")))?;

    let given: Vec<(&str, &Option<String>)> = vec![
        ("sigma", &file.deformation.sigma),
        ("lambda", &file.deformation.lambda),
        ("u", &file.deformation.u),
    ];
    let present: Vec<(&str, &String)> = given
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|t| (*k, t)))
        .collect();
    if present.len() != 1 {
        return Err(invalid(
            "deformation",
            format!(
                "exactly one of sigma/lambda/u must be given, found {}",
                present.len()
            ),
        ));
    }
    let (rep, text) = present[0];
    let parsed =
        expr::parse(text, n).map_err(|e| invalid(&format!("deformation.{rep}"), format!("{e}")))?;
    let deformation = match rep {
        "sigma" => ConformalDeformation::from_sigma(n, parsed),
        "lambda" => ConformalDeformation::from_lambda(n, parsed),
        _ => ConformalDeformation::from_u(n, parsed),
    }
    .map_err(|e| invalid(&format!("deformation.{rep}"), format!("{e}")))?;

    let identities = file
        .checks
        .identities
        .iter()
        .map(|s| s.parse::<IdentityId>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid("checks.identities", e))?;
    let theorems = file
        .checks
        .theorems
        .iter()
        .map(|s| s.parse::<TheoremId>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid("checks.theorems", e))?;
    let lp = file
        .checks
        .lp
        .iter()
        .map(|entry| {
            let quantity = entry
                .quantity
                .parse::<LpQuantity>()
                .map_err(|e| invalid("checks.lp.quantity", e))?;
            if !(entry.p >= 1.0) {
                return Err(invalid(
                    "checks.lp.p",
                    format!("p must be >= 1, got {}", entry.p),
                ));
            }
            Ok(LpRequest {
                quantity,
                p: entry.p,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let numeric = file.numeric;
    if numeric.grid < 3 || numeric.grid % 2 == 0 {
        return Err(invalid(
            "numeric.grid",
            format!("resolution must be odd and >= 3, got {}", numeric.grid),
        ));
    }
    if numeric.exhaustion_stages < 2 || numeric.exhaustion_stages > 16 {
        return Err(invalid(
            "numeric.exhaustion_stages",
            format!(
                "must be between 2 and 16, got {}",
                numeric.exhaustion_stages
            ),
        ));
    }
    if !(numeric.tol_identity > 0.0) {
        return Err(invalid("numeric.tol_identity", "must be positive"));
    }
    if !(numeric.tol_class > 0.0) {
        return Err(invalid("numeric.tol_class", "must be positive"));
    }
    if let Some(output) = &file.output {
        if output.format != "csv" && output.format != "jsonl" {
            return Err(invalid(
                "output.format",
                format!("must be \"csv\" or \"jsonl\", got \"{}\"", output.format),
            ));
        }
    }
    let grid = geometry::grid(&model.chart, numeric.grid)
        .map_err(|e| invalid("numeric.grid", format!("{e}")))?;
    let exhaustion = ExhaustionSpec::geometric(numeric.exhaustion_stages, numeric.grid.max(9));

    Ok(RunPlan {
        model,
        deformation,
        identities,
        theorems,
        lp,
        grid,
        tol_identity: numeric.tol_identity,
        tol_class: numeric.tol_class,
        exhaustion,
        output: file.output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [manifold]
        model = "euclidean"
        dimension = 3

        [deformation]
        sigma = "0.5"

        [checks]
        identities = ["EQ_2_1"]
    "#;

    #[test]
    fn minimal_scenario_loads_with_defaults() {
        let plan = load_str(MINIMAL).unwrap();
        assert_eq!(plan.model.name, "euclidean");
        assert_eq!(plan.grid.points_per_axis(), 9);
        assert_eq!(plan.tol_identity, 1e-8);
        assert_eq!(plan.identities, vec![IdentityId::Eq21]);
    }

    #[test]
    fn even_grid_is_rejected_naming_the_key() {
        let text = format!("{MINIMAL}\n[numeric]\ngrid = 4\n");
        match load_str(&text) {
            Err(ScenarioError::Invalid { key, .. }) => assert_eq!(key, "numeric.grid"),
            other => panic!("expected invalid grid, got {other:?}"),
        }
    }

    #[test]
    fn two_deformation_representations_rejected() {
        let text = r#"
            [manifold]
            model = "euclidean"
            dimension = 3

            [deformation]
            sigma = "0.5"
            lambda = "2"

            [checks]
        "#;
        assert!(matches!(load_str(text), Err(ScenarioError::Invalid { .. })));
    }

    #[test]
    fn unknown_keys_are_schema_violations_with_line() {
        let text = r#"
            [manifold]
            model = "euclidean"
            dimension = 3
            flavor = "strawberry"

            [deformation]
            sigma = "0.5"

            [checks]
        "#;
        match load_str(text) {
            Err(ScenarioError::Parse { line, .. }) => assert!(line >= 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identity_id_rejected() {
        let text = MINIMAL.replace("EQ_2_1", "EQ_9_9");
        assert!(
            matches!(load_str(&text), Err(ScenarioError::Invalid { key, .. }) if key == "checks.identities")
        );
    }
}
