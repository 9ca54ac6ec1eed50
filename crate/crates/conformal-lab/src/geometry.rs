//! Coordinate charts, metric fields, quadrature grids, and the model zoo.
//!
//! The artifact works on a single box chart with *declared* global
//! properties (completeness, volume finiteness): those are modeling
//! declarations, not computations, and every consumer reports them as such.

use crate::expr::{self, EvalError, Jet2, ParseError, ScalarExpression};
use crate::linalg::{self, MAX_DIM};

/// Factor by which the hyperbolic-ball chart is pulled inside the unit ball,
/// keeping the metric away from its blow-up at |x| -> 1.
pub const HYPERBOLIC_CLIP_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("chart dimension must be between 2 and {MAX_DIM}, got {0}")]
    BadDimension(usize),
    #[error("chart half_width must be positive, got {0}")]
    BadHalfWidth(f64),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("sphere radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("custom model needs {expected} metric entries (upper triangle) or {full} (full matrix), got {got}")]
    BadEntryCount {
        expected: usize,
        full: usize,
        got: usize,
    },
    #[error("custom metric entries are not symmetric: entry ({i},{j}) differs from ({j},{i})")]
    AsymmetricEntries { i: usize, j: usize },
    #[error("metric entry ({i},{j}): {source}")]
    EntryParse {
        i: usize,
        j: usize,
        source: ParseError,
    },
    #[error("expression `{name}`: {source}")]
    ExprParse { name: String, source: ParseError },
    #[error("point {point:?} is outside the chart box")]
    PointOutsideChart { point: Vec<f64> },
    #[error(
        "metric is not positive definite at {point:?}: leading minor of order {order} is {minor:e}"
    )]
    NotSpd {
        point: Vec<f64>,
        order: usize,
        minor: f64,
    },
    #[error("points_per_axis must be odd and >= 3 for non-periodic axes, got {0}")]
    EvenPointsPerAxis(usize),
    #[error("points_per_axis must be >= 2, got {0}")]
    TooFewPoints(usize),
    #[error("metric evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// A box chart `center ± half_width` per axis, with optional periodic axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    dimension: usize,
    center: Vec<f64>,
    half_width: f64,
    periodic: Vec<bool>,
}

impl Chart {
    pub fn new(
        dimension: usize,
        center: Vec<f64>,
        half_width: f64,
        periodic: Vec<bool>,
    ) -> Result<Self, GeometryError> {
        if dimension < 2 || dimension > MAX_DIM {
            return Err(GeometryError::BadDimension(dimension));
        }
        if !(half_width > 0.0) {
            return Err(GeometryError::BadHalfWidth(half_width));
        }
        assert_eq!(center.len(), dimension);
        assert_eq!(periodic.len(), dimension);
        Ok(Chart {
            dimension,
            center,
            half_width,
            periodic,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn all_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    /// Non-periodic axes are bounded by the box; periodic axes wrap.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dimension
            && point.iter().enumerate().all(|(i, &x)| {
                self.periodic[i] || (x - self.center[i]).abs() <= self.half_width * (1.0 + 1e-12)
            })
    }
}

/// Symmetric matrix of expressions; storage is the upper triangle, so
/// symmetry holds by construction. `conformal_to_flat` records sigma0 with
/// `g = e^{2 sigma0} delta` when the field is conformally flat, enabling a
/// second, tensor-free route to its scalar curvature.
#[derive(Debug, Clone)]
pub struct MetricField {
    n: usize,
    /// Upper triangle, row-major: (0,0), (0,1), ..., (1,1), ...
    entries: Vec<ScalarExpression>,
    /// For each entry, the index of its first structurally equal twin;
    /// repeated trees (conformal factors, zeros) are jet-evaluated once.
    representative: Vec<usize>,
    conformal_to_flat: Option<ScalarExpression>,
}

impl MetricField {
    pub fn from_upper_triangle(
        n: usize,
        entries: Vec<ScalarExpression>,
        conformal_to_flat: Option<ScalarExpression>,
    ) -> Self {
        assert_eq!(entries.len(), linalg::tri_len(n));
        let mut representative = Vec::with_capacity(entries.len());
        for (i, entry) in entries.iter().enumerate() {
            let rep = (0..i).find(|&j| entries[j] == *entry).unwrap_or(i);
            representative.push(rep);
        }
        MetricField {
            n,
            entries,
            representative,
            conformal_to_flat,
        }
    }

    /// Flat metric `delta` in dimension n.
    pub fn euclidean(n: usize) -> Self {
        let mut entries = Vec::with_capacity(linalg::tri_len(n));
        for i in 0..n {
            for j in i..n {
                entries.push(ScalarExpression::constant(
                    n,
                    if i == j { 1.0 } else { 0.0 },
                ));
            }
        }
        MetricField::from_upper_triangle(n, entries, Some(ScalarExpression::constant(n, 0.0)))
    }

    /// `e^{2 sigma0} delta`.
    pub fn conformally_flat(n: usize, sigma0: ScalarExpression) -> Self {
        let factor = sigma0.scaled(2.0).exp();
        let zero = ScalarExpression::constant(n, 0.0);
        let mut entries = Vec::with_capacity(linalg::tri_len(n));
        for i in 0..n {
            for j in i..n {
                entries.push(if i == j { factor.clone() } else { zero.clone() });
            }
        }
        MetricField::from_upper_triangle(n, entries, Some(sigma0))
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpression {
        &self.entries[linalg::sym_index(self.n, i, j)]
    }

    pub fn upper_triangle(&self) -> &[ScalarExpression] {
        &self.entries
    }

    pub fn conformal_to_flat(&self) -> Option<&ScalarExpression> {
        self.conformal_to_flat.as_ref()
    }

    /// 2-jets of the upper-triangle entries at a point, evaluating each
    /// distinct tree once.
    pub fn entry_jets(&self, point: &[f64]) -> Result<Vec<Jet2>, EvalError> {
        let mut jets: Vec<Option<Jet2>> = vec![None; self.entries.len()];
        for (i, &rep) in self.representative.iter().enumerate() {
            if jets[rep].is_none() {
                jets[rep] = Some(self.entries[rep].jet2(point)?);
            }
            if i != rep {
                jets[i] = jets[rep];
            }
        }
        Ok(jets.into_iter().map(|j| j.expect("filled")).collect())
    }
}

/// A model manifold: chart, metric, and declared global properties.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    pub name: String,
    pub chart: Chart,
    pub metric: MetricField,
    pub declared_complete: bool,
    pub declared_infinite_volume: bool,
    /// True for models derived from another by rescaling: the declarations
    /// were inherited, not asserted for this metric.
    pub flags_inherited: bool,
    pub known_scalar_curvature: Option<ScalarExpression>,
}

/// Pointwise metric data: the matrix, its inverse, and the volume density.
#[derive(Debug, Clone)]
pub struct MetricAt {
    pub n: usize,
    /// Row-major n x n.
    pub matrix: Vec<f64>,
    pub inverse: Vec<f64>,
    pub sqrt_det: f64,
}

impl ManifoldModel {
    pub fn dimension(&self) -> usize {
        self.chart.dimension()
    }

    /// Metric matrix, inverse, and sqrt(det g) at `point`, with an SPD check
    /// via leading minors.
    pub fn metric_at(&self, point: &[f64]) -> Result<MetricAt, GeometryError> {
        if !self.chart.contains(point) {
            return Err(GeometryError::PointOutsideChart {
                point: point.to_vec(),
            });
        }
        let n = self.dimension();
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.metric.entry(i, j).evaluate(point)?;
                matrix[i * n + j] = v;
                matrix[j * n + i] = v;
            }
        }
        let (inverse, sqrt_det) =
            linalg::spd_inverse_sqrt_det(n, &matrix).map_err(|e| GeometryError::NotSpd {
                point: point.to_vec(),
                order: e.order,
                minor: e.minor,
            })?;
        Ok(MetricAt {
            n,
            matrix,
            inverse,
            sqrt_det,
        })
    }

    pub fn known_scalar_curvature_at(&self, point: &[f64]) -> Option<Result<f64, EvalError>> {
        self.known_scalar_curvature
            .as_ref()
            .map(|s| s.evaluate(point))
    }
}

// ---- model zoo ----------------------------------------------------------

/// The built-in model kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZooModel {
    Euclidean,
    SphereStereographic,
    HyperbolicBall,
    FlatTorus,
    Custom,
}

impl ZooModel {
    pub const ALL_NAMED: [ZooModel; 4] = [
        ZooModel::Euclidean,
        ZooModel::SphereStereographic,
        ZooModel::HyperbolicBall,
        ZooModel::FlatTorus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ZooModel::Euclidean => "euclidean",
            ZooModel::SphereStereographic => "sphere_stereographic",
            ZooModel::HyperbolicBall => "hyperbolic_ball",
            ZooModel::FlatTorus => "flat_torus",
            ZooModel::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ZooModel {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "euclidean" => ZooModel::Euclidean,
            "sphere_stereographic" => ZooModel::SphereStereographic,
            "hyperbolic_ball" => ZooModel::HyperbolicBall,
            "flat_torus" => ZooModel::FlatTorus,
            "custom" => ZooModel::Custom,
            other => return Err(GeometryError::UnknownModel(other.to_owned())),
        })
    }
}

/// Optional parameters for [`model_zoo`]. Defaults suit every named model;
/// `Custom` additionally requires `entries`.
#[derive(Debug, Clone, Default)]
pub struct ZooParams {
    pub radius: Option<f64>,
    pub half_width: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub periodic: Option<Vec<bool>>,
    /// Custom metric entries as expression text, upper triangle row-major or
    /// full row-major n x n (checked for symmetry).
    pub entries: Option<Vec<String>>,
    pub declared_complete: Option<bool>,
    pub declared_infinite_volume: Option<bool>,
    pub known_scalar_curvature: Option<String>,
}

/// `x1^2 + ... + xn^2` as text.
fn radius_sq_text(n: usize) -> String {
    (1..=n)
        .map(|i| format!("x{i}^2"))
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Construct a model manifold from the zoo.
pub fn model_zoo(
    kind: ZooModel,
    n: usize,
    params: &ZooParams,
) -> Result<ManifoldModel, GeometryError> {
    let center_or =
        |default: f64| -> Vec<f64> { params.center.clone().unwrap_or_else(|| vec![default; n]) };
    match kind {
        ZooModel::Euclidean => {
            let chart = Chart::new(
                n,
                center_or(0.0),
                params.half_width.unwrap_or(1.0),
                vec![false; n],
            )?;
            Ok(ManifoldModel {
                name: "euclidean".into(),
                chart,
                metric: MetricField::euclidean(n),
                declared_complete: true,
                declared_infinite_volume: true,
                flags_inherited: false,
                known_scalar_curvature: Some(ScalarExpression::constant(n, 0.0)),
            })
        }
        ZooModel::SphereStereographic => {
            let r = params.radius.unwrap_or(1.0);
            if !(r > 0.0) {
                return Err(GeometryError::BadRadius(r));
            }
            let chart = Chart::new(
                n,
                center_or(0.0),
                params.half_width.unwrap_or(1.0),
                vec![false; n],
            )?;
            // g = (4 r^4 / (r^2 + |x|^2)^2) delta = e^{2 sigma0} delta,
            // sigma0 = log(2 r^2 / (r^2 + |x|^2)); s = n(n-1)/r^2.
            let r2 = r * r;
            let sigma0 = parse_named(
                &format!("log(2*{r2}/({r2} + ({})))", radius_sq_text(n)),
                n,
                "sphere conformal factor",
            )?;
            let s = (n * (n - 1)) as f64 / r2;
            Ok(ManifoldModel {
                name: "sphere_stereographic".into(),
                chart,
                metric: MetricField::conformally_flat(n, sigma0),
                declared_complete: true,
                declared_infinite_volume: false,
                flags_inherited: false,
                known_scalar_curvature: Some(ScalarExpression::constant(n, s)),
            })
        }
        ZooModel::HyperbolicBall => {
            // Chart clipped inside the unit ball: the box corner sits at
            // |x| = HYPERBOLIC_CLIP_FACTOR.
            let hw = HYPERBOLIC_CLIP_FACTOR / (n as f64).sqrt();
            let chart = Chart::new(n, vec![0.0; n], hw, vec![false; n])?;
            let sigma0 = parse_named(
                &format!("log(2/(1 - ({})))", radius_sq_text(n)),
                n,
                "hyperbolic conformal factor",
            )?;
            let s = -((n * (n - 1)) as f64);
            Ok(ManifoldModel {
                name: "hyperbolic_ball".into(),
                chart,
                metric: MetricField::conformally_flat(n, sigma0),
                declared_complete: true,
                declared_infinite_volume: true,
                flags_inherited: false,
                known_scalar_curvature: Some(ScalarExpression::constant(n, s)),
            })
        }
        ZooModel::FlatTorus => {
            let chart = Chart::new(n, center_or(0.5), 0.5, vec![true; n])?;
            Ok(ManifoldModel {
                name: "flat_torus".into(),
                chart,
                metric: MetricField::euclidean(n),
                declared_complete: true,
                declared_infinite_volume: false,
                flags_inherited: false,
                known_scalar_curvature: Some(ScalarExpression::constant(n, 0.0)),
            })
        }
        ZooModel::Custom => {
            let chart = Chart::new(
                n,
                center_or(0.0),
                params.half_width.unwrap_or(1.0),
                params.periodic.clone().unwrap_or_else(|| vec![false; n]),
            )?;
            let texts = params.entries.as_deref().unwrap_or(&[]);
            let tri = linalg::tri_len(n);
            let entries = if texts.len() == tri {
                parse_triangle(texts, n)?
            } else if texts.len() == n * n {
                full_matrix_to_triangle(texts, n)?
            } else {
                return Err(GeometryError::BadEntryCount {
                    expected: tri,
                    full: n * n,
                    got: texts.len(),
                });
            };
            let known = match &params.known_scalar_curvature {
                Some(text) => Some(parse_named(text, n, "known scalar curvature")?),
                None => None,
            };
            Ok(ManifoldModel {
                name: "custom".into(),
                chart,
                metric: MetricField::from_upper_triangle(n, entries, None),
                declared_complete: params.declared_complete.unwrap_or(false),
                declared_infinite_volume: params.declared_infinite_volume.unwrap_or(false),
                flags_inherited: false,
                known_scalar_curvature: known,
            })
        }
    }
}

fn parse_named(text: &str, n: usize, name: &str) -> Result<ScalarExpression, GeometryError> {
    expr::parse(text, n).map_err(|source| GeometryError::ExprParse {
        name: name.to_owned(),
        source,
    })
}

fn parse_triangle(texts: &[String], n: usize) -> Result<Vec<ScalarExpression>, GeometryError> {
    let mut entries = Vec::with_capacity(texts.len());
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            entries.push(expr::parse(&texts[idx], n).map_err(|source| {
                GeometryError::EntryParse {
                    i: i + 1,
                    j: j + 1,
                    source,
                }
            })?);
            idx += 1;
        }
    }
    Ok(entries)
}

fn full_matrix_to_triangle(
    texts: &[String],
    n: usize,
) -> Result<Vec<ScalarExpression>, GeometryError> {
    let parse_at = |i: usize, j: usize| -> Result<ScalarExpression, GeometryError> {
        expr::parse(&texts[i * n + j], n).map_err(|source| GeometryError::EntryParse {
            i: i + 1,
            j: j + 1,
            source,
        })
    };
    let mut entries = Vec::with_capacity(linalg::tri_len(n));
    for i in 0..n {
        for j in i..n {
            let upper = parse_at(i, j)?;
            if i != j {
                let lower = parse_at(j, i)?;
                if upper != lower {
                    return Err(GeometryError::AsymmetricEntries { i: i + 1, j: j + 1 });
                }
            }
            entries.push(upper);
        }
    }
    Ok(entries)
}

// ---- quadrature grids ----------------------------------------------------

/// Deterministic tensor-product sample grid with quadrature weights.
/// Node ordering is lexicographic in the multi-index, axis 1 outermost.
#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    points_per_axis: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn point(&self, idx: usize) -> &[f64] {
        &self.coords[idx * self.n..(idx + 1) * self.n]
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.len()).map(move |i| (self.point(i), self.weight(i)))
    }
}

/// Nodes and common weight for one axis: midpoint nodes on non-periodic
/// axes, uniform nodes (including the left endpoint) on periodic axes.
pub(crate) fn axis_nodes(
    center: f64,
    half_width: f64,
    k: usize,
    periodic: bool,
) -> (Vec<f64>, f64) {
    let cell = 2.0 * half_width / k as f64;
    let left = center - half_width;
    let nodes = (0..k)
        .map(|m| {
            if periodic {
                left + m as f64 * cell
            } else {
                left + (m as f64 + 0.5) * cell
            }
        })
        .collect();
    (nodes, cell)
}

/// Tensor-product sample grid over the chart box. Non-periodic axes require
/// an odd `points_per_axis >= 3`; fully periodic charts accept any count
/// >= 2 (uniform nodes have no parity constraint).
pub fn grid(chart: &Chart, points_per_axis: usize) -> Result<Grid, GeometryError> {
    grid_scaled(chart, points_per_axis, 1.0)
}

/// As [`grid`], with non-periodic axes shrunk about the center by `scale`.
/// Periodic axes always cover their full circle.
pub fn grid_scaled(
    chart: &Chart,
    points_per_axis: usize,
    scale: f64,
) -> Result<Grid, GeometryError> {
    let k = points_per_axis;
    if k < 2 {
        return Err(GeometryError::TooFewPoints(k));
    }
    if !chart.all_periodic() && (k % 2 == 0 || k < 3) {
        return Err(GeometryError::EvenPointsPerAxis(k));
    }
    assert!(scale > 0.0 && scale <= 1.0);
    let n = chart.dimension();
    let mut axes = Vec::with_capacity(n);
    let mut cell_weight = 1.0;
    for i in 0..n {
        let periodic = chart.periodic()[i];
        let hw = if periodic {
            chart.half_width()
        } else {
            chart.half_width() * scale
        };
        let (nodes, w) = axis_nodes(chart.center()[i], hw, k, periodic);
        cell_weight *= w;
        axes.push(nodes);
    }
    let total = k.pow(n as u32);
    let mut coords = Vec::with_capacity(total * n);
    let mut index = vec![0usize; n];
    for _ in 0..total {
        for (axis, &m) in index.iter().enumerate() {
            coords.push(axes[axis][m]);
        }
        // lexicographic increment, last axis fastest
        for axis in (0..n).rev() {
            index[axis] += 1;
            if index[axis] < k {
                break;
            }
            index[axis] = 0;
        }
    }
    Ok(Grid {
        n,
        points_per_axis: k,
        coords,
        weights: vec![cell_weight; total],
    })
}
