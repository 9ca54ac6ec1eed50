//! Riemannian first-order calculus: gradient, gradient norm, Laplace-Beltrami
//! operator, and grid-sampled harmonicity classification.
//!
//! Sign convention: `lap = div(grad ...)`, which is NON-negative on convex
//! functions in flat space (`lap |x|^2 = 2n > 0`). Everything downstream
//! (harmonicity tags, identity residuals, theorem hypotheses) assumes this
//! convention; the opposite sign would silently flip every inequality.

use crate::expr::{EvalError, Jet2, ScalarExpression};
use crate::geometry::{GeometryError, Grid, ManifoldModel};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalculusError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("function evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("evaluation failed at grid node {node}: {source}")]
    AtNode {
        node: usize,
        source: Box<CalculusError>,
    },
    #[error("grid is empty")]
    EmptyGrid,
}

/// Pointwise metric frame: inverse metric, volume density, and Christoffel
/// symbols, assembled once so several operators can share it.
#[derive(Debug, Clone)]
pub struct PointFrame {
    pub n: usize,
    pub metric: Vec<f64>,
    pub inverse: Vec<f64>,
    pub sqrt_det: f64,
    /// `Gamma^k_{ij}` indexed `k*n*n + i*n + j`; symmetric in (i, j).
    pub christoffel: Vec<f64>,
}

/// Metric matrix, inverse, density, and Christoffel symbols at `x`.
pub fn point_frame(model: &ManifoldModel, x: &[f64]) -> Result<PointFrame, CalculusError> {
    let n = model.dimension();
    let at = model.metric_at(x)?;
    let jets = model.metric.entry_jets(x)?;
    let entry_jet = |i: usize, j: usize| -> &Jet2 { &jets[crate::linalg::sym_index(n, i, j)] };
    // dg(k, i, j) = partial_k g_ij
    let dg = |k: usize, i: usize, j: usize| -> f64 { entry_jet(i, j).gradient()[k] };
    let mut christoffel = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut sum = 0.0;
                for l in 0..n {
                    sum += at.inverse[k * n + l] * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
                }
                let value = 0.5 * sum;
                christoffel[k * n * n + i * n + j] = value;
                christoffel[k * n * n + j * n + i] = value;
            }
        }
    }
    Ok(PointFrame {
        n,
        metric: at.matrix,
        inverse: at.inverse,
        sqrt_det: at.sqrt_det,
        christoffel,
    })
}

impl PointFrame {
    /// Contravariant gradient `g^{ij} d_j phi` from the function's jet.
    pub fn gradient(&self, jet: &Jet2) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.inverse[i * n + j] * jet.gradient()[j])
                    .sum()
            })
            .collect()
    }

    /// `g^{ij} d_i phi d_j phi`.
    pub fn grad_norm_sq(&self, jet: &Jet2) -> f64 {
        let n = self.n;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                sum += self.inverse[i * n + j] * jet.gradient()[i] * jet.gradient()[j];
            }
        }
        sum
    }

    /// Laplace-Beltrami via `g^{ij}(d_i d_j phi - Gamma^k_{ij} d_k phi)`,
    /// algebraically equal to the divergence form
    /// `(1/sqrt det g) d_i(sqrt det g g^{ij} d_j phi)`.
    pub fn laplacian(&self, jet: &Jet2) -> f64 {
        let n = self.n;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut corrected = jet.hessian(i, j);
                for k in 0..n {
                    corrected -= self.christoffel[k * n * n + i * n + j] * jet.gradient()[k];
                }
                sum += self.inverse[i * n + j] * corrected;
            }
        }
        sum
    }
}

/// Contravariant Riemannian gradient of `phi` at `x`.
pub fn riemannian_gradient(
    model: &ManifoldModel,
    phi: &ScalarExpression,
    x: &[f64],
) -> Result<Vec<f64>, CalculusError> {
    let frame = point_frame(model, x)?;
    Ok(frame.gradient(&phi.jet2(x)?))
}

/// Squared gradient norm `g^{ij} d_i phi d_j phi` at `x`.
pub fn grad_norm_sq(
    model: &ManifoldModel,
    phi: &ScalarExpression,
    x: &[f64],
) -> Result<f64, CalculusError> {
    let frame = point_frame(model, x)?;
    Ok(frame.grad_norm_sq(&phi.jet2(x)?))
}

/// Laplace-Beltrami of `phi` at `x` (exact autodiff, no truncation error).
pub fn laplace_beltrami(
    model: &ManifoldModel,
    phi: &ScalarExpression,
    x: &[f64],
) -> Result<f64, CalculusError> {
    let frame = point_frame(model, x)?;
    Ok(frame.laplacian(&phi.jet2(x)?))
}

/// Laplacian at every grid node, in node order. Parallel map, ordered
/// collection; the first failing node (in grid order) aborts.
pub fn laplacian_over_grid(
    model: &ManifoldModel,
    phi: &ScalarExpression,
    grid: &Grid,
) -> Result<Vec<f64>, CalculusError> {
    let values: Vec<Result<f64, CalculusError>> = (0..grid.len())
        .into_par_iter()
        .map(|i| laplace_beltrami(model, phi, grid.point(i)))
        .collect();
    collect_ordered(values)
}

pub(crate) fn collect_ordered<T: Send>(
    values: Vec<Result<T, CalculusError>>,
) -> Result<Vec<T>, CalculusError> {
    let mut out = Vec::with_capacity(values.len());
    for (node, value) in values.into_iter().enumerate() {
        match value {
            Ok(v) => out.push(v),
            Err(source) => {
                return Err(CalculusError::AtNode {
                    node,
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(out)
}

/// Grid-sampled harmonicity tag. The classification is sampled, not global;
/// render it as "on sampled grid" wherever it is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicityTag {
    Harmonic,
    Subharmonic,
    Superharmonic,
    Mixed,
}

impl HarmonicityTag {
    pub fn name(self) -> &'static str {
        match self {
            HarmonicityTag::Harmonic => "harmonic",
            HarmonicityTag::Subharmonic => "subharmonic",
            HarmonicityTag::Superharmonic => "superharmonic",
            HarmonicityTag::Mixed => "mixed",
        }
    }
}

/// Default tolerance for deciding the sign of autodiff Laplacian samples.
pub const DEFAULT_HARMONICITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicityClass {
    pub tag: HarmonicityTag,
    /// min of lap(phi) over the grid.
    pub witness_min: f64,
    /// max of lap(phi) over the grid.
    pub witness_max: f64,
    pub tolerance: f64,
}

/// Classify `phi` on the grid from the extremes of its Laplacian samples.
pub fn classify_harmonicity(
    model: &ManifoldModel,
    phi: &ScalarExpression,
    grid: &Grid,
    tolerance: f64,
) -> Result<HarmonicityClass, CalculusError> {
    if grid.is_empty() {
        return Err(CalculusError::EmptyGrid);
    }
    let laps = laplacian_over_grid(model, phi, grid)?;
    // deterministic ordered fold
    let mut witness_min = f64::INFINITY;
    let mut witness_max = f64::NEG_INFINITY;
    for &v in &laps {
        witness_min = witness_min.min(v);
        witness_max = witness_max.max(v);
    }
    let tag = if witness_min.abs().max(witness_max.abs()) <= tolerance {
        HarmonicityTag::Harmonic
    } else if witness_min >= -tolerance && witness_max > tolerance {
        HarmonicityTag::Subharmonic
    } else if witness_max <= tolerance && witness_min < -tolerance {
        HarmonicityTag::Superharmonic
    } else {
        HarmonicityTag::Mixed
    };
    Ok(HarmonicityClass {
        tag,
        witness_min,
        witness_max,
        tolerance,
    })
}
