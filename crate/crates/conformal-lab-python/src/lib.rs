//! Python bindings: expressions with exact jets, zoo manifolds, conformal
//! deformations, identity residuals, theorem checks, and the scenario
//! runner, exposed as the `conformal_lab_py` extension module.

// the pymethods expansion inserts Into conversions clippy flags
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use conformal_lab::calculus;
use conformal_lab::cli;
use conformal_lab::conformal::{self, ConformalDeformation, IdentityId};
use conformal_lab::curvature;
use conformal_lab::expr::{self, ScalarExpression};
use conformal_lab::geometry::{self, ManifoldModel, ZooParams};
use conformal_lab::integrability::ExhaustionSpec;
use conformal_lab::theorems::{self, LpQuantity, LpRequest, TheoremId, TheoremScenario};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(format!("{e}"))
}

fn runtime_error(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(format!("{e}"))
}

/// A parsed scalar expression of chart coordinates x1..xN.
#[pyclass(frozen, name = "Expression")]
struct PyExpression {
    inner: ScalarExpression,
}

#[pymethods]
impl PyExpression {
    #[new]
    fn new(text: &str, arity: usize) -> PyResult<Self> {
        Ok(PyExpression {
            inner: expr::parse(text, arity).map_err(value_error)?,
        })
    }

    #[getter]
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn evaluate(&self, point: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&point).map_err(value_error)
    }

    /// Exact (value, gradient, hessian) at the point.
    fn jet2(&self, point: Vec<f64>) -> PyResult<(f64, Vec<f64>, Vec<Vec<f64>>)> {
        let jet = self.inner.jet2(&point).map_err(value_error)?;
        let n = point.len();
        let hess = (0..n)
            .map(|i| (0..n).map(|j| jet.hessian(i, j)).collect())
            .collect();
        Ok((jet.value(), jet.gradient().to_vec(), hess))
    }

    fn __str__(&self) -> String {
        self.inner.render()
    }

    fn __repr__(&self) -> String {
        format!(
            "Expression({:?}, arity={})",
            self.inner.render(),
            self.inner.arity()
        )
    }
}

/// A model manifold from the zoo (or a custom metric).
#[pyclass(frozen, name = "Manifold")]
struct PyManifold {
    inner: ManifoldModel,
}

#[pymethods]
impl PyManifold {
    /// Construct a zoo model: euclidean, sphere_stereographic,
    /// hyperbolic_ball, flat_torus, or custom (with `entries`).
    #[staticmethod]
    #[pyo3(signature = (name, dimension, radius=None, half_width=None, entries=None))]
    fn zoo(
        name: &str,
        dimension: usize,
        radius: Option<f64>,
        half_width: Option<f64>,
        entries: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let kind = name.parse().map_err(value_error)?;
        let params = ZooParams {
            radius,
            half_width,
            entries,
            ..Default::default()
        };
        Ok(PyManifold {
            inner: geometry::model_zoo(kind, dimension, &params).map_err(value_error)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    /// (metric matrix, inverse, sqrt det) at the point.
    fn metric_at(&self, point: Vec<f64>) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>, f64)> {
        let at = self.inner.metric_at(&point).map_err(value_error)?;
        let n = at.n;
        let unflatten = |m: &[f64]| -> Vec<Vec<f64>> {
            (0..n).map(|i| m[i * n..(i + 1) * n].to_vec()).collect()
        };
        Ok((unflatten(&at.matrix), unflatten(&at.inverse), at.sqrt_det))
    }

    fn scalar_curvature(&self, point: Vec<f64>) -> PyResult<f64> {
        curvature::scalar_curvature(&self.inner, &point).map_err(runtime_error)
    }

    fn laplace_beltrami(&self, phi: &PyExpression, point: Vec<f64>) -> PyResult<f64> {
        calculus::laplace_beltrami(&self.inner, &phi.inner, &point).map_err(runtime_error)
    }

    fn riemannian_gradient(&self, phi: &PyExpression, point: Vec<f64>) -> PyResult<Vec<f64>> {
        calculus::riemannian_gradient(&self.inner, &phi.inner, &point).map_err(runtime_error)
    }

    fn grad_norm_sq(&self, phi: &PyExpression, point: Vec<f64>) -> PyResult<f64> {
        calculus::grad_norm_sq(&self.inner, &phi.inner, &point).map_err(runtime_error)
    }

    fn ricci_lower_bound(&self, points_per_axis: usize) -> PyResult<f64> {
        let grid = geometry::grid(&self.inner.chart, points_per_axis).map_err(value_error)?;
        curvature::ricci_lower_bound(&self.inner, &grid).map_err(runtime_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "Manifold({}, n={})",
            self.inner.name,
            self.inner.dimension()
        )
    }
}

/// The sigma / lambda / u triple of a conformal rescaling.
#[pyclass(frozen, name = "Deformation")]
struct PyDeformation {
    inner: ConformalDeformation,
}

#[pymethods]
impl PyDeformation {
    #[staticmethod]
    fn from_sigma(dimension: usize, text: &str) -> PyResult<Self> {
        let sigma = expr::parse(text, dimension).map_err(value_error)?;
        Ok(PyDeformation {
            inner: ConformalDeformation::from_sigma(dimension, sigma).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn from_lambda(dimension: usize, text: &str) -> PyResult<Self> {
        let lambda = expr::parse(text, dimension).map_err(value_error)?;
        Ok(PyDeformation {
            inner: ConformalDeformation::from_lambda(dimension, lambda).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn from_u(dimension: usize, text: &str) -> PyResult<Self> {
        let u = expr::parse(text, dimension).map_err(value_error)?;
        Ok(PyDeformation {
            inner: ConformalDeformation::from_u(dimension, u).map_err(value_error)?,
        })
    }

    #[getter]
    fn sigma(&self) -> String {
        self.inner.sigma().render()
    }

    #[getter]
    fn lambda_text(&self) -> String {
        self.inner.lambda().render()
    }

    #[getter]
    fn u_text(&self) -> Option<String> {
        self.inner.u().map(|u| u.render())
    }

    fn __repr__(&self) -> String {
        format!(
            "Deformation(sigma={:?}, n={})",
            self.inner.sigma().render(),
            self.inner.dimension()
        )
    }
}

/// Pointwise residual (LHS - RHS) of one identity.
#[pyfunction]
fn identity_residual(
    id: &str,
    manifold: &PyManifold,
    deformation: &PyDeformation,
    point: Vec<f64>,
) -> PyResult<f64> {
    let id: IdentityId = id.parse().map_err(value_error)?;
    conformal::identity_residual(id, &manifold.inner, &deformation.inner, &point)
        .map_err(runtime_error)
}

/// Grid-aggregated identity report as a dict.
#[pyfunction]
#[pyo3(signature = (id, manifold, deformation, points_per_axis=5, tol=1e-8))]
fn identity_report<'py>(
    py: Python<'py>,
    id: &str,
    manifold: &PyManifold,
    deformation: &PyDeformation,
    points_per_axis: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let id: IdentityId = id.parse().map_err(value_error)?;
    let grid = geometry::grid(&manifold.inner.chart, points_per_axis).map_err(value_error)?;
    let report = conformal::identity_report(id, &manifold.inner, &deformation.inner, &grid, tol)
        .map_err(runtime_error)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("id", report.id.name())?;
    dict.set_item("n", report.n)?;
    dict.set_item("grid", report.grid_size)?;
    dict.set_item("max_abs_residual", report.max_abs_residual)?;
    dict.set_item("mean_abs_residual", report.mean_abs_residual)?;
    dict.set_item("predicted_gap", report.predicted_gap_max)?;
    dict.set_item("verdict", report.verdict.name())?;
    Ok(dict)
}

/// Run one theorem check; returns a dict with the hypothesis checklist and
/// the conclusion status.
#[pyfunction]
#[pyo3(signature = (id, manifold, deformation, points_per_axis=5, lp=vec![], tol_identity=1e-8, tol_class=1e-8))]
#[allow(clippy::too_many_arguments)]
fn check_theorem<'py>(
    py: Python<'py>,
    id: &str,
    manifold: &PyManifold,
    deformation: &PyDeformation,
    points_per_axis: usize,
    lp: Vec<(String, f64)>,
    tol_identity: f64,
    tol_class: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let id: TheoremId = id.parse().map_err(value_error)?;
    let grid = geometry::grid(&manifold.inner.chart, points_per_axis).map_err(value_error)?;
    let lp = lp
        .into_iter()
        .map(|(q, p)| {
            Ok(LpRequest {
                quantity: q.parse::<LpQuantity>().map_err(value_error)?,
                p,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let scn = TheoremScenario {
        model: &manifold.inner,
        deformation: Some(&deformation.inner),
        phi: None,
        lp,
        grid: &grid,
        exhaustion: ExhaustionSpec::geometric(6, points_per_axis.max(9)),
        tol_identity,
        tol_class,
    };
    let verdict = theorems::check(id, &scn).map_err(runtime_error)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("id", verdict.id.name())?;
    dict.set_item("n", verdict.n)?;
    dict.set_item("conclusion", verdict.conclusion_status.name())?;
    let hyps = PyList::empty_bound(py);
    for h in &verdict.hypotheses {
        let entry = PyDict::new_bound(py);
        entry.set_item("name", &h.name)?;
        entry.set_item("status", h.status.name())?;
        entry.set_item("evidence", &h.evidence)?;
        hyps.append(entry)?;
    }
    dict.set_item("hypotheses", hyps)?;
    Ok(dict)
}

/// Run a scenario file; returns (exit_code, csv_report).
#[pyfunction]
fn run_scenario(path: &str) -> PyResult<(i32, String)> {
    match cli::run_scenario_file(path) {
        Ok(outcome) => Ok((outcome.exit_code, outcome.csv)),
        Err(e @ cli::RunError::Config(_)) => Err(value_error(e)),
        Err(e) => Err(runtime_error(e)),
    }
}

/// The model catalogue as a text table.
#[pyfunction]
fn zoo_list() -> String {
    cli::zoo_list()
}

#[pymodule]
fn conformal_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpression>()?;
    m.add_class::<PyManifold>()?;
    m.add_class::<PyDeformation>()?;
    m.add_function(wrap_pyfunction!(identity_residual, m)?)?;
    m.add_function(wrap_pyfunction!(identity_report, m)?)?;
    m.add_function(wrap_pyfunction!(check_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(zoo_list, m)?)?;
    Ok(())
}
