//! A verification laboratory for conformal rescalings of Riemannian metrics.
//!
//! The crate computes curvature and Laplace–Beltrami quantities on
//! coordinate-chart manifolds, measures the residuals of the conformal
//! scalar-curvature transformation law and its derived identities (including
//! two textbook-variant forms whose residuals have analytically predicted
//! gaps), estimates integrability hypotheses by chart exhaustion, and renders
//! verdicts on Liouville-type rigidity statements for concrete model metrics.
//!
//! Entry points:
//! - [`expr`]: closed-form scalar expressions with exact 2-jet evaluation,
//! - [`geometry`]: charts, metric fields, the model zoo, quadrature grids,
//! - [`calculus`]: Riemannian gradient, Laplace–Beltrami, harmonicity,
//! - [`curvature`]: Christoffel/Riemann/Ricci/scalar pipeline,
//! - [`conformal`]: deformations and the identity-residual engine,
//! - [`integrability`]: exhaustion-based L^p / volume verdicts,
//! - [`theorems`]: hypothesis-and-conclusion verdict engine,
//! - [`cli`]: scenario files, reports, and the command-line driver.

pub mod calculus;
pub mod cli;
pub mod conformal;
pub mod curvature;
pub mod expr;
pub mod geometry;
pub mod integrability;
pub mod linalg;
pub mod theorems;

pub use conformal::{ConformalDeformation, IdentityId, IdentityReport};
pub use expr::{Jet2, ScalarExpression};
pub use geometry::{Chart, Grid, ManifoldModel, MetricField};
pub use theorems::{TheoremId, TheoremVerdict};
