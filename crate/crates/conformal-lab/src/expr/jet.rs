//! Second-order forward-mode jets: value, gradient, and packed symmetric
//! Hessian propagated together through arithmetic and elementary functions.

use super::EvalNum;
use crate::linalg::{tri_len, MAX_DIM};

const HESS_LEN: usize = tri_len(MAX_DIM);

/// Value, gradient, and Hessian of a scalar function at a point.
///
/// The Hessian is stored as a packed upper triangle, so it is exactly
/// symmetric by construction. Storage is fixed-size for dimensions up to
/// [`MAX_DIM`]; `n == 0` marks a constant (all derivative slots zero), which
/// combines safely with jets of any dimension.
#[derive(Debug, Clone, Copy)]
pub struct Jet2 {
    n: usize,
    v: f64,
    g: [f64; MAX_DIM],
    h: [f64; HESS_LEN],
}

impl Jet2 {
    pub fn constant(value: f64) -> Self {
        Jet2 {
            n: 0,
            v: value,
            g: [0.0; MAX_DIM],
            h: [0.0; HESS_LEN],
        }
    }

    /// Seed for the i-th coordinate (0-based) of an n-dimensional point.
    pub fn variable(n: usize, i: usize, x: f64) -> Self {
        assert!(n <= MAX_DIM && i < n);
        let mut jet = Jet2::constant(x);
        jet.n = n;
        jet.g[i] = 1.0;
        jet
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Promote a constant jet (all derivative slots zero) to dimension `n`.
    pub(crate) fn promoted(mut self, n: usize) -> Self {
        if self.n == 0 {
            self.n = n;
        }
        debug_assert_eq!(self.n, n);
        self
    }

    pub fn value(&self) -> f64 {
        self.v
    }

    pub fn gradient(&self) -> &[f64] {
        &self.g[..self.n]
    }

    /// Hessian entry (i, j); symmetric in its arguments.
    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        self.h[crate::linalg::sym_index(self.n, i, j)]
    }

    /// Full n x n Hessian, row-major.
    pub fn hessian_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = self.hessian(i, j);
            }
        }
        m
    }

    /// Chain rule for a smooth unary function with derivatives `fp`, `fpp`
    /// at the primal value.
    fn chain(self, f: f64, fp: f64, fpp: f64) -> Self {
        let mut out = self;
        out.v = f;
        for i in 0..self.n {
            out.g[i] = fp * self.g[i];
        }
        let mut idx = 0;
        for i in 0..self.n {
            for j in i..self.n {
                out.h[idx] = fp * self.h[idx] + fpp * self.g[i] * self.g[j];
                idx += 1;
            }
        }
        out
    }
}

impl EvalNum for Jet2 {
    const NEEDS_DERIVATIVES: bool = true;

    fn from_const(c: f64) -> Self {
        Jet2::constant(c)
    }

    fn primal(&self) -> f64 {
        self.v
    }

    fn add(self, o: Self) -> Self {
        let n = self.n.max(o.n);
        let mut out = Jet2::constant(self.v + o.v);
        out.n = n;
        for i in 0..n {
            out.g[i] = self.g[i] + o.g[i];
        }
        for k in 0..tri_len(n) {
            out.h[k] = self.h[k] + o.h[k];
        }
        out
    }

    fn sub(self, o: Self) -> Self {
        let n = self.n.max(o.n);
        let mut out = Jet2::constant(self.v - o.v);
        out.n = n;
        for i in 0..n {
            out.g[i] = self.g[i] - o.g[i];
        }
        for k in 0..tri_len(n) {
            out.h[k] = self.h[k] - o.h[k];
        }
        out
    }

    fn mul(self, o: Self) -> Self {
        let n = self.n.max(o.n);
        let mut out = Jet2::constant(self.v * o.v);
        out.n = n;
        for i in 0..n {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
        }
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                out.h[idx] =
                    self.v * o.h[idx] + o.v * self.h[idx] + self.g[i] * o.g[j] + self.g[j] * o.g[i];
                idx += 1;
            }
        }
        out
    }

    /// Quotient rule, solved from `self = out * o` for one rounding per
    /// component instead of composing with a reciprocal.
    fn div(self, o: Self) -> Self {
        let n = self.n.max(o.n);
        let v = self.v / o.v;
        let mut out = Jet2::constant(v);
        out.n = n;
        for i in 0..n {
            out.g[i] = (self.g[i] - v * o.g[i]) / o.v;
        }
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                out.h[idx] =
                    (self.h[idx] - v * o.h[idx] - out.g[i] * o.g[j] - out.g[j] * o.g[i]) / o.v;
                idx += 1;
            }
        }
        out
    }

    fn neg(self) -> Self {
        let mut out = self;
        out.v = -out.v;
        for i in 0..self.n {
            out.g[i] = -out.g[i];
        }
        for k in 0..tri_len(self.n) {
            out.h[k] = -out.h[k];
        }
        out
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    fn log(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(self.v.ln(), inv, -inv * inv)
    }

    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    fn tanh(self) -> Self {
        let t = self.v.tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    fn powi(self, k: i32) -> Self {
        match k {
            0 => self.chain(1.0, 0.0, 0.0),
            1 => self.chain(self.v, 1.0, 0.0),
            _ => self.chain(
                self.v.powi(k),
                f64::from(k) * self.v.powi(k - 1),
                f64::from(k) * f64::from(k - 1) * self.v.powi(k - 2),
            ),
        }
    }
}
