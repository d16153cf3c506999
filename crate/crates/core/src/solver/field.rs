//! Coefficient bundles `(f, ∇f)` of a rough differential equation.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Claimed regularity of the coefficients. Well-posedness is only known for
/// bounded `C³` coefficients; the scheme itself needs `f` and `∇f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Smoothness {
    C1,
    C2,
    C3,
}

type Coeff = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Vector field `f: ℝ^d → L(ℝ^N, ℝ^d)` with its derivative.
///
/// `f(ξ)` is returned row-major as `d × N`, entry `[l * N + i]` holding the
/// `l`-th component of `f_i`. `df(ξ)` is `d × N × d`, entry
/// `[(l * N + i) * d + k]` holding `∂_k f_{l,i}`.
#[derive(Clone)]
pub struct VectorField {
    state_dim: usize,
    driver_dim: usize,
    f: Arc<Coeff>,
    df: Arc<Coeff>,
    smoothness: Smoothness,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("state_dim", &self.state_dim)
            .field("driver_dim", &self.driver_dim)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl VectorField {
    pub fn new<F, D>(
        state_dim: usize,
        driver_dim: usize,
        f: F,
        df: D,
        smoothness: Smoothness,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        D: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if state_dim == 0 || driver_dim == 0 {
            return Err(Error::InvalidInput(
                "vector field dimensions must be >= 1".into(),
            ));
        }
        Ok(Self {
            state_dim,
            driver_dim,
            f: Arc::new(f),
            df: Arc::new(df),
            smoothness,
        })
    }

    /// One-dimensional state: `f(y) = (f_1(y), …, f_N(y))`, `df` likewise.
    pub fn scalar<F, D>(driver_dim: usize, f: F, df: D, smoothness: Smoothness) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        D: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::new(
            1,
            driver_dim,
            move |y| f(y[0]),
            move |y| df(y[0]),
            smoothness,
        )
    }

    /// `f_i ≡ coeffs[i]`.
    pub fn constant(coeffs: Vec<f64>) -> Result<Self> {
        let n = coeffs.len();
        Self::scalar(
            n,
            move |_| coeffs.clone(),
            move |_| vec![0.0; n],
            Smoothness::C3,
        )
    }

    /// `f_i(y) = coeffs[i] · y`. Unbounded, so outside the well-posedness
    /// class, but the flow is explicit.
    pub fn linear(coeffs: Vec<f64>) -> Result<Self> {
        let c = coeffs.clone();
        Self::scalar(
            coeffs.len(),
            move |y| c.iter().map(|a| a * y).collect(),
            move |_| coeffs.clone(),
            Smoothness::C1,
        )
    }

    /// `f_i(y) = coeffs[i] / (1 + y²)`.
    pub fn bounded(coeffs: Vec<f64>) -> Result<Self> {
        let c = coeffs.clone();
        Self::scalar(
            coeffs.len(),
            move |y| c.iter().map(|a| a / (1.0 + y * y)).collect(),
            move |y| {
                let den = (1.0 + y * y).powi(2);
                coeffs.iter().map(|a| -2.0 * a * y / den).collect()
            },
            Smoothness::C3,
        )
    }

    /// `f_i(y) = coeffs[i] · sin(y) + shift[i]`.
    pub fn sine(coeffs: Vec<f64>, shift: Vec<f64>) -> Result<Self> {
        if coeffs.len() != shift.len() {
            return Err(Error::ShapeMismatch(
                "sine coefficients and shifts differ in length".into(),
            ));
        }
        let (c, s) = (coeffs.clone(), shift);
        Self::scalar(
            coeffs.len(),
            move |y| c.iter().zip(&s).map(|(a, b)| a * y.sin() + b).collect(),
            move |y| coeffs.iter().map(|a| a * y.cos()).collect(),
            Smoothness::C3,
        )
    }

    /// Decoupled system: component `l` of the state follows the scalar
    /// field `parts[l]`, all sharing the same driver.
    pub fn diagonal(parts: Vec<VectorField>) -> Result<Self> {
        let d = parts.len();
        if d == 0 {
            return Err(Error::InvalidInput(
                "diagonal field needs at least one part".into(),
            ));
        }
        let n = parts[0].driver_dim;
        if parts.iter().any(|p| p.state_dim != 1 || p.driver_dim != n) {
            return Err(Error::ShapeMismatch(
                "diagonal parts must be scalar fields with a common driver dimension".into(),
            ));
        }
        let smoothness = parts.iter().map(|p| p.smoothness).min().expect("nonempty");
        let fparts = parts.clone();
        Self::new(
            d,
            n,
            move |y| {
                fparts
                    .iter()
                    .enumerate()
                    .flat_map(|(l, p)| p.eval(&[y[l]]))
                    .collect()
            },
            move |y| {
                let mut out = vec![0.0; d * n * d];
                for (l, p) in parts.iter().enumerate() {
                    let g = p.jacobian(&[y[l]]);
                    for i in 0..n {
                        out[(l * n + i) * d + l] = g[i];
                    }
                }
                out
            },
            smoothness,
        )
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn driver_dim(&self) -> usize {
        self.driver_dim
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// `f(ξ)`, `d × N` row-major.
    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let v = (self.f)(y);
        assert_eq!(
            v.len(),
            self.state_dim * self.driver_dim,
            "f returned wrong shape"
        );
        v
    }

    /// `∇f(ξ)`, `d × N × d` row-major.
    pub fn jacobian(&self, y: &[f64]) -> Vec<f64> {
        let v = (self.df)(y);
        assert_eq!(
            v.len(),
            self.state_dim * self.driver_dim * self.state_dim,
            "df returned wrong shape"
        );
        v
    }

    /// `f_{2,ij}(ξ) = ∇f_i(ξ) f_j(ξ)`, returned as `d × N × N` with entry
    /// `[(l * N + i) * N + j]`.
    pub fn second_order(&self, y: &[f64], f: &[f64]) -> Vec<f64> {
        let (d, n) = (self.state_dim, self.driver_dim);
        let df = self.jacobian(y);
        let mut out = vec![0.0; d * n * n];
        for l in 0..d {
            for i in 0..n {
                for j in 0..n {
                    out[(l * n + i) * n + j] =
                        (0..d).map(|k| df[(l * n + i) * d + k] * f[k * n + j]).sum();
                }
            }
        }
        out
    }

    /// Germ increment `f_i(ξ) X1^i + f_{2,ij}(ξ) X2^{ij}`.
    pub fn germ(&self, y: &[f64], level1: &[f64], level2: &[f64]) -> Vec<f64> {
        let (d, n) = (self.state_dim, self.driver_dim);
        let f = self.eval(y);
        let f2 = self.second_order(y, &f);
        (0..d)
            .map(|l| {
                let first: f64 = (0..n).map(|i| f[l * n + i] * level1[i]).sum();
                let second: f64 = (0..n * n).map(|e| f2[l * n * n + e] * level2[e]).sum();
                first + second
            })
            .collect()
    }

    /// Largest gap between `df` and central differences of `f` over the
    /// sample points; errors when it exceeds `tol`.
    pub fn check_derivative(&self, samples: &[Vec<f64>], h: f64, tol: f64) -> Result<f64> {
        let (d, n) = (self.state_dim, self.driver_dim);
        let mut worst = 0.0f64;
        for xi in samples {
            if xi.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "sample point has dimension {}, expected {d}",
                    xi.len()
                )));
            }
            let df = self.jacobian(xi);
            for k in 0..d {
                let (mut up, mut down) = (xi.clone(), xi.clone());
                up[k] += h;
                down[k] -= h;
                let (fu, fd) = (self.eval(&up), self.eval(&down));
                for e in 0..d * n {
                    let fd_est = (fu[e] - fd[e]) / (2.0 * h);
                    worst = worst.max((df[e * d + k] - fd_est).abs());
                }
            }
        }
        if worst > tol {
            return Err(Error::InvalidInput(format!(
                "derivative disagrees with finite differences by {worst:e} (tolerance {tol:e})"
            )));
        }
        Ok(worst)
    }
}
