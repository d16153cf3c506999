//! Step-2 scheme with reflection at zero.
//!
//! Each step applies the full germ and then reflects:
//!
//! ```text
//! ỹ        = y_k + f_i(y_k) X1^i_{k,k+1} + f_{2,ij}(y_k) X2^{ij}_{k,k+1}
//! Δm_k     = max(0, -ỹ)
//! y_{k+1}  = ỹ + Δm_k
//! ```
//!
//! componentwise in the orthant case. On consecutive intervals the local
//! expansion `δy = germ + δm` therefore holds with zero remainder; over
//! longer pairs the remainder `y♮ = δy - germ - δm` is the quantity whose
//! decay certifies the scheme.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{euclidean, max_abs, write_columns_csv, GridPath, PairTable};
use crate::roughpath::RoughPathGrid;
use crate::skorohod::{self, BoundCheck, Domain, ReflectionOutput};
use crate::variation::variation_sum;

use super::field::{Smoothness, VectorField};

/// Largest symmetric-part defect still accepted as a geometric driver.
pub const GEOMETRIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveOptions {
    /// Accept drivers whose level-2 symmetric part is not `½ X1 ⊗ X1`.
    pub allow_non_geometric: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub y: GridPath,
    pub m: GridPath,
    /// Steps on which some component of `m` increased.
    pub reflection_steps: usize,
    /// Coefficients are tagged bounded `C³`, the class in which the solution
    /// concept is known to be well posed.
    pub within_hypothesis: bool,
}

impl SolveResult {
    /// `Δm_k = m_{k+1} - m_k`.
    pub fn dm(&self) -> Vec<Vec<f64>> {
        (0..self.m.len() - 1)
            .map(|k| self.m.increment(k, k + 1))
            .collect()
    }

    /// Total variation of `m`, summed over components. Equal to `m_T` since
    /// `m` is nondecreasing from zero.
    pub fn m_total_variation(&self) -> f64 {
        self.m.values().last().expect("nonempty").iter().sum()
    }

    /// `g = y - m`, the unreflected driver seen by the Skorohod map.
    pub fn reflection_driver(&self) -> GridPath {
        let values = self
            .y
            .values()
            .iter()
            .zip(self.m.values())
            .map(|(y, m)| y.iter().zip(m).map(|(a, b)| a - b).collect())
            .collect();
        GridPath::new(self.y.times().to_vec(), values).expect("same grid as y")
    }

    pub fn complementarity_sum(&self) -> f64 {
        skorohod::complementarity_sum(&self.y, &self.m)
    }

    /// Measure bound `δm_{st} <= 8 ‖g‖_{0,[s,t]}` for `g = y - m`.
    pub fn skorohod_bound(&self) -> Result<BoundCheck> {
        let out = ReflectionOutput {
            domain: Domain::Orthant(self.y.dim()),
            y: self.y.clone(),
            m: self.m.clone(),
        };
        skorohod::check_skorohod_bound(&self.reflection_driver(), &out)
    }

    /// `y♮_{ij} = δy_{ij} - f_i(y_i) X1^i_{ij} - f_{2,ij}(y_i) X2^{ij}_{ij} - δm_{ij}`.
    pub fn remainder(
        &self,
        vf: &VectorField,
        x: &RoughPathGrid,
        i: usize,
        j: usize,
    ) -> Result<Vec<f64>> {
        let inc = x.query(i, j)?;
        Ok(self.remainder_from(vf, i, j, &inc.level1, &inc.level2))
    }

    fn remainder_from(
        &self,
        vf: &VectorField,
        i: usize,
        j: usize,
        level1: &[f64],
        level2: &[f64],
    ) -> Vec<f64> {
        let germ = vf.germ(self.y.value(i), level1, level2);
        let dy = self.y.increment(i, j);
        let dm = self.m.increment(i, j);
        (0..dy.len()).map(|l| dy[l] - germ[l] - dm[l]).collect()
    }

    /// `y♮` on every grid pair (zero on the diagonal).
    pub fn remainder_table(&self, vf: &VectorField, x: &RoughPathGrid) -> PairTable {
        let mut table = PairTable::zeros(self.y.len(), self.y.dim());
        for i in 0..self.y.len() {
            x.for_each_from(i, |j, inc| {
                let r = self.remainder_from(vf, i, j, &inc.level1, &inc.level2);
                table.get_mut(i, j).copy_from_slice(&r);
            });
        }
        table
    }

    /// CSV with columns `t, y, m, dm` (suffixed by component when `d > 1`);
    /// `dm` on row `k` is `m_k - m_{k-1}`, zero on the first row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let d = self.y.dim();
        let mut header = vec!["t".to_string()];
        let mut cols = Vec::new();
        for c in 0..d {
            let suffix = if d == 1 {
                String::new()
            } else {
                format!("_{}", c + 1)
            };
            header.extend([
                format!("y{suffix}"),
                format!("m{suffix}"),
                format!("dm{suffix}"),
            ]);
            let m = self.m.component(c);
            let mut dm = vec![0.0];
            dm.extend(m.windows(2).map(|w| w[1] - w[0]));
            cols.extend([self.y.component(c), m, dm]);
        }
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        write_columns_csv(out, &header, self.y.times(), &refs)
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            y: &'a GridPath,
            m: &'a GridPath,
            reflection_steps: usize,
            m_total_variation: f64,
            within_hypothesis: bool,
        }
        Ok(serde_json::to_string_pretty(&Doc {
            y: &self.y,
            m: &self.m,
            reflection_steps: self.reflection_steps,
            m_total_variation: self.m_total_variation(),
            within_hypothesis: self.within_hypothesis,
        })?)
    }
}

fn check_driver(vf: &VectorField, x: &RoughPathGrid, opts: SolveOptions) -> Result<()> {
    if vf.driver_dim() != x.dim() {
        return Err(Error::ShapeMismatch(format!(
            "vector field expects a {}-dimensional driver, rough path has dimension {}",
            vf.driver_dim(),
            x.dim()
        )));
    }
    let defect = x.geometricity_defect();
    if defect > GEOMETRIC_TOL && !opts.allow_non_geometric {
        return Err(Error::NonGeometric { defect });
    }
    Ok(())
}

fn check_start(vf: &VectorField, a: &[f64], reflected: bool) -> Result<()> {
    if a.len() != vf.state_dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial condition has dimension {}, vector field state has {}",
            a.len(),
            vf.state_dim()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInitialCondition(
            "initial condition must be finite".into(),
        ));
    }
    if reflected {
        if let Some(c) = a.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidInitialCondition(format!(
                "initial condition outside the domain: component {} is {}",
                c + 1,
                a[c]
            )));
        }
    }
    Ok(())
}

fn step(vf: &VectorField, x: &RoughPathGrid, k: usize, y: &[f64]) -> Vec<f64> {
    let inc = vf.germ(y, x.level1_block(k), x.level2_block(k));
    y.iter().zip(inc).map(|(a, b)| a + b).collect()
}

/// Reflected solve on `[0, ∞)^d` from `a`.
pub fn solve_reflected_orthant(
    vf: &VectorField,
    x: &RoughPathGrid,
    a: &[f64],
    opts: SolveOptions,
) -> Result<SolveResult> {
    check_driver(vf, x, opts)?;
    check_start(vf, a, true)?;
    let d = vf.state_dim();
    let n = x.len();
    let mut ys = Vec::with_capacity(n);
    let mut ms = Vec::with_capacity(n);
    ys.push(a.to_vec());
    ms.push(vec![0.0; d]);
    let mut reflection_steps = 0;
    for k in 0..n - 1 {
        let mut next = step(vf, x, k, &ys[k]);
        let mut m = ms[k].clone();
        let mut reflected = false;
        for c in 0..d {
            // ỹ = 0 exactly carries no mass.
            if next[c] < 0.0 {
                let push = -next[c];
                next[c] += push;
                m[c] += push;
                reflected = true;
            }
        }
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "solution blew up at step {k} (t = {})",
                x.times()[k + 1]
            )));
        }
        reflection_steps += usize::from(reflected);
        ys.push(next);
        ms.push(m);
    }
    Ok(SolveResult {
        y: GridPath::new(x.times().to_vec(), ys)?,
        m: GridPath::new(x.times().to_vec(), ms)?,
        reflection_steps,
        within_hypothesis: vf.smoothness() == Smoothness::C3,
    })
}

/// Reflected solve on `[0, ∞)` from `a >= 0`.
pub fn solve_reflected(
    vf: &VectorField,
    x: &RoughPathGrid,
    a: f64,
    opts: SolveOptions,
) -> Result<SolveResult> {
    if vf.state_dim() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "half-line solve needs a scalar field, state dimension is {}",
            vf.state_dim()
        )));
    }
    solve_reflected_orthant(vf, x, &[a], opts)
}

/// The same scheme without reflection.
pub fn solve_unreflected(vf: &VectorField, x: &RoughPathGrid, a: &[f64]) -> Result<GridPath> {
    if vf.driver_dim() != x.dim() {
        return Err(Error::ShapeMismatch(format!(
            "vector field expects a {}-dimensional driver, rough path has dimension {}",
            vf.driver_dim(),
            x.dim()
        )));
    }
    check_start(vf, a, false)?;
    let mut ys = Vec::with_capacity(x.len());
    ys.push(a.to_vec());
    for k in 0..x.len() - 1 {
        let next = step(vf, x, k, &ys[k]);
        ys.push(next);
    }
    GridPath::new(x.times().to_vec(), ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemainderDiagnostics {
    /// `‖y♮‖` in `(p/3)`-variation over the grid.
    pub pvar_p3: f64,
    /// Largest `|y♮|` over consecutive pairs (zero up to rounding).
    pub max_adjacent: f64,
    /// Largest `|y♮|` over pairs spanning 2 to [`LOCAL_SPAN`] grid steps.
    pub max_local: f64,
    /// Largest `|y♮|` over all non-adjacent pairs.
    pub max_nonadjacent: f64,
}

/// Widest span, in grid steps, counted as local in [`RemainderDiagnostics`].
pub const LOCAL_SPAN: usize = 4;

pub fn remainder_diagnostics(
    r: &SolveResult,
    x: &RoughPathGrid,
    vf: &VectorField,
    p: f64,
) -> Result<RemainderDiagnostics> {
    if !(2.0..3.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [2, 3), got {p}"
        )));
    }
    if r.y.times() != x.times() {
        return Err(Error::ShapeMismatch(
            "solution and driver grids differ".into(),
        ));
    }
    let table = r.remainder_table(vf, x);
    let n = x.len();
    let q = p / 3.0;
    let pvar_p3 = variation_sum(n, |i, j| euclidean(table.get(i, j)), q).powf(1.0 / q);
    let (mut adjacent, mut local, mut nonadjacent) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let v = max_abs(table.get(i, j));
            match j - i {
                1 => adjacent = adjacent.max(v),
                s => {
                    nonadjacent = nonadjacent.max(v);
                    if s <= LOCAL_SPAN {
                        local = local.max(v);
                    }
                }
            }
        }
    }
    Ok(RemainderDiagnostics {
        pvar_p3,
        max_adjacent: adjacent,
        max_local: local,
        max_nonadjacent: nonadjacent,
    })
}
