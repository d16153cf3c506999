//! Step-2 rough paths restricted to a time grid.
//!
//! Only the blocks over consecutive grid intervals `[t_k, t_{k+1}]` are
//! stored. The increment over any other grid pair is assembled on demand by
//! Chen composition,
//!
//! ```text
//! X1_{st} = X1_{su} + X1_{ut}
//! X2_{st} = X2_{su} + X2_{ut} + X1_{su} ⊗ X1_{ut}
//! ```
//!
//! so every queried table satisfies the Chen relation up to rounding.
//! Off-grid times are never interpolated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{max_abs, uniform_times, validate_times, GridPath, PairTable};

/// Default regularity exponent recorded on lifts.
pub const DEFAULT_P: f64 = 2.5;

/// A level-1 / level-2 pair over one time interval. `level2` is row-major,
/// `level2[i * dim + j]` holding the `(i, j)` iterated integral.
#[derive(Debug, Clone, PartialEq)]
pub struct Increment {
    pub level1: Vec<f64>,
    pub level2: Vec<f64>,
}

impl Increment {
    pub fn zero(dim: usize) -> Self {
        Self {
            level1: vec![0.0; dim],
            level2: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.level1.len()
    }

    pub fn level2_at(&self, i: usize, j: usize) -> f64 {
        self.level2[i * self.dim() + j]
    }

    /// Chen product `self ⊗ next` for adjacent intervals `[s,u]`, `[u,t]`.
    pub fn concat(&self, next: &Increment) -> Increment {
        let mut out = self.clone();
        out.extend(&next.level1, &next.level2);
        out
    }

    /// In-place Chen product with the block `(l1, l2)` on the right.
    pub fn extend(&mut self, l1: &[f64], l2: &[f64]) {
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                self.level2[i * d + j] += l2[i * d + j] + self.level1[i] * l1[j];
            }
        }
        for (a, b) in self.level1.iter_mut().zip(l1) {
            *a += b;
        }
    }
}

/// Per-interval level-1 and level-2 blocks of a rough path on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRoughPath")]
pub struct RoughPathGrid {
    times: Vec<f64>,
    level1: Vec<Vec<f64>>,
    level2: Vec<Vec<f64>>,
    p_exponent: f64,
}

#[derive(Deserialize)]
struct RawRoughPath {
    times: Vec<f64>,
    level1: Vec<Vec<f64>>,
    level2: Vec<Vec<f64>>,
    #[serde(default = "default_p")]
    p_exponent: f64,
}

fn default_p() -> f64 {
    DEFAULT_P
}

impl TryFrom<RawRoughPath> for RoughPathGrid {
    type Error = Error;

    fn try_from(raw: RawRoughPath) -> Result<Self> {
        RoughPathGrid::from_blocks(raw.times, raw.level1, raw.level2, raw.p_exponent)
    }
}

impl RoughPathGrid {
    /// Builds a rough path from explicit consecutive-interval blocks.
    pub fn from_blocks(
        times: Vec<f64>,
        level1: Vec<Vec<f64>>,
        level2: Vec<Vec<f64>>,
        p_exponent: f64,
    ) -> Result<Self> {
        validate_times(&times)?;
        check_p(p_exponent)?;
        let intervals = times.len() - 1;
        if level1.len() != intervals || level2.len() != intervals {
            return Err(Error::ShapeMismatch(format!(
                "{} intervals but {} level-1 and {} level-2 blocks",
                intervals,
                level1.len(),
                level2.len()
            )));
        }
        let dim = level1[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("driver dimension must be >= 1".into()));
        }
        for k in 0..intervals {
            if level1[k].len() != dim || level2[k].len() != dim * dim {
                return Err(Error::ShapeMismatch(format!(
                    "block {k}: expected {dim} level-1 and {} level-2 entries",
                    dim * dim
                )));
            }
        }
        if level1
            .iter()
            .chain(&level2)
            .flatten()
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidInput(
                "rough path blocks must be finite".into(),
            ));
        }
        Ok(Self {
            times,
            level1,
            level2,
            p_exponent,
        })
    }

    /// Canonical lift of the piecewise-linear interpolant of `path`: on each
    /// interval `X1 = Δx` and `X2 = ½ Δx ⊗ Δx`.
    pub fn lift_piecewise_linear(path: &GridPath) -> Result<Self> {
        let (level1, level2) = path_blocks(path, |_, d1, _| outer_half(d1));
        Self::from_blocks(path.times().to_vec(), level1, level2, DEFAULT_P)
    }

    /// Non-geometric blocks `X2 = ½ Δx ⊗ Δx - ½ h Id`, the Itô-type
    /// correction of a Brownian lift. Only useful as a negative control.
    pub fn lift_ito_style(path: &GridPath) -> Result<Self> {
        let (level1, level2) = path_blocks(path, |h, d1, dim| {
            let mut b = outer_half(d1);
            for i in 0..dim {
                b[i * dim + i] -= 0.5 * h;
            }
            b
        });
        Self::from_blocks(path.times().to_vec(), level1, level2, DEFAULT_P)
    }

    pub fn with_p_exponent(mut self, p: f64) -> Result<Self> {
        check_p(p)?;
        self.p_exponent = p;
        Ok(self)
    }

    /// The rough path restricted to its first `points` grid points (at most
    /// `len()`, at least 2).
    pub fn prefix(&self, points: usize) -> Result<Self> {
        if points < 2 || points > self.len() {
            return Err(Error::InvalidRange {
                i: 0,
                j: points,
                len: self.len() + 1,
            });
        }
        Ok(Self {
            times: self.times[..points].to_vec(),
            level1: self.level1[..points - 1].to_vec(),
            level2: self.level2[..points - 1].to_vec(),
            p_exponent: self.p_exponent,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.level1[0].len()
    }

    pub fn p_exponent(&self) -> f64 {
        self.p_exponent
    }

    pub fn level1_block(&self, k: usize) -> &[f64] {
        &self.level1[k]
    }

    pub fn level2_block(&self, k: usize) -> &[f64] {
        &self.level2[k]
    }

    /// `(X1_{t_i t_j}, X2_{t_i t_j})` by left-to-right Chen composition.
    pub fn query(&self, i: usize, j: usize) -> Result<Increment> {
        if i >= j || j >= self.len() {
            return Err(Error::InvalidRange {
                i,
                j,
                len: self.len(),
            });
        }
        let mut acc = Increment::zero(self.dim());
        for k in i..j {
            acc.extend(&self.level1[k], &self.level2[k]);
        }
        Ok(acc)
    }

    /// Calls `visit(j, X_{ij})` for `j = i+1 .. len()-1`, composing one block
    /// at a time.
    pub fn for_each_from<F>(&self, i: usize, mut visit: F)
    where
        F: FnMut(usize, &Increment),
    {
        let mut acc = Increment::zero(self.dim());
        for k in i..self.len() - 1 {
            acc.extend(&self.level1[k], &self.level2[k]);
            visit(k + 1, &acc);
        }
    }

    /// Level-1 values on all pairs (width `dim`, zero on the diagonal).
    pub fn level1_table(&self) -> PairTable {
        let mut table = PairTable::zeros(self.len(), self.dim());
        for i in 0..self.len() {
            self.for_each_from(i, |j, inc| table.get_mut(i, j).copy_from_slice(&inc.level1));
        }
        table
    }

    /// Level-2 values on all pairs (width `dim²`, zero on the diagonal).
    pub fn level2_table(&self) -> PairTable {
        let mut table = PairTable::zeros(self.len(), self.dim() * self.dim());
        for i in 0..self.len() {
            self.for_each_from(i, |j, inc| table.get_mut(i, j).copy_from_slice(&inc.level2));
        }
        table
    }

    /// Largest entry of `table_{st} - table_{su} - table_{ut} - X1_{su} ⊗ X1_{ut}`
    /// over all grid triples `s < u < t`.
    pub fn chen_defect(&self, table: &PairTable) -> Result<f64> {
        let (n, d) = (self.len(), self.dim());
        if table.n() != n || table.width() != d * d {
            return Err(Error::ShapeMismatch(format!(
                "level-2 table is {}x{} with width {}, expected {n}x{n} with width {}",
                table.n(),
                table.n(),
                table.width(),
                d * d
            )));
        }
        let l1 = self.level1_table();
        let mut worst = 0.0f64;
        for s in 0..n {
            for u in s + 1..n {
                let a = l1.get(s, u);
                let su = table.get(s, u);
                for t in u + 1..n {
                    let b = l1.get(u, t);
                    let (st, ut) = (table.get(s, t), table.get(u, t));
                    for p in 0..d {
                        for q in 0..d {
                            let e = p * d + q;
                            let defect = st[e] - su[e] - ut[e] - a[p] * b[q];
                            worst = worst.max(defect.abs());
                        }
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Largest entry of `Sym(X2) - ½ X1 ⊗ X1` over the stored blocks.
    pub fn geometricity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for (l1, l2) in self.level1.iter().zip(&self.level2) {
            for i in 0..d {
                for j in 0..d {
                    let sym = 0.5 * (l2[i * d + j] + l2[j * d + i]);
                    worst = worst.max((sym - 0.5 * l1[i] * l1[j]).abs());
                }
            }
        }
        worst
    }

    /// Cumulative level-1 path `x_{t_k} - x_0` (the driver with its start
    /// value removed).
    pub fn level1_path(&self) -> GridPath {
        let d = self.dim();
        let mut values = Vec::with_capacity(self.len());
        let mut acc = vec![0.0; d];
        values.push(acc.clone());
        for l1 in &self.level1 {
            for (a, b) in acc.iter_mut().zip(l1) {
                *a += b;
            }
            values.push(acc.clone());
        }
        GridPath::new(self.times.clone(), values).expect("rough path grid already validated")
    }

    /// Homogeneous size `|X1|^p + |X2|^{p/2}` of every pair, the summand of
    /// the p-variation control of the rough path.
    pub fn homogeneous_size(&self, i: usize, j: usize) -> Result<f64> {
        let inc = self.query(i, j)?;
        let p = self.p_exponent;
        Ok(crate::grid::euclidean(&inc.level1).powf(p)
            + crate::grid::euclidean(&inc.level2).powf(p / 2.0))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_p(p: f64) -> Result<()> {
    if (2.0..3.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "rough path exponent must lie in [2, 3), got {p}"
        )))
    }
}

fn outer_half(d1: &[f64]) -> Vec<f64> {
    let d = d1.len();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = 0.5 * d1[i] * d1[j];
        }
    }
    out
}

fn path_blocks<F>(path: &GridPath, level2: F) -> (Vec<Vec<f64>>, Vec<Vec<f64>>)
where
    F: Fn(f64, &[f64], usize) -> Vec<f64>,
{
    let t = path.times();
    let mut l1 = Vec::with_capacity(path.len() - 1);
    let mut l2 = Vec::with_capacity(path.len() - 1);
    for k in 0..path.len() - 1 {
        let d1 = path.increment(k, k + 1);
        l2.push(level2(t[k + 1] - t[k], &d1, path.dim()));
        l1.push(d1);
    }
    (l1, l2)
}

/// Brownian motion sampled on the uniform grid of `[0, 1]` with `n_steps`
/// steps, started at the origin. Deterministic in `seed`.
pub fn brownian_driver(n_steps: usize, dim: usize, seed: u64) -> Result<GridPath> {
    if dim == 0 {
        return Err(Error::InvalidInput("Brownian driver needs dim >= 1".into()));
    }
    let times = uniform_times(n_steps, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut current = vec![0.0; dim];
    values.push(current.clone());
    for k in 0..n_steps {
        let h = times[k + 1] - times[k];
        let normal = Normal::new(0.0, h.sqrt()).expect("positive step width");
        for x in current.iter_mut() {
            *x += normal.sample(&mut rng);
        }
        values.push(current.clone());
    }
    GridPath::new(times, values)
}

/// Maximum entrywise distance between two increments.
pub fn increment_distance(a: &Increment, b: &Increment) -> f64 {
    let l1: Vec<f64> = a.level1.iter().zip(&b.level1).map(|(x, y)| x - y).collect();
    let l2: Vec<f64> = a.level2.iter().zip(&b.level2).map(|(x, y)| x - y).collect();
    max_abs(&l1).max(max_abs(&l2))
}
