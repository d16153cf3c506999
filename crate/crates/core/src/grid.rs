//! Time grids, grid-valued paths and tables indexed by grid pairs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Checks that `times` has at least two entries, starts at zero and is
/// strictly increasing.
pub fn validate_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "time grid needs at least 2 points, got {}",
            times.len()
        )));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidInput(format!(
            "time grid must start at 0, got {}",
            times[0]
        )));
    }
    for (k, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(Error::InvalidInput(format!(
                "time grid not strictly increasing at index {}: {} -> {}",
                k + 1,
                w[0],
                w[1]
            )));
        }
    }
    Ok(())
}

/// A path sampled on a time grid, with one `dim`-vector per time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridPath")]
pub struct GridPath {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawGridPath {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawGridPath> for GridPath {
    type Error = Error;

    fn try_from(raw: RawGridPath) -> Result<Self> {
        GridPath::new(raw.times, raw.values)
    }
}

impl GridPath {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        validate_times(&times)?;
        if values.len() != times.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput(
                "path values must have dimension >= 1".into(),
            ));
        }
        if let Some(k) = values.iter().position(|v| v.len() != dim) {
            return Err(Error::ShapeMismatch(format!(
                "value {} has dimension {}, expected {}",
                k,
                values[k].len(),
                dim
            )));
        }
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("path values must be finite".into()));
        }
        Ok(Self { times, values })
    }

    /// Scalar path from parallel slices.
    pub fn scalar(times: Vec<f64>, values: &[f64]) -> Result<Self> {
        Self::new(times, values.iter().map(|&v| vec![v]).collect())
    }

    /// Samples `f` on the uniform grid `k * t_end / n_steps`, `k = 0..=n_steps`.
    pub fn sample<F>(n_steps: usize, t_end: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let times = uniform_times(n_steps, t_end)?;
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Values of component `c` along the grid.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[c]).collect()
    }

    /// `δx_{ij} = x_{t_j} - x_{t_i}`.
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        self.values[j]
            .iter()
            .zip(&self.values[i])
            .map(|(b, a)| b - a)
            .collect()
    }

    /// Keeps every `stride`-th point. `len() - 1` must be divisible by `stride`.
    pub fn coarsen(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !(self.len() - 1).is_multiple_of(stride) {
            return Err(Error::InvalidParameter(format!(
                "cannot coarsen a {}-step grid by stride {}",
                self.len() - 1,
                stride
            )));
        }
        let idx = (0..self.len()).step_by(stride);
        Self::new(
            idx.clone().map(|k| self.times[k]).collect(),
            idx.map(|k| self.values[k].clone()).collect(),
        )
    }

    /// CSV with columns `t, x_1..x_d`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|c| format!("x_{c}")));
        let columns: Vec<Vec<f64>> = (0..self.dim()).map(|c| self.component(c)).collect();
        let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
        write_columns_csv(out, &header, &self.times, &refs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `k * t_end / n_steps` for `k = 0..=n_steps`.
pub fn uniform_times(n_steps: usize, t_end: f64) -> Result<Vec<f64>> {
    if n_steps == 0 {
        return Err(Error::InvalidInput("need at least one step".into()));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!(
            "horizon must be positive, got {t_end}"
        )));
    }
    Ok((0..=n_steps)
        .map(|k| k as f64 * t_end / n_steps as f64)
        .collect())
}

/// Formats a float the way all CSV output does: 17 significant digits,
/// scientific notation.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header row and one row per entry of `first`, followed by the
/// matching entries of each of `rest`. NaN marks a missing value and is
/// written as an empty field.
pub fn write_columns_csv<W: Write, S: AsRef<str>>(
    mut out: W,
    header: &[S],
    first: &[f64],
    rest: &[&[f64]],
) -> Result<()> {
    let cell = |x: f64| {
        if x.is_nan() {
            String::new()
        } else {
            fmt_sci(x)
        }
    };
    let names: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
    writeln!(out, "{}", names.join(","))?;
    for (k, x) in first.iter().enumerate() {
        let mut row = vec![cell(*x)];
        row.extend(rest.iter().map(|col| cell(col[k])));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Dense table of `width`-vectors indexed by grid pairs `i <= j`.
///
/// Storage is a full `n x n` block array; entries with `i > j` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    n: usize,
    width: usize,
    data: Vec<f64>,
}

impl PairTable {
    pub fn zeros(n: usize, width: usize) -> Self {
        Self {
            n,
            width,
            data: vec![0.0; n * n * width],
        }
    }

    /// Fills every pair `i <= j` from `f`, which writes into the provided slice.
    pub fn from_fn<F>(n: usize, width: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize, &mut [f64]),
    {
        let mut table = Self::zeros(n, width);
        for i in 0..n {
            for j in i..n {
                f(i, j, table.get_mut(i, j));
            }
        }
        table
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(
            i <= j && j < self.n,
            "pair ({i}, {j}) out of range for n = {}",
            self.n
        );
        (i * self.n + j) * self.width
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.width]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = self.offset(i, j);
        &mut self.data[o..o + self.width]
    }

    /// Scalar entry; only valid for width-1 tables.
    pub fn scalar(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)[0]
    }
}

/// Maximum absolute entry.
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Euclidean norm (Frobenius for row-major matrices).
pub fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
