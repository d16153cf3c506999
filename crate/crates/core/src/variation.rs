//! p-variation of grid paths and 2-index maps, and superadditive controls.
//!
//! Partitions are restricted to grid points. For a 2-index map `g` the
//! control `ω_g(i, j) = sup_P Σ |g_{t_k t_{k+1}}|^p` over partitions `P` of
//! `[t_i, t_j]` is obtained from the recursion
//!
//! ```text
//! M(i, i) = 0,   M(i, j) = max_{i <= k < j} M(i, k) + |g_{k j}|^p
//! ```
//!
//! which is exact for the grid object. A full table costs `O(n³)`; the single
//! value `M(0, n-1)` costs `O(n²)` and is what [`pvar_norm`] computes.

use crate::error::{Error, Result};
use crate::grid::{euclidean, GridPath};

/// Tolerance for superadditivity checks.
pub const SUPERADDITIVITY_TOL: f64 = 1e-12;

/// A nonnegative function on grid pairs `i <= j`, zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Control {
    /// Tabulates `f(i, j)` for all `i < j`. Negative or non-finite values are
    /// rejected.
    pub fn from_fn<F>(times: &[f64], mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let n = times.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "control value at ({i}, {j}) must be finite and nonnegative, got {v}"
                    )));
                }
                values[i * n + j] = v;
            }
        }
        Ok(Self {
            times: times.to_vec(),
            values,
        })
    }

    /// `ω(s, t) = (t - s)^θ`.
    pub fn time_power(times: &[f64], theta: f64) -> Result<Self> {
        Self::from_fn(times, |i, j| (times[j] - times[i]).powf(theta))
    }

    pub fn zero(times: &[f64]) -> Self {
        Self {
            times: times.to_vec(),
            values: vec![0.0; times.len() * times.len()],
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `ω(t_i, t_j)`; zero when `i >= j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            0.0
        } else {
            self.values[i * self.len() + j]
        }
    }

    /// `max_{i<k<j} ω(i,k) + ω(k,j) - ω(i,j)`; a control returns a value
    /// `<= 1e-12`. Zero for grids with fewer than three points.
    pub fn superadditivity_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for k in i + 1..n {
                for j in k + 1..n {
                    worst = worst.max(self.get(i, k) + self.get(k, j) - self.get(i, j));
                }
            }
        }
        if worst == f64::NEG_INFINITY {
            0.0
        } else {
            worst
        }
    }

    pub fn is_superadditive(&self) -> bool {
        self.superadditivity_defect() <= SUPERADDITIVITY_TOL
    }

    /// `ω^θ`, a control again for `θ >= 1`.
    pub fn powf(&self, theta: f64) -> Result<Self> {
        if !(theta >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "control power must be >= 1, got {theta}"
            )));
        }
        Ok(Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v.powf(theta)).collect(),
        })
    }

    /// `c · ω` for `c >= 0`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "control scale must be finite and >= 0, got {c}"
            )));
        }
        Ok(Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        })
    }

    /// Whether `ω(i, j) <= ω(i', j')` whenever `[i, j] ⊆ [i', j']`.
    pub fn is_monotone_under_inclusion(&self) -> bool {
        let n = self.len();
        for i in 0..n {
            for j in i + 1..n {
                let v = self.get(i, j);
                let widen_left = i > 0 && self.get(i - 1, j) < v;
                let widen_right = j + 1 < n && self.get(i, j + 1) < v;
                if widen_left || widen_right {
                    return false;
                }
            }
        }
        true
    }
}

/// Ways of combining two controls on the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlOp {
    /// `a + b`.
    Sum,
    /// `a + b^θ` with `θ >= 1`.
    PowerMix { theta: f64 },
}

pub fn control_algebra(a: &Control, b: &Control, op: ControlOp) -> Result<Control> {
    if a.times != b.times {
        return Err(Error::ShapeMismatch(
            "controls are defined on different grids".into(),
        ));
    }
    let b = match op {
        ControlOp::Sum => b.clone(),
        ControlOp::PowerMix { theta } => b.powf(theta)?,
    };
    Ok(Control {
        times: a.times.clone(),
        values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
    })
}

/// p-variation norm together with the full control table.
#[derive(Debug, Clone)]
pub struct PVarResult {
    pub p: f64,
    pub norm: f64,
    pub control: Control,
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "p-variation exponent must be >= 1, got {p}"
        )))
    }
}

/// Full p-variation control of the 2-index map whose size on pair `(i, j)`
/// is `size(i, j) >= 0`.
pub fn pvar_2index<F>(times: &[f64], size: F, p: f64) -> Result<PVarResult>
where
    F: Fn(usize, usize) -> f64,
{
    check_exponent(p)?;
    let control = variation_table(times, size, p)?;
    let norm = control.get(0, times.len() - 1).powf(1.0 / p);
    Ok(PVarResult { p, norm, control })
}

/// p-variation of a path: the 2-index map is its increment, measured in the
/// Euclidean norm.
pub fn pvar_path(y: &GridPath, p: f64) -> Result<PVarResult> {
    pvar_2index(y.times(), |i, j| euclidean(&y.increment(i, j)), p)
}

/// The single value `‖g‖_{p-var}` over the whole grid in `O(n²)`.
pub fn pvar_norm<F>(n: usize, size: F, p: f64) -> Result<f64>
where
    F: Fn(usize, usize) -> f64,
{
    check_exponent(p)?;
    Ok(variation_sum(n, size, p).powf(1.0 / p))
}

/// `sup_P Σ size^q` over the whole grid for any `q > 0`.
///
/// Exponents below one are meaningful for non-additive 2-index maps such as
/// solution remainders, whose natural scale is `q = p/3`.
pub fn variation_sum<F>(n: usize, size: F, q: f64) -> f64
where
    F: Fn(usize, usize) -> f64,
{
    assert!(q > 0.0, "variation exponent must be positive");
    if n < 2 {
        return 0.0;
    }
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        best[j] = (0..j)
            .map(|k| best[k] + size(k, j).powf(q))
            .fold(f64::NEG_INFINITY, f64::max);
    }
    best[n - 1]
}

/// Full table `M(i, j)` for any exponent `q > 0`.
pub(crate) fn variation_table<F>(times: &[f64], size: F, q: f64) -> Result<Control>
where
    F: Fn(usize, usize) -> f64,
{
    let n = times.len();
    let mut pow = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let s = size(i, j);
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "size of pair ({i}, {j}) must be finite and nonnegative, got {s}"
                )));
            }
            pow[i * n + j] = s.powf(q);
        }
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let mut best = f64::NEG_INFINITY;
            for k in i..j {
                best = best.max(values[i * n + k] + pow[k * n + j]);
            }
            values[i * n + j] = best;
        }
    }
    Ok(Control {
        times: times.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn up_down_path_p2() {
        let y = GridPath::scalar(grid(3), &[0.0, 1.0, 0.0]).unwrap();
        let r = pvar_path(&y, 2.0).unwrap();
        assert_eq!(r.control.get(0, 2), 2.0);
        let r3 = pvar_path(&y, 3.0).unwrap();
        assert_eq!(r3.control.get(0, 2), 2.0);
    }

    #[test]
    fn monotone_path_p1_is_total_increment() {
        let vals = [0.0, 0.3, 0.35, 1.0, 2.5];
        let y = GridPath::scalar(grid(5), &vals).unwrap();
        let r = pvar_path(&y, 1.0).unwrap();
        assert!((r.norm - 2.5).abs() <= 1e-15);
    }

    #[test]
    fn single_interval() {
        let y = GridPath::scalar(grid(2), &[1.0, -2.0]).unwrap();
        assert_eq!(
            pvar_path(&y, 2.5).unwrap().norm,
            3.0f64.powf(2.5).powf(1.0 / 2.5)
        );
        let r = pvar_2index(&grid(2), |_, _| 0.7, 3.0).unwrap();
        assert!((r.norm - 0.7).abs() <= 1e-15);
    }

    #[test]
    fn constant_path_zero() {
        let y = GridPath::scalar(grid(6), &[2.0; 6]).unwrap();
        assert_eq!(pvar_path(&y, 2.0).unwrap().norm, 0.0);
    }

    #[test]
    fn rejects_small_exponent() {
        let y = GridPath::scalar(grid(3), &[0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            pvar_path(&y, 0.5),
            Err(Error::InvalidParameter(_))
        ));
        assert!(pvar_norm(3, |_, _| 1.0, 0.9).is_err());
    }

    #[test]
    fn norm_matches_eager_single_value() {
        let vals: Vec<f64> = (0..20).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
        let y = GridPath::scalar(grid(20), &vals).unwrap();
        let size = |i: usize, j: usize| (vals[j] - vals[i]).abs();
        let full = pvar_2index(y.times(), size, 2.5).unwrap();
        let single = pvar_norm(20, size, 2.5).unwrap();
        assert!((full.norm - single).abs() <= 1e-12 * single);
    }

    #[test]
    fn time_square_is_control_sqrt_is_not() {
        let t = vec![0.0, 0.5, 1.0];
        assert!(
            Control::time_power(&t, 2.0)
                .unwrap()
                .superadditivity_defect()
                <= 0.0
        );
        let sqrt = Control::time_power(&t, 0.5).unwrap();
        let expected = 2.0 * 0.5f64.sqrt() - 1.0;
        assert!((sqrt.superadditivity_defect() - expected).abs() <= 1e-15);
        assert!(!sqrt.is_superadditive());
    }

    #[test]
    fn algebra_and_mismatch() {
        let t = grid(5);
        let a = Control::time_power(&t, 1.5).unwrap();
        let z = Control::zero(&t);
        assert_eq!(control_algebra(&z, &a, ControlOp::Sum).unwrap(), a);
        let mix = control_algebra(&a, &a, ControlOp::PowerMix { theta: 3.0 }).unwrap();
        assert!(mix.is_superadditive());
        assert!(control_algebra(&a, &a, ControlOp::PowerMix { theta: 0.5 }).is_err());
        let other = Control::zero(&grid(4));
        assert!(control_algebra(&a, &other, ControlOp::Sum).is_err());
    }

    #[test]
    fn negative_values_rejected() {
        assert!(Control::from_fn(&grid(3), |_, _| -1.0).is_err());
        assert!(pvar_2index(&grid(3), |_, _| f64::NAN, 2.0).is_err());
    }
}
