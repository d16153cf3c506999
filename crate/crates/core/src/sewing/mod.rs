//! Discrete sewing of 2-index germs.
//!
//! On a finite grid the sewn path of a germ `Ξ` is the finest-partition sum
//! `I_{ij} = Σ_{k=i}^{j-1} Ξ_{k,k+1}`, and the sewing remainder is
//! `R_{ij} = I_{ij} - Ξ_{ij}`. A germ whose coboundary `δΞ_{sut}` is
//! controlled by `ω(s,t)^ζ` with `ζ > 1` has `|R_{st}| <= C ω(s,t)^ζ` with a
//! constant that stays bounded as the grid is refined; [`contraction_check`]
//! estimates that constant.

pub mod gronwall;

use crate::error::{Error, Result};
use crate::grid::{euclidean, validate_times, PairTable};
use crate::variation::Control;

type GermFn<'a> = dyn Fn(usize, usize) -> Vec<f64> + Send + Sync + 'a;

/// A vector-valued function on grid pairs. `eval` must be side-effect free.
pub struct Germ<'a> {
    times: Vec<f64>,
    dim: usize,
    eval: Box<GermFn<'a>>,
}

impl<'a> Germ<'a> {
    pub fn new<F>(times: Vec<f64>, dim: usize, eval: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Vec<f64> + Send + Sync + 'a,
    {
        validate_times(&times)?;
        if dim == 0 {
            return Err(Error::InvalidInput("germ dimension must be >= 1".into()));
        }
        Ok(Self {
            times,
            dim,
            eval: Box::new(eval),
        })
    }

    /// Scalar germ.
    pub fn scalar<F>(times: Vec<f64>, eval: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'a,
    {
        Self::new(times, 1, move |i, j| vec![eval(i, j)])
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

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Ξ_{ij}`. Panics if the germ returns a vector of the wrong length or
    /// with non-finite entries.
    pub fn eval(&self, i: usize, j: usize) -> Vec<f64> {
        let v = (self.eval)(i, j);
        assert_eq!(
            v.len(),
            self.dim,
            "germ returned wrong dimension at ({i}, {j})"
        );
        assert!(
            v.iter().all(|x| x.is_finite()),
            "germ returned non-finite value at ({i}, {j})"
        );
        v
    }
}

/// Sewn path of a germ, stored as the cumulative sums `I_{0k}`.
#[derive(Debug, Clone)]
pub struct Sewing {
    cumulative: Vec<Vec<f64>>,
}

impl Sewing {
    /// `I_{ij}`; additive in the pair up to rounding.
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        self.cumulative[j]
            .iter()
            .zip(&self.cumulative[i])
            .map(|(b, a)| b - a)
            .collect()
    }

    /// The sewn path `I_{0k}` itself.
    pub fn path(&self) -> &[Vec<f64>] {
        &self.cumulative
    }

    /// `R_{ij} = I_{ij} - Ξ_{ij}`.
    pub fn remainder(&self, germ: &Germ<'_>, i: usize, j: usize) -> Vec<f64> {
        self.increment(i, j)
            .iter()
            .zip(germ.eval(i, j))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// `R` on every pair `i < j`.
    pub fn remainder_table(&self, germ: &Germ<'_>) -> PairTable {
        PairTable::from_fn(germ.len(), germ.dim(), |i, j, out| {
            if i < j {
                out.copy_from_slice(&self.remainder(germ, i, j));
            }
        })
    }
}

/// Finest-partition sewing of `germ`.
pub fn sew(germ: &Germ<'_>) -> Sewing {
    let mut acc = vec![0.0; germ.dim()];
    let mut cumulative = Vec::with_capacity(germ.len());
    cumulative.push(acc.clone());
    for k in 0..germ.len() - 1 {
        for (a, v) in acc.iter_mut().zip(germ.eval(k, k + 1)) {
            *a += v;
        }
        cumulative.push(acc.clone());
    }
    Sewing { cumulative }
}

/// `I_{ij}` by repeated midpoint insertion: the germ on `[i, j]` is replaced
/// by the germs on its two index halves until every piece is a single grid
/// interval.
pub fn sew_dyadic(germ: &Germ<'_>, i: usize, j: usize) -> Result<Vec<f64>> {
    if i >= j || j >= germ.len() {
        return Err(Error::InvalidRange {
            i,
            j,
            len: germ.len(),
        });
    }
    if j == i + 1 {
        return Ok(germ.eval(i, j));
    }
    let mid = i + (j - i) / 2;
    let left = sew_dyadic(germ, i, mid)?;
    let right = sew_dyadic(germ, mid, j)?;
    Ok(left.iter().zip(&right).map(|(a, b)| a + b).collect())
}

/// Largest `|R_{ij}| / ω(i,j)^ζ` over all grid pairs. A pair with `ω = 0`
/// and a nonzero remainder makes the estimate infinite.
pub fn contraction_check(germ: &Germ<'_>, omega: &Control, zeta: f64) -> Result<f64> {
    if !(zeta > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sewing exponent ζ must exceed 1, got {zeta}"
        )));
    }
    if omega.times() != germ.times() {
        return Err(Error::ShapeMismatch(
            "control and germ live on different grids".into(),
        ));
    }
    let sewn = sew(germ);
    let n = germ.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let r = euclidean(&sewn.remainder(germ, i, j));
            if r == 0.0 {
                continue;
            }
            let w = omega.get(i, j).powf(zeta);
            if w == 0.0 {
                return Ok(f64::INFINITY);
            }
            worst = worst.max(r / w);
        }
    }
    Ok(worst)
}
