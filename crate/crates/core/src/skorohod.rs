//! Skorohod reflection on the half-line and on the orthant.
//!
//! For a scalar driver `g` with `g_0 >= 0` the reflection measure is the
//! running maximum `m_k = max(0, max_{j<=k} -g_j)`, computed here by the
//! recursion `m_{k+1} = max(m_k, -g_{k+1})`, and `y = g + m`. Whenever `m`
//! increases on a step, the new state `y_{k+1}` is exactly zero. The orthant
//! map reflects each coordinate independently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    HalfLine,
    Orthant(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionOutput {
    pub domain: Domain,
    pub y: GridPath,
    pub m: GridPath,
}

impl ReflectionOutput {
    /// `Σ_k y_{k+1} · Δm_k` summed over components; zero for a solution.
    pub fn complementarity_sum(&self) -> f64 {
        complementarity_sum(&self.y, &self.m)
    }

    /// Number of steps on which any component of `m` increased.
    pub fn reflection_steps(&self) -> usize {
        reflection_steps(&self.m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV with columns `t, g, y, m` (scalar) or `t, g_c, y_c, m_c` per
    /// component.
    pub fn write_csv<W: std::io::Write>(&self, g: &GridPath, out: W) -> Result<()> {
        let d = self.y.dim();
        let mut header = vec!["t".to_string()];
        let mut cols = Vec::new();
        for c in 0..d {
            let suffix = if d == 1 {
                String::new()
            } else {
                format!("_{}", c + 1)
            };
            header.push(format!("g{suffix}"));
            header.push(format!("y{suffix}"));
            header.push(format!("m{suffix}"));
            cols.push(g.component(c));
            cols.push(self.y.component(c));
            cols.push(self.m.component(c));
        }
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        crate::grid::write_columns_csv(out, &header, self.y.times(), &refs)
    }
}

pub(crate) fn complementarity_sum(y: &GridPath, m: &GridPath) -> f64 {
    let mut total = 0.0;
    for k in 0..y.len() - 1 {
        for c in 0..y.dim() {
            total += y.value(k + 1)[c] * (m.value(k + 1)[c] - m.value(k)[c]);
        }
    }
    total
}

pub(crate) fn reflection_steps(m: &GridPath) -> usize {
    (0..m.len() - 1)
        .filter(|&k| (0..m.dim()).any(|c| m.value(k + 1)[c] > m.value(k)[c]))
        .count()
}

/// Reflects one scalar series. Returns `(y, m)`.
fn reflect_series(g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut m = Vec::with_capacity(g.len());
    let mut y = Vec::with_capacity(g.len());
    let mut level = 0.0f64;
    for &gk in g {
        if -gk > level {
            level = -gk;
        }
        m.push(level);
        y.push(gk + level);
    }
    (y, m)
}

fn check_start(g: &GridPath) -> Result<()> {
    if let Some(c) = g.value(0).iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidInitialCondition(format!(
            "driver starts outside the domain: component {} is {}",
            c + 1,
            g.value(0)[c]
        )));
    }
    Ok(())
}

/// One-dimensional Skorohod map on `[0, ∞)`.
pub fn skorohod_1d(g: &GridPath) -> Result<ReflectionOutput> {
    if g.dim() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "half-line reflection needs a scalar driver, got dimension {}",
            g.dim()
        )));
    }
    let mut out = skorohod_orthant(g)?;
    out.domain = Domain::HalfLine;
    Ok(out)
}

/// Componentwise Skorohod map on the closed orthant `[0, ∞)^d`.
pub fn skorohod_orthant(g: &GridPath) -> Result<ReflectionOutput> {
    check_start(g)?;
    let d = g.dim();
    let mut y = vec![vec![0.0; d]; g.len()];
    let mut m = vec![vec![0.0; d]; g.len()];
    for c in 0..d {
        let (yc, mc) = reflect_series(&g.component(c));
        for k in 0..g.len() {
            y[k][c] = yc[k];
            m[k][c] = mc[k];
        }
    }
    Ok(ReflectionOutput {
        domain: Domain::Orthant(d),
        y: GridPath::new(g.times().to_vec(), y)?,
        m: GridPath::new(g.times().to_vec(), m)?,
    })
}

/// Outcome of the measure bound `δm_{st} <= 8 ‖g‖_{0,[s,t]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub max_ratio: f64,
    pub pass: bool,
}

/// Constant in the a-priori measure bound.
pub const SKOROHOD_BOUND: f64 = 8.0;

/// Largest `δm_{st} / ‖g‖_{0,[s,t]}` over grid pairs and components, where
/// `‖g‖_{0,[s,t]}` is the oscillation `max - min` of `g` on `[s, t]`.
/// A zero oscillation with zero `δm` counts as ratio 0; a zero oscillation
/// with positive `δm` gives an infinite ratio.
pub fn check_skorohod_bound(g: &GridPath, out: &ReflectionOutput) -> Result<BoundCheck> {
    if g.len() != out.m.len() || g.dim() != out.m.dim() {
        return Err(Error::ShapeMismatch(
            "driver and reflection output differ in shape".into(),
        ));
    }
    let n = g.len();
    let mut worst = 0.0f64;
    for c in 0..g.dim() {
        let gc = g.component(c);
        let mc = out.m.component(c);
        for s in 0..n {
            let (mut lo, mut hi) = (gc[s], gc[s]);
            for t in s + 1..n {
                lo = lo.min(gc[t]);
                hi = hi.max(gc[t]);
                let dm = mc[t] - mc[s];
                let osc = hi - lo;
                let ratio = if dm == 0.0 {
                    0.0
                } else if osc == 0.0 {
                    f64::INFINITY
                } else {
                    dm / osc
                };
                worst = worst.max(ratio);
            }
        }
    }
    Ok(BoundCheck {
        max_ratio: worst,
        pass: worst <= SKOROHOD_BOUND,
    })
}

/// `‖y¹ - y²‖_∞ / ‖g¹ - g²‖_∞` for the half-line map (0/0 counts as 0).
pub fn check_lipschitz(g1: &GridPath, g2: &GridPath) -> Result<f64> {
    if g1.times() != g2.times() {
        return Err(Error::ShapeMismatch(
            "drivers live on different grids".into(),
        ));
    }
    let (o1, o2) = (skorohod_orthant(g1)?, skorohod_orthant(g2)?);
    let sup_diff = |a: &GridPath, b: &GridPath| {
        a.values()
            .iter()
            .zip(b.values())
            .flat_map(|(u, v)| u.iter().zip(v).map(|(x, y)| (x - y).abs()))
            .fold(0.0f64, f64::max)
    };
    let num = sup_diff(&o1.y, &o2.y);
    let den = sup_diff(g1, g2);
    Ok(if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    })
}

/// `Ψ(λ) = C1 [e^{p C2 (1 + λ^{1/p})} λ + 1] (e^{C2 (1 + λ^{1/p})} + 1) λ^{1/p}`.
pub fn psi_bound(lambda: f64, p: f64, c1: f64, c2: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "λ must be >= 0, got {lambda}"
        )));
    }
    if !(2.0..3.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [2, 3), got {p}"
        )));
    }
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "C1 and C2 must be positive, got {c1} and {c2}"
        )));
    }
    let root = lambda.powf(1.0 / p);
    let expo = c2 * (1.0 + root);
    Ok(c1 * ((p * expo).exp() * lambda + 1.0) * (expo.exp() + 1.0) * root)
}

/// `G_I(λ) = Ψ(C_{f,p} (1 + ω_X(I) λ^p))`.
pub fn psi_interval(lambda: f64, p: f64, c1: f64, c2: f64, c_fp: f64, omega_x: f64) -> Result<f64> {
    if !(lambda >= 0.0 && c_fp > 0.0 && omega_x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need λ >= 0, C_fp > 0, ω_X(I) >= 0; got {lambda}, {c_fp}, {omega_x}"
        )));
    }
    psi_bound(c_fp * (1.0 + omega_x * lambda.powf(p)), p, c1, c2)
}
