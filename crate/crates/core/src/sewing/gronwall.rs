//! Rough Gronwall bound.
//!
//! If a nonnegative path satisfies
//! `δg_{st} <= C (sup_{r<=t} g_r) ω₁(s,t)^{1/κ} + ω₂(s,t)` whenever
//! `ω₁(s,t) <= L`, then
//! `sup_{t<=T} g_t <= 2 e^{c ω₁(0,T)} (g_0 + sup_{t<=T} ω₂(0,t) e^{-c ω₁(0,t)})`
//! with `c = max(1/L, (2 C e²)^κ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::variation::Control;

/// Relative slack on the conclusion comparison, absorbing rounding in the
/// exponentials.
const CONCLUSION_RTOL: f64 = 1e-12;

/// `c_{L,κ} = max(1/L, (2 C e²)^κ)`.
pub fn gronwall_constant(c: f64, l: f64, kappa: f64) -> Result<f64> {
    if !(c > 0.0) || !(l > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Gronwall constants C and L must be positive, got C = {c}, L = {l}"
        )));
    }
    if !(kappa >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "κ must be >= 1, got {kappa}"
        )));
    }
    let e2 = std::f64::consts::E * std::f64::consts::E;
    Ok((1.0 / l).max((2.0 * c * e2).powf(kappa)))
}

/// Inputs of the Gronwall lemma on a grid.
#[derive(Debug, Clone)]
pub struct GronwallData {
    pub g: Vec<f64>,
    pub omega1: Control,
    pub omega2: Control,
    pub c: f64,
    pub l: f64,
    pub kappa: f64,
}

impl GronwallData {
    pub fn new(
        g: Vec<f64>,
        omega1: Control,
        omega2: Control,
        c: f64,
        l: f64,
        kappa: f64,
    ) -> Result<Self> {
        gronwall_constant(c, l, kappa)?;
        if g.len() != omega1.len() || g.len() != omega2.len() || g.len() < 2 {
            return Err(Error::ShapeMismatch(format!(
                "path has {} points, controls have {} and {}",
                g.len(),
                omega1.len(),
                omega2.len()
            )));
        }
        if omega1.times() != omega2.times() {
            return Err(Error::ShapeMismatch(
                "ω₁ and ω₂ live on different grids".into(),
            ));
        }
        if g.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "Gronwall path must be finite and >= 0".into(),
            ));
        }
        if !omega1.is_superadditive() {
            return Err(Error::InvalidInput(format!(
                "ω₁ is not a control (superadditivity defect {:e})",
                omega1.superadditivity_defect()
            )));
        }
        Ok(Self {
            g,
            omega1,
            omega2,
            c,
            l,
            kappa,
        })
    }

    pub fn constant(&self) -> f64 {
        gronwall_constant(self.c, self.l, self.kappa).expect("validated at construction")
    }
}

/// Right-hand side of the conclusion on `[0, t_T]`, sup over grid points.
pub fn gronwall_bound(d: &GronwallData, t_index: usize) -> Result<f64> {
    if t_index >= d.g.len() {
        return Err(Error::InvalidRange {
            i: 0,
            j: t_index,
            len: d.g.len(),
        });
    }
    let c = d.constant();
    let tail = (0..=t_index)
        .map(|t| d.omega2.get(0, t) * (-c * d.omega1.get(0, t)).exp())
        .fold(0.0f64, f64::max);
    Ok(2.0 * (c * d.omega1.get(0, t_index)).exp() * (d.g[0] + tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallReport {
    /// The increment inequality holds on every pair with `ω₁(s,t) <= L`.
    pub pairwise_holds: bool,
    /// Every consecutive grid interval has `ω₁ <= 1/c_{L,κ}`. This is the
    /// grid form of regularity of `ω₁`: without it a single cell can carry
    /// an unconstrained jump.
    pub grid_resolved: bool,
    /// `pairwise_holds && grid_resolved`.
    pub hypothesis_holds: bool,
    /// `sup_{t<=T} g_t` is below the bound for every horizon `T` on the grid.
    pub conclusion_holds: bool,
    /// Largest `sup_{t<=T} g_t / bound(T)` over horizons with a positive bound.
    pub worst_ratio: f64,
}

impl GronwallReport {
    /// The lemma read as an implication. `false` means a counterexample.
    pub fn consistent(&self) -> bool {
        !self.hypothesis_holds || self.conclusion_holds
    }
}

pub fn gronwall_verify(d: &GronwallData) -> GronwallReport {
    let n = d.g.len();
    let c = d.constant();
    let mut running_sup = vec![0.0f64; n];
    let mut acc = 0.0f64;
    for (k, &v) in d.g.iter().enumerate() {
        acc = acc.max(v);
        running_sup[k] = acc;
    }

    let mut pairwise_holds = true;
    'pairs: for s in 0..n {
        for t in s + 1..n {
            let w1 = d.omega1.get(s, t);
            if w1 > d.l {
                continue;
            }
            let rhs = d.c * running_sup[t] * w1.powf(1.0 / d.kappa) + d.omega2.get(s, t);
            if d.g[t] - d.g[s] > rhs {
                pairwise_holds = false;
                break 'pairs;
            }
        }
    }

    let grid_resolved = (0..n - 1).all(|k| d.omega1.get(k, k + 1) <= 1.0 / c);

    let mut conclusion_holds = true;
    let mut worst_ratio = 0.0f64;
    for t in 0..n {
        let bound = gronwall_bound(d, t).expect("index in range");
        let lhs = running_sup[t];
        if lhs > bound * (1.0 + CONCLUSION_RTOL) {
            conclusion_holds = false;
        }
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(lhs / bound);
        } else if lhs > 0.0 {
            worst_ratio = f64::INFINITY;
        }
    }

    GronwallReport {
        pairwise_holds,
        grid_resolved,
        hypothesis_holds: pairwise_holds && grid_resolved,
        conclusion_holds,
        worst_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::uniform_times;

    #[test]
    fn constant_arithmetic() {
        let e2 = std::f64::consts::E.powi(2);
        let v = gronwall_constant(1.0, 1.0, 1.0).unwrap();
        assert!((v - 2.0 * e2).abs() <= 1e-12);
        assert!((v - 14.778).abs() < 1e-3);
        assert_eq!(gronwall_constant(1e-9, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(gronwall_constant(1.0, 1e-6, 1.0).unwrap(), 1e6);
        assert!(gronwall_constant(0.0, 1.0, 1.0).is_err());
        assert!(gronwall_constant(1.0, -1.0, 1.0).is_err());
        assert!(gronwall_constant(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn zero_path_trivially_consistent() {
        let times = uniform_times(200, 1.0).unwrap();
        let w = Control::time_power(&times, 1.0).unwrap();
        let d = GronwallData::new(vec![0.0; 201], w.clone(), w, 1.0, 1.0, 1.0).unwrap();
        let r = gronwall_verify(&d);
        assert!(r.hypothesis_holds && r.conclusion_holds);
    }

    #[test]
    fn constant_path_bound() {
        let times = uniform_times(10, 1.0).unwrap();
        let w1 = Control::time_power(&times, 2.0).unwrap();
        let d = GronwallData::new(vec![0.7; 11], w1, Control::zero(&times), 0.5, 1.0, 1.0).unwrap();
        let c = d.constant();
        let b = gronwall_bound(&d, 10).unwrap();
        assert!((b - 2.0 * c.exp() * 0.7).abs() <= 1e-12 * b);
        assert!(b >= 0.7);
    }

    #[test]
    fn linear_omega2_gives_twice_horizon() {
        let times = uniform_times(8, 3.0).unwrap();
        let w2 = Control::time_power(&times, 1.0).unwrap();
        let d = GronwallData::new(vec![0.0; 9], Control::zero(&times), w2, 1.0, 1.0, 1.0).unwrap();
        assert!((gronwall_bound(&d, 8).unwrap() - 6.0).abs() <= 1e-12);
    }

    #[test]
    fn unresolved_cell_is_not_a_counterexample() {
        // One coarse cell with ω₁ > L: the pairwise inequality is vacuous
        // there and g jumps from 0 to 1 while the bound stays at 0.
        let times = vec![0.0, 1.0];
        let w1 = Control::from_fn(&times, |_, _| 2.0).unwrap();
        let d =
            GronwallData::new(vec![0.0, 1.0], w1, Control::zero(&times), 1.0, 1.0, 1.0).unwrap();
        let r = gronwall_verify(&d);
        assert!(r.pairwise_holds);
        assert!(!r.grid_resolved);
        assert!(!r.hypothesis_holds);
        assert!(!r.conclusion_holds);
        assert!(r.consistent());
    }

    #[test]
    fn rejects_invalid_data() {
        let times = uniform_times(2, 1.0).unwrap();
        let w = Control::time_power(&times, 1.0).unwrap();
        assert!(GronwallData::new(vec![0.0; 2], w.clone(), w.clone(), 1.0, 1.0, 1.0).is_err());
        assert!(GronwallData::new(vec![-1.0; 3], w.clone(), w.clone(), 1.0, 1.0, 1.0).is_err());
        let sqrt = Control::time_power(&times, 0.5).unwrap();
        assert!(GronwallData::new(vec![0.0; 3], sqrt, w, 1.0, 1.0, 1.0).is_err());
    }
}
