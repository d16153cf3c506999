//! Refinement studies built on the scheme: convergence orders, Wong–Zakai
//! coarsening sweeps and initial-condition stability probes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridPath;
use crate::roughpath::RoughPathGrid;

use super::field::VectorField;
use super::scheme::{solve_reflected_orthant, SolveOptions, SolveResult};

/// `log₂(e_k / e_{k+1})` for successive errors of a halving step size.
pub fn convergence_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct WongZakaiLevel {
    pub n_steps: usize,
    pub y_end: Vec<f64>,
    pub m_total_variation: f64,
    pub reflection_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WongZakaiReport {
    /// Coarsest first.
    pub levels: Vec<WongZakaiLevel>,
    /// `distances[l]` is the sup-distance between levels `l` and `l + 1` on
    /// the grid points of level `l`.
    pub distances: Vec<f64>,
}

impl WongZakaiReport {
    pub fn is_weakly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Solves along piecewise-linear lifts of the coarsenings of `fine_driver`
/// by strides `2^levels, …, 2, 1`.
pub fn wong_zakai_study(
    vf: &VectorField,
    fine_driver: &GridPath,
    a: &[f64],
    levels: usize,
) -> Result<WongZakaiReport> {
    if levels < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 levels, got {levels}"
        )));
    }
    let steps = fine_driver.len() - 1;
    let coarsest = 1usize
        .checked_shl(levels as u32)
        .filter(|&s| s <= steps && steps.is_multiple_of(s))
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{steps} fine steps are not divisible by 2^{levels}"
            ))
        })?;
    let mut solves: Vec<SolveResult> = Vec::with_capacity(levels + 1);
    let mut stride = coarsest;
    while stride >= 1 {
        let x = RoughPathGrid::lift_piecewise_linear(&fine_driver.coarsen(stride)?)?;
        solves.push(solve_reflected_orthant(vf, &x, a, SolveOptions::default())?);
        stride /= 2;
    }
    let distances = solves
        .windows(2)
        .map(|w| {
            let (coarse, fine) = (&w[0].y, &w[1].y);
            (0..coarse.len())
                .flat_map(|k| {
                    coarse
                        .value(k)
                        .iter()
                        .zip(fine.value(2 * k))
                        .map(|(a, b)| (a - b).abs())
                })
                .fold(0.0f64, f64::max)
        })
        .collect();
    let levels = solves
        .iter()
        .map(|r| WongZakaiLevel {
            n_steps: r.y.len() - 1,
            y_end: r.y.values().last().expect("nonempty").clone(),
            m_total_variation: r.m_total_variation(),
            reflection_steps: r.reflection_steps,
        })
        .collect();
    Ok(WongZakaiReport { levels, distances })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityProbe {
    pub sup_diff: f64,
    /// `sup_diff / |a1 - a2|`; zero when the starting points coincide.
    pub ratio: f64,
    /// Whether either run touched the boundary.
    pub touched_boundary: bool,
}

/// Solves from `a1` and `a2` on the same driver and compares the paths.
pub fn stability_probe(
    vf: &VectorField,
    x: &RoughPathGrid,
    a1: f64,
    a2: f64,
) -> Result<StabilityProbe> {
    let r1 = solve_reflected_orthant(vf, x, &[a1], SolveOptions::default())?;
    let r2 = solve_reflected_orthant(vf, x, &[a2], SolveOptions::default())?;
    let sup_diff = sup_distance(&r1.y, &r2.y);
    let gap = (a1 - a2).abs();
    Ok(StabilityProbe {
        sup_diff,
        ratio: if gap == 0.0 { 0.0 } else { sup_diff / gap },
        touched_boundary: r1.reflection_steps + r2.reflection_steps > 0,
    })
}

/// Largest entrywise gap between two paths on the same grid.
pub fn sup_distance(a: &GridPath, b: &GridPath) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .flat_map(|(u, v)| u.iter().zip(v).map(|(x, y)| (x - y).abs()))
        .fold(0.0f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_geometric_errors() {
        let o = convergence_orders(&[1.0, 0.25, 0.0625]);
        assert_eq!(o, vec![2.0, 2.0]);
    }

    #[test]
    fn identical_starts() {
        let vf = VectorField::bounded(vec![1.0]).unwrap();
        let x = RoughPathGrid::lift_piecewise_linear(
            &GridPath::sample(16, 1.0, |t| vec![(4.0 * t).sin()]).unwrap(),
        )
        .unwrap();
        let probe = stability_probe(&vf, &x, 0.3, 0.3).unwrap();
        assert_eq!(probe.sup_diff, 0.0);
        assert_eq!(probe.ratio, 0.0);
    }

    #[test]
    fn wong_zakai_rejects_indivisible_grid() {
        let vf = VectorField::bounded(vec![1.0]).unwrap();
        let fine = GridPath::sample(12, 1.0, |t| vec![t]).unwrap();
        assert!(wong_zakai_study(&vf, &fine, &[1.0], 3).is_err());
        assert!(wong_zakai_study(&vf, &fine, &[1.0], 1).is_err());
        assert!(wong_zakai_study(&vf, &fine, &[1.0], 2).is_ok());
        assert!(wong_zakai_study(&vf, &fine, &[1.0], 80).is_err());
    }

    #[test]
    fn monotone_driver_levels_agree() {
        // g_t = a - t reflects identically on every level.
        let vf = VectorField::constant(vec![-1.0]).unwrap();
        let fine = GridPath::sample(64, 2.0, |t| vec![t]).unwrap();
        let report = wong_zakai_study(&vf, &fine, &[1.0], 3).unwrap();
        assert_eq!(report.distances, vec![0.0; 3]);
        for level in &report.levels {
            assert_eq!(level.y_end, vec![0.0]);
            assert_eq!(level.m_total_variation, 1.0);
        }
    }
}
