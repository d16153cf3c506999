use proptest::prelude::*;

use rrde::grid::{uniform_times, GridPath};
use rrde::roughpath::{brownian_driver, RoughPathGrid};
use rrde::variation::{
    control_algebra, pvar_2index, pvar_norm, pvar_path, variation_sum, Control, ControlOp,
};

/// Enumerates every partition of `{i, …, j}` that keeps both endpoints.
fn enumerate(size: &dyn Fn(usize, usize) -> f64, i: usize, j: usize, p: f64) -> f64 {
    if j <= i {
        return 0.0;
    }
    let interior = j - i - 1;
    (0u32..(1 << interior))
        .map(|mask| {
            let mut prev = i;
            let mut total = 0.0;
            for k in i + 1..=j {
                if k == j || mask & (1 << (k - i - 1)) != 0 {
                    total += size(prev, k).powf(p);
                    prev = k;
                }
            }
            total
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn every_entry_matches_enumeration() {
    let path = brownian_driver(9, 2, 5).unwrap();
    let size = |i: usize, j: usize| {
        let d = path.increment(i, j);
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    };
    for p in [1.0, 2.0, 2.5, 3.0] {
        let r = pvar_path(&path, p).unwrap();
        for i in 0..path.len() {
            for j in i + 1..path.len() {
                let exact = enumerate(&size, i, j, p);
                assert!((r.control.get(i, j) - exact).abs() <= 1e-12 * exact.max(1.0));
            }
        }
        assert!((r.norm - r.control.get(0, 9).powf(1.0 / p)).abs() <= 1e-15);
    }
}

#[test]
fn monotone_path_one_variation_is_total_rise() {
    let path = GridPath::sample(50, 1.0, |t| vec![t * t]).unwrap();
    let r = pvar_path(&path, 1.0).unwrap();
    assert!((r.norm - 1.0).abs() <= 1e-14);
    // For p > 1 on a monotone path the single interval is optimal.
    let r2 = pvar_path(&path, 2.0).unwrap();
    assert!((r2.norm - 1.0).abs() <= 1e-14);
}

#[test]
fn oscillating_path_prefers_fine_partition() {
    let values: Vec<f64> = (0..11)
        .map(|k| if k % 2 == 0 { 0.0 } else { 1.0 })
        .collect();
    let path = GridPath::scalar(uniform_times(10, 1.0).unwrap(), &values).unwrap();
    let r = pvar_path(&path, 2.0).unwrap();
    assert!((r.control.get(0, 10) - 10.0).abs() <= 1e-14);
}

#[test]
fn single_value_matches_table_corner() {
    let path = brownian_driver(60, 1, 8).unwrap();
    let size = |i: usize, j: usize| path.increment(i, j)[0].abs();
    let table = pvar_2index(path.times(), size, 2.5).unwrap();
    let single = pvar_norm(path.len(), size, 2.5).unwrap();
    assert!((table.norm - single).abs() <= 1e-14 * single);
}

#[test]
fn sub_unit_exponent_sum_is_finite_and_dominates_endpoint() {
    let path = brownian_driver(30, 1, 2).unwrap();
    let size = |i: usize, j: usize| path.increment(i, j)[0].abs();
    let s = variation_sum(path.len(), size, 2.5 / 3.0);
    assert!(s.is_finite());
    assert!(s >= size(0, 30).powf(2.5 / 3.0));
}

#[test]
fn rough_path_homogeneous_control_is_superadditive() {
    let x = RoughPathGrid::lift_piecewise_linear(&brownian_driver(40, 2, 1).unwrap()).unwrap();
    let p = x.p_exponent();
    let w = pvar_2index(
        x.times(),
        |i, j| x.homogeneous_size(i, j).unwrap().powf(1.0 / p),
        p,
    )
    .unwrap()
    .control;
    assert!(w.is_superadditive());
    assert!(w.is_monotone_under_inclusion());
    for k in 0..x.len() - 1 {
        assert!(w.get(k, k + 1) >= x.homogeneous_size(k, k + 1).unwrap() - 1e-14);
    }
}

#[test]
fn brownian_control_regularity_under_refinement() {
    // Max one-step control value shrinks as the grid is refined.
    let fine = brownian_driver(256, 1, 21).unwrap();
    let max_cell: Vec<f64> = [64, 8, 1]
        .iter()
        .map(|&stride| {
            let path = fine.coarsen(stride).unwrap();
            let w = pvar_path(&path, 2.5).unwrap().control;
            (0..path.len() - 1)
                .map(|k| w.get(k, k + 1))
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(
        max_cell[0] > max_cell[1] && max_cell[1] > max_cell[2],
        "{max_cell:?}"
    );
    assert!(max_cell[2] < max_cell[0] / 4.0, "{max_cell:?}");
}

#[test]
fn controls_form_an_algebra() {
    let times = uniform_times(12, 2.0).unwrap();
    let a = Control::time_power(&times, 1.0).unwrap();
    let b = Control::time_power(&times, 2.0).unwrap();
    let sum = control_algebra(&a, &b, ControlOp::Sum).unwrap();
    let mix = control_algebra(&a, &b, ControlOp::PowerMix { theta: 1.5 }).unwrap();
    assert!(sum.is_superadditive() && mix.is_superadditive());
    let cube = a.powf(3.0).unwrap();
    assert!(cube.is_superadditive());
    assert!((cube.get(0, 12) - 8.0).abs() <= 1e-12);
    assert!(a.powf(0.5).is_err());
    let other = Control::time_power(&uniform_times(12, 1.0).unwrap(), 1.0).unwrap();
    assert!(control_algebra(&a, &other, ControlOp::Sum).is_err());
}

#[test]
fn rejects_bad_exponents() {
    let times = uniform_times(4, 1.0).unwrap();
    assert!(pvar_2index(&times, |_, _| 1.0, 0.5).is_err());
    assert!(pvar_2index(&times, |_, _| 1.0, f64::NAN).is_err());
    assert!(pvar_norm(5, |_, _| 1.0, 0.99).is_err());
}

proptest! {
    #[test]
    fn dp_control_is_superadditive_and_monotone(
        values in prop::collection::vec(-3.0f64..3.0, 2..30),
        p in 1.0f64..4.0,
    ) {
        let path = GridPath::scalar(uniform_times(values.len() - 1, 1.0).unwrap(), &values).unwrap();
        let r = pvar_path(&path, p).unwrap();
        prop_assert!(r.control.is_superadditive());
        prop_assert!(r.control.is_monotone_under_inclusion());
        // ω(s,t) dominates |g_{st}|^p.
        let n = values.len();
        for i in 0..n {
            for j in i + 1..n {
                let g = (values[j] - values[i]).abs().powf(p);
                prop_assert!(r.control.get(i, j) >= g * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn power_of_control_stays_control(
        values in prop::collection::vec(-3.0f64..3.0, 2..20),
        theta in 1.0f64..3.0,
    ) {
        let path = GridPath::scalar(uniform_times(values.len() - 1, 1.0).unwrap(), &values).unwrap();
        let w = pvar_path(&path, 1.0).unwrap().control;
        prop_assert!(w.powf(theta).unwrap().is_superadditive());
    }
}
