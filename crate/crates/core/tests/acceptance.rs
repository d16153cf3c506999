//! End-to-end acceptance battery. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rrde::grid::{uniform_times, GridPath};
use rrde::roughpath::{brownian_driver, RoughPathGrid};
use rrde::sewing::gronwall::{gronwall_constant, gronwall_verify, GronwallData};
use rrde::sewing::{contraction_check, sew, Germ};
use rrde::skorohod::{check_lipschitz, check_skorohod_bound, skorohod_1d};
use rrde::solver::{
    convergence_orders, remainder_diagnostics, solve_reflected, stability_probe, wong_zakai_study,
    SolveOptions, VectorField,
};
use rrde::variation::{pvar_2index, Control};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_times(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut t = 0.0;
    let mut times = vec![0.0];
    for _ in 1..n {
        t += rng.random_range(0.1..1.0) / n as f64;
        times.push(t);
    }
    times
}

fn random_walk(rng: &mut ChaCha8Rng, n: usize, dim: usize, start: f64) -> Vec<Vec<f64>> {
    let mut cur = vec![start; dim];
    let mut out = vec![cur.clone()];
    for _ in 1..n {
        for x in cur.iter_mut() {
            *x += rng.random_range(-1.0..1.0) / (n as f64).sqrt();
        }
        out.push(cur.clone());
    }
    out
}

fn identity_driver(n: usize) -> RoughPathGrid {
    RoughPathGrid::lift_piecewise_linear(&GridPath::sample(n, 1.0, |t| vec![t]).unwrap()).unwrap()
}

fn chen_relation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let dim = rng.random_range(1..=3);
        let times = random_times(&mut rng, n);
        let path = GridPath::new(times, random_walk(&mut rng, n, dim, 0.0)).unwrap();
        let x = RoughPathGrid::lift_piecewise_linear(&path).unwrap();
        worst = worst.max(x.chen_defect(&x.level2_table()).unwrap());
    }
    outcome(
        worst <= 1e-12,
        format!("max Chen defect over 100 lifts = {worst:.3e} (tol 1e-12)"),
    )
}

fn geometricity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut pl_worst = 0.0f64;
    let mut ito_worst = 0.0f64;
    for k in 0..100 {
        let n = rng.random_range(2..=200);
        let dim = rng.random_range(1..=3);
        let times = random_times(&mut rng, n);
        let path = GridPath::new(times, random_walk(&mut rng, n, dim, 0.0)).unwrap();
        pl_worst = pl_worst.max(
            RoughPathGrid::lift_piecewise_linear(&path)
                .unwrap()
                .geometricity_defect(),
        );

        let steps = rng.random_range(1..=256);
        let bm = brownian_driver(steps, dim, 1000 + k).unwrap();
        let ito = RoughPathGrid::lift_ito_style(&bm).unwrap();
        let h = 1.0 / steps as f64;
        ito_worst = ito_worst.max((ito.geometricity_defect() - 0.5 * h).abs());
    }
    outcome(
        pl_worst <= 1e-14 && ito_worst <= 1e-14,
        format!(
            "piecewise-linear defect {pl_worst:.3e} (tol 1e-14); |Itô defect - h/2| {ito_worst:.3e} (tol 1e-14)"
        ),
    )
}

/// Exhaustive `max_P Σ |g_{t_k t_{k+1}}|^p` over all `2^{n-2}` partitions.
fn brute_force_pvar(g: &[Vec<f64>], p: f64) -> f64 {
    let n = g.len();
    let interior = n.saturating_sub(2);
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << interior) {
        let mut prev = 0;
        let mut total = 0.0;
        for k in 1..n {
            let is_point = k == n - 1 || mask & (1 << (k - 1)) != 0;
            if is_point {
                total += g[prev][k].abs().powf(p);
                prev = k;
            }
        }
        best = best.max(total);
    }
    best
}

fn pvar_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 2..=12 {
        let times = uniform_times(n - 1, 1.0).unwrap();
        for _ in 0..200 {
            let g: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            for p in [1.0, 2.0, 2.5, 3.0] {
                let dp = pvar_2index(&times, |i, j| g[i][j].abs(), p).unwrap();
                let exact = brute_force_pvar(&g, p);
                worst = worst.max((dp.control.get(0, n - 1) - exact).abs());
                cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{cases} cases, max |DP - enumeration| = {worst:.3e} (tol 1e-12)"),
    )
}

fn skorohod_map() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let times = uniform_times(99, 1.0).unwrap();
    let mut comp_worst = 0.0f64;
    let mut ratio_worst = 0.0f64;
    let mut lip_worst = 0.0f64;
    for _ in 0..1000 {
        let start = rng.random_range(0.0..0.5);
        let g = GridPath::new(times.clone(), random_walk(&mut rng, 100, 1, start)).unwrap();
        let out = skorohod_1d(&g).unwrap();
        comp_worst = comp_worst.max(out.complementarity_sum().abs());
        ratio_worst = ratio_worst.max(check_skorohod_bound(&g, &out).unwrap().max_ratio);

        let start2 = rng.random_range(0.0..0.5);
        let g2 = GridPath::new(times.clone(), random_walk(&mut rng, 100, 1, start2)).unwrap();
        lip_worst = lip_worst.max(check_lipschitz(&g, &g2).unwrap());
    }
    outcome(
        comp_worst == 0.0 && ratio_worst <= 8.0 && lip_worst <= 2.0,
        format!(
            "complementarity {comp_worst:e} (must be 0); max δm/‖g‖₀ = {ratio_worst:.4} (≤ 8); max Lipschitz ratio = {lip_worst:.4} (≤ 2)"
        ),
    )
}

fn sewing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    // Integer-valued paths keep every partial sum exact.
    let mut additive_worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..=100);
        let times = uniform_times(n - 1, 1.0).unwrap();
        let x: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-1000..=1000) as f64)
            .collect();
        let germ = Germ::scalar(times, move |i, j| x[j] - x[i]).unwrap();
        let table = sew(&germ).remainder_table(&germ);
        for i in 0..n {
            for j in i + 1..n {
                additive_worst = additive_worst.max(table.scalar(i, j).abs());
            }
        }
    }

    let n = 1 << 10;
    let times = uniform_times(n, 1.0).unwrap();
    let t = times.clone();
    let young = Germ::scalar(times, move |i, j| t[i] * (t[j] - t[i])).unwrap();
    let young_err = (sew(&young).increment(0, n)[0] - 0.5).abs();

    let mut c_hats = Vec::new();
    for level in 5..=9 {
        let times = uniform_times(1 << level, 1.0).unwrap();
        let t = times.clone();
        let germ = Germ::scalar(times.clone(), move |i, j| t[i] * (t[j] - t[i])).unwrap();
        let omega = Control::time_power(&times, 1.0).unwrap();
        c_hats.push(contraction_check(&germ, &omega, 2.0).unwrap());
    }
    let (lo, hi) = c_hats.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| {
        (lo.min(c), hi.max(c))
    });
    let bounded = hi.is_finite() && hi <= 2.0 * lo;
    outcome(
        additive_worst == 0.0 && young_err <= 5e-4 && bounded,
        format!(
            "additive remainder {additive_worst:e} (must be 0); |I - 0.5| = {young_err:.3e} (≤ 5e-4); C_hat over n=2^5..2^9 = {c_hats:.4?} (max/min ≤ 2)"
        ),
    )
}

fn gronwall() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let e = std::f64::consts::E;
    let mut arith_worst = 0.0f64;
    for k in 0..20 {
        let c = 0.05 + 0.1 * k as f64;
        let l = 0.01 * (1 + k) as f64 * if k % 2 == 0 { 1.0 } else { 0.01 };
        let kappa = 1.0 + 0.1 * k as f64;
        let direct = (1.0 / l).max((kappa * (2.0f64.ln() + c.ln() + 2.0 * e.ln())).exp());
        let got = gronwall_constant(c, l, kappa).unwrap();
        arith_worst = arith_worst.max((got - direct).abs() / direct);
    }

    let (mut hypothesis_true, mut counterexamples) = (0, 0);
    for inst in 0..500 {
        let n = rng.random_range(3..40);
        let times = uniform_times(n - 1, 1.0).unwrap();
        let w_a: Vec<f64> = random_walk(&mut rng, n, 1, 0.0)
            .into_iter()
            .map(|v| v[0])
            .collect();
        let w_b: Vec<f64> = random_walk(&mut rng, n, 1, 0.0)
            .into_iter()
            .map(|v| v[0])
            .collect();
        let s1 = rng.random_range(1e-4..0.05);
        let s2 = rng.random_range(0.0..0.5);
        let omega1 = pvar_2index(&times, |i, j| (w_a[j] - w_a[i]).abs(), 2.0)
            .unwrap()
            .control
            .scale(s1)
            .unwrap();
        let omega2 = pvar_2index(&times, |i, j| (w_b[j] - w_b[i]).abs(), 1.0)
            .unwrap()
            .control
            .scale(s2)
            .unwrap();
        let c = rng.random_range(0.01..2.0);
        let l = rng.random_range(0.01..2.0);
        let kappa = rng.random_range(1.0..3.0);
        let theta = rng.random_range(0.0..1.5);
        let mut g = vec![rng.random_range(0.0..1.0)];
        let mut sup = g[0];
        for k in 0..n - 1 {
            let push = c * sup * omega1.get(k, k + 1).powf(1.0 / kappa) + omega2.get(k, k + 1);
            let next = match inst % 3 {
                0 => g[k] + theta * push,
                1 => (g[k] + theta * push * rng.random_range(-1.0..1.0)).max(0.0),
                _ => rng.random_range(0.0..2.0),
            };
            sup = sup.max(next);
            g.push(next);
        }
        let data = GronwallData::new(g, omega1, omega2, c, l, kappa).unwrap();
        let report = gronwall_verify(&data);
        if report.hypothesis_holds {
            hypothesis_true += 1;
            if !report.conclusion_holds {
                counterexamples += 1;
            }
        }
    }
    outcome(
        arith_worst <= 1e-12 && counterexamples == 0 && hypothesis_true > 0,
        format!(
            "c_(L,κ) max rel. error {arith_worst:.3e} (≤ 1e-12); 500 instances, {hypothesis_true} with hypothesis true, {counterexamples} counterexamples (must be 0)"
        ),
    )
}

fn solver_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut worst = 0.0f64;
    let mut reflected_runs = 0;
    for k in 0..100 {
        let dim = rng.random_range(1..=3);
        let steps = rng.random_range(1..=300);
        let a = rng.random_range(0.0..0.5);
        let x =
            RoughPathGrid::lift_piecewise_linear(&brownian_driver(steps, dim, 7000 + k).unwrap())
                .unwrap();
        let mut coeffs = vec![0.0; dim];
        coeffs[0] = 1.0;
        let vf = VectorField::constant(coeffs).unwrap();
        let r = solve_reflected(&vf, &x, a, SolveOptions::default()).unwrap();
        reflected_runs += usize::from(r.reflection_steps > 0);

        let cumulative = x.level1_path();
        let g = GridPath::scalar(
            x.times().to_vec(),
            &cumulative
                .component(0)
                .iter()
                .map(|v| a + v)
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let oracle = skorohod_1d(&g).unwrap();
        for i in 0..x.len() {
            worst = worst.max((r.y.value(i)[0] - oracle.y.value(i)[0]).abs());
            worst = worst.max((r.m.value(i)[0] - oracle.m.value(i)[0]).abs());
        }
    }
    outcome(
        worst <= 1e-14,
        format!("100 drivers ({reflected_runs} reflecting), max |solve - Skorohod| = {worst:.3e} (tol 1e-14)"),
    )
}

fn exponential_errors(levels: std::ops::RangeInclusive<u32>) -> Vec<f64> {
    let vf = VectorField::linear(vec![1.0]).unwrap();
    levels
        .map(|l| {
            let r = solve_reflected(&vf, &identity_driver(1 << l), 1.0, SolveOptions::default())
                .unwrap();
            (r.y.values().last().unwrap()[0] - std::f64::consts::E).abs()
        })
        .collect()
}

fn solver_convergence() -> Outcome {
    let errors = exponential_errors(6..=10);
    let orders = convergence_orders(&errors);
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let last = errors[errors.len() - 1];
    outcome(
        min_order >= 1.9 && last <= 1e-5,
        format!("orders for n=2^6..2^9: {orders:.4?} (each ≥ 1.9); error at n=2^10 = {last:.3e} (≤ 1e-5)"),
    )
}

fn absorbing_boundary() -> Outcome {
    let vf = VectorField::constant(vec![-1.0]).unwrap();
    let x = identity_driver(1 << 10);
    let r = solve_reflected(&vf, &x, 0.0, SolveOptions::default()).unwrap();
    let y_zero = r.y.values().iter().all(|v| v[0] == 0.0);
    let m_exact = (0..x.len()).all(|k| r.m.value(k)[0] == x.times()[k]);
    outcome(
        y_zero && m_exact,
        format!("n=2^10: y ≡ 0 exactly: {y_zero}; m_(t_k) = t_k exactly: {m_exact}"),
    )
}

fn remainder_decay() -> Outcome {
    let vf = VectorField::linear(vec![1.0]).unwrap();
    let maxima: Vec<f64> = (6..=9)
        .map(|l| {
            let x = identity_driver(1 << l);
            let r = solve_reflected(&vf, &x, 1.0, SolveOptions::default()).unwrap();
            remainder_diagnostics(&r, &x, &vf, 2.5).unwrap().max_local
        })
        .collect();
    let factors: Vec<f64> = maxima.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = factors.iter().all(|&f| f >= 3.5);
    outcome(
        pass,
        format!(
            "local max |y♮| for n=2^6..2^9 = {maxima:?}; shrink factors {factors:.3?} (each ≥ 3.5)"
        ),
    )
}

fn wong_zakai() -> Outcome {
    let fine = brownian_driver(1 << 12, 1, 7).unwrap();
    let vf = VectorField::bounded(vec![1.0]).unwrap();
    let report = wong_zakai_study(&vf, &fine, &[1.0], 5).unwrap();
    let d = &report.distances;
    let decreasing = report.is_weakly_decreasing();
    let contracted = d[d.len() - 1] <= d[0] / 8.0;
    outcome(
        decreasing && contracted,
        format!("f = 1/(1+y²), a = 1, seed 7: distances {d:?} (weakly decreasing, last ≤ first/8)"),
    )
}

fn stability() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let scenarios: [(&str, VectorField, f64); 2] = [
        ("touching", VectorField::bounded(vec![-1.0]).unwrap(), 0.5),
        ("non-touching", VectorField::linear(vec![1.0]).unwrap(), 1.0),
    ];
    for (label, vf, a) in scenarios {
        let mut ratios = Vec::new();
        let mut touched = Vec::new();
        for l in 8..=10 {
            let x = RoughPathGrid::lift_piecewise_linear(
                &GridPath::sample(
                    1 << l,
                    1.0,
                    |t| vec![(2.0 * std::f64::consts::PI * t).sin()],
                )
                .unwrap(),
            )
            .unwrap();
            let probe = stability_probe(&vf, &x, a, a + 1e-3).unwrap();
            ratios.push(probe.ratio);
            touched.push(probe.touched_boundary);
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
        let expect_touch = label == "touching";
        let ok = hi <= 1.2 * lo && touched.iter().all(|&t| t == expect_touch);
        pass &= ok;
        lines.push(format!("{label}: ratios {ratios:.5?}"));
    }
    outcome(pass, format!("{} (spread ≤ 20%)", lines.join("; ")))
}

fn main() {
    let started = Instant::now();
    let criteria: Vec<Criterion> = vec![
        ("Chen relation", chen_relation),
        ("geometricity", geometricity),
        ("p-variation DP vs brute force", pvar_brute_force),
        ("Skorohod map", skorohod_map),
        ("sewing", sewing),
        ("rough Gronwall", gronwall),
        ("solver oracle", solver_oracle),
        ("solver convergence", solver_convergence),
        ("absorbing boundary", absorbing_boundary),
        ("remainder decay", remainder_decay),
        ("Wong-Zakai", wong_zakai),
        ("stability", stability),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {:>2} {name}: {} ({:.2}s)",
            k + 1,
            out.detail,
            t0.elapsed().as_secs_f64()
        );
        failed += usize::from(!out.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
