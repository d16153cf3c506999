//! One runner per experiment kind, plus the checks they share with
//! `verify`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use rrde::grid::{euclidean, write_columns_csv, GridPath};
use rrde::roughpath::RoughPathGrid;
use rrde::sewing::gronwall::{gronwall_bound, gronwall_verify, GronwallData};
use rrde::skorohod::{check_skorohod_bound, skorohod_orthant};
use rrde::solver::{
    convergence_orders, remainder_diagnostics, solve_reflected_orthant, stability_probe,
    wong_zakai_study, SolveOptions, SolveResult, VectorField,
};
use rrde::variation::{pvar_2index, pvar_path, Control};

use crate::config::{
    lift, ExperimentKind, ExponentialExp, GronwallExp, LiftCheck, LiftKind, NamedExperiment,
    SkorohodExp, SolveExp, StabilityExp, Tolerances, WongZakaiExp,
};
use crate::error::CliError;
use crate::report::{Checks, ExperimentReport};

/// Checks that are cubic in the number of grid points (Chen triples,
/// p-variation tables) run on at most this many leading points.
pub const CUBIC_CHECK_POINTS: usize = 257;

/// Remainder diagnostics need the full pair table; skipped above this size.
pub const REMAINDER_MAX_POINTS: usize = 2049;

pub struct Ctx<'a> {
    pub exp: &'a NamedExperiment,
    pub base_dir: &'a Path,
}

impl Ctx<'_> {
    pub fn driver(&self, spec: &crate::config::DriverSpec) -> Result<GridPath, CliError> {
        spec.build(self.base_dir, self.exp.seed, self.exp.seed_overridden)
    }
}

/// CSV sink for one experiment. With no directory nothing is written.
pub struct Output {
    dir: Option<PathBuf>,
    name: String,
    files: Vec<String>,
}

impl Output {
    pub fn new(root: Option<&Path>, name: &str) -> Self {
        Self {
            dir: root.map(|r| r.join(name)),
            name: name.to_string(),
            files: Vec::new(),
        }
    }

    pub fn csv<F>(&mut self, file: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> rrde::Result<()>,
    {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = dir.join(file);
        let io_err = |source| CliError::Output {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        write(&mut w).map_err(|e| match e {
            rrde::Error::Io(source) => io_err(source),
            other => CliError::Core(other),
        })?;
        w.flush().map_err(io_err)?;
        self.files.push(format!("{}/{file}", self.name));
        Ok(())
    }
}

pub fn run_experiment(
    exp: &NamedExperiment,
    base_dir: &Path,
    out_root: Option<&Path>,
) -> Result<ExperimentReport, CliError> {
    let ctx = Ctx { exp, base_dir };
    let mut out = Output::new(out_root, &exp.name);
    let mut checks = Checks::new(exp.kind.skip_checks());
    let mut diag = Map::new();
    match &exp.kind {
        ExperimentKind::LiftCheck(e) => lift_check(&ctx, e, &mut checks, &mut diag, &mut out)?,
        ExperimentKind::Skorohod(e) => skorohod(&ctx, e, &mut checks, &mut diag, &mut out)?,
        ExperimentKind::Solve(e) => solve(&ctx, e, &mut checks, &mut diag, &mut out)?,
        ExperimentKind::ExponentialConvergence(e) => {
            exponential(e, &mut checks, &mut diag, &mut out)?
        }
        ExperimentKind::WongZakai(e) => wong_zakai(&ctx, e, &mut checks, &mut diag, &mut out)?,
        ExperimentKind::Stability(e) => stability(&ctx, e, &mut checks, &mut diag, &mut out)?,
        ExperimentKind::Gronwall(e) => gronwall(&ctx, e, &mut checks, &mut diag, &mut out)?,
    }
    Ok(ExperimentReport {
        name: exp.name.clone(),
        experiment: exp.kind.label(),
        seed: exp.seed,
        passed: checks.passed(),
        checks: checks.into_vec(),
        diagnostics: diag,
        files: out.files,
    })
}

fn put(diag: &mut Map<String, Value>, key: &str, value: Value) {
    diag.insert(key.to_string(), value);
}

/// Chen defect on the leading points of `x`.
pub fn chen_check(
    x: &RoughPathGrid,
    tol: &Tolerances,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
) -> Result<(), CliError> {
    let head = x.prefix(x.len().min(CUBIC_CHECK_POINTS))?;
    let defect = head.chen_defect(&head.level2_table())?;
    put(diag, "chen_defect", json!(defect));
    put(diag, "chen_points", json!(head.len()));
    checks.at_most("chen", defect, tol.chen);
    Ok(())
}

/// Symmetric-part defect; an Itô-style lift run with the override is an
/// expected failure rather than a failure.
pub fn geometricity_check(
    x: &RoughPathGrid,
    kind: LiftKind,
    allow_non_geometric: bool,
    tol: &Tolerances,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
) {
    let defect = x.geometricity_defect();
    put(diag, "geometricity_defect", json!(defect));
    if defect > tol.geometricity && kind == LiftKind::ItoStyle && allow_non_geometric {
        let half_h = x
            .times()
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]))
            .fold(0.0, f64::max);
        checks.expected_fail(
            "geometricity",
            defect,
            tol.geometricity,
            format!("Itô-style lift: defect {defect:e} against h/2 = {half_h:e}"),
        );
    } else {
        checks.at_most("geometricity", defect, tol.geometricity);
    }
}

/// `ω_X(s,t)`: p-variation control of `|X1|^p + |X2|^{p/2}` on the leading
/// points of `x`.
pub fn homogeneous_control(x: &RoughPathGrid) -> Result<Control, CliError> {
    let n = x.len();
    let p = x.p_exponent();
    let mut size = vec![0.0; n * n];
    for i in 0..n {
        x.for_each_from(i, |j, inc| {
            let a = euclidean(&inc.level1).powf(p);
            let b = euclidean(&inc.level2).powf(p / 2.0);
            size[i * n + j] = (a + b).powf(1.0 / p);
        });
    }
    Ok(pvar_2index(x.times(), |i, j| size[i * n + j], p)?.control)
}

pub fn superadditivity_check(
    x: &RoughPathGrid,
    tol: &Tolerances,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
) -> Result<Control, CliError> {
    let head = x.prefix(x.len().min(CUBIC_CHECK_POINTS))?;
    let omega = homogeneous_control(&head)?;
    let defect = omega.superadditivity_defect();
    put(diag, "omega_x_total", json!(omega.get(0, head.len() - 1)));
    put(diag, "superadditivity_defect", json!(defect));
    checks.at_most("superadditivity", defect, tol.superadditivity);
    Ok(omega)
}

/// Complementarity, positivity and the measure bound for a solve.
pub fn reflection_checks(
    r: &SolveResult,
    tol: &Tolerances,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
) -> Result<(), CliError> {
    let comp = r.complementarity_sum();
    let min_y =
        r.y.values()
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
    let bound = r.skorohod_bound()?;
    put(diag, "complementarity_sum", json!(comp));
    put(diag, "min_y", json!(min_y));
    put(diag, "skorohod_ratio", json!(bound.max_ratio));
    checks.record("complementarity", comp == 0.0, comp, Some(0.0), None);
    checks.at_least("domain", min_y, 0.0);
    checks.at_most("skorohod-bound", bound.max_ratio, tol.skorohod_bound);
    Ok(())
}

fn write_lift_csv<W: Write>(x: &RoughPathGrid, out: W) -> rrde::Result<()> {
    let d = x.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x_{i}")));
    for i in 1..=d {
        header.extend((1..=d).map(|j| format!("xx_{i}{j}")));
    }
    let mut cols = vec![vec![0.0; x.len()]; d + d * d];
    x.for_each_from(0, |j, inc| {
        for (c, v) in inc.level1.iter().chain(&inc.level2).enumerate() {
            cols[c][j] = *v;
        }
    });
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    write_columns_csv(out, &header, x.times(), &refs)
}

fn lift_check(
    ctx: &Ctx,
    e: &LiftCheck,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
    out: &mut Output,
) -> Result<(), CliError> {
    let path = ctx.driver(&e.driver)?;
    let x = lift(&path, e.lift, e.p)?;
    put(diag, "n_points", json!(x.len()));
    put(diag, "dim", json!(x.dim()));
    put(diag, "p", json!(e.p));
    chen_check(&x, &e.tolerances, checks, diag)?;
    geometricity_check(
        &x,
        e.lift,
        e.allow_non_geometric,
        &e.tolerances,
        checks,
        diag,
    );
    superadditivity_check(&x, &e.tolerances, checks, diag)?;
    let total = x.query(0, x.len() - 1)?;
    put(diag, "level1_total", json!(total.level1));
    put(diag, "level2_total", json!(total.level2));
    out.csv("lift.csv", |w| write_lift_csv(&x, w))
}

fn skorohod(
    ctx: &Ctx,
    e: &SkorohodExp,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
    out: &mut Output,
) -> Result<(), CliError> {
    let raw = ctx.driver(&e.driver)?;
    let shifted: Vec<Vec<f64>> = raw
        .values()
        .iter()
        .map(|v| v.iter().map(|x| x + e.shift).collect())
        .collect();
    let g = GridPath::new(raw.times().to_vec(), shifted)?;
    let r = skorohod_orthant(&g)?;
    let comp = r.complementarity_sum();
    let min_y =
        r.y.values()
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
    let bound = check_skorohod_bound(&g, &r)?;
    put(diag, "n_points", json!(g.len()));
    put(diag, "complementarity_sum", json!(comp));
    put(diag, "min_y", json!(min_y));
    put(diag, "reflection_steps", json!(r.reflection_steps()));
    put(diag, "m_end", json!(r.m.values().last()));
    put(diag, "skorohod_ratio", json!(bound.max_ratio));
    checks.record("complementarity", comp == 0.0, comp, Some(0.0), None);
    checks.at_least("domain", min_y, 0.0);
    checks.at_most(
        "skorohod-bound",
        bound.max_ratio,
        e.tolerances.skorohod_bound,
    );
    out.csv("reflection.csv", |w| r.write_csv(&g, w))
}

/// Runs the reflected scheme, turning a rejected non-geometric driver into a
/// failed `geometricity` check. `None` means the solve did not happen.
fn guarded_solve(
    vf: &VectorField,
    x: &RoughPathGrid,
    a: &[f64],
    allow_non_geometric: bool,
    checks: &mut Checks,
) -> Result<Option<SolveResult>, CliError> {
    let opts = SolveOptions {
        allow_non_geometric,
    };
    match solve_reflected_orthant(vf, x, a, opts) {
        Ok(r) => Ok(Some(r)),
        Err(rrde::Error::NonGeometric { defect }) => {
            checks.not_applicable(
                "complementarity",
                format!("solve refused: non-geometric driver (defect {defect:e})"),
            );
            Ok(None)
        }
        Err(other) => Err(other.into()),
    }
}

fn solve(
    ctx: &Ctx,
    e: &SolveExp,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
    out: &mut Output,
) -> Result<(), CliError> {
    let x = lift(&ctx.driver(&e.driver)?, e.lift, e.p)?;
    let vf = e.vf.build()?;
    geometricity_check(
        &x,
        e.lift,
        e.allow_non_geometric,
        &e.tolerances,
        checks,
        diag,
    );
    let Some(r) = guarded_solve(&vf, &x, &e.a.to_vec(), e.allow_non_geometric, checks)? else {
        return Ok(());
    };
    put(diag, "n_points", json!(x.len()));
    put(diag, "y_end", json!(r.y.values().last()));
    put(diag, "m_end", json!(r.m.values().last()));
    put(diag, "m_total_variation", json!(r.m_total_variation()));
    put(diag, "reflection_steps", json!(r.reflection_steps));
    put(diag, "within_hypothesis", json!(r.within_hypothesis));
    reflection_checks(&r, &e.tolerances, checks, diag)?;
    let remainder = if x.len() <= REMAINDER_MAX_POINTS {
        serde_json::to_value(remainder_diagnostics(&r, &x, &vf, e.p)?)
            .expect("plain struct serializes")
    } else {
        Value::Null
    };
    put(diag, "remainder", remainder);
    out.csv("solution.csv", |w| r.write_csv(w))
}

fn exponential(
    e: &ExponentialExp,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
    out: &mut Output,
) -> Result<(), CliError> {
    let vf = VectorField::linear(vec![e.c])?;
    let exact = e.a * (e.c * e.t_end).exp();
    let [lo, hi] = e.n_levels;
    let mut ns = Vec::new();
    let mut y_end = Vec::new();
    let mut errors = Vec::new();
    for l in lo..=hi {
        let n = 1usize << l;
        let x = RoughPathGrid::lift_piecewise_linear(&GridPath::sample(n, e.t_end, |t| vec![t])?)?;
        let r = solve_reflected_orthant(&vf, &x, &[e.a], SolveOptions::default())?;
        let y = r.y.values().last().expect("nonempty")[0];
        ns.push(n as f64);
        y_end.push(y);
        errors.push((y - exact).abs());
    }
    let orders = convergence_orders(&errors);
    put(diag, "exact", json!(exact));
    put(
        diag,
        "n",
        json!(ns.iter().map(|&n| n as u64).collect::<Vec<_>>()),
    );
    put(diag, "abs_error", json!(errors));
    put(diag, "orders", json!(orders));
    match orders.last() {
        Some(&last) => checks.at_least("min-order", last, e.tolerances.min_order),
        None => checks.not_applicable("min-order", "a single level has no order".into()),
    }
    if let Some(limit) = e.tolerances.max_final_error {
        checks.at_most("final-error", *errors.last().expect("nonempty"), limit);
    }
    let mut order_col = vec![f64::NAN];
    order_col.extend(&orders);
    out.csv("convergence.csv", |w| {
        write_columns_csv(
            w,
            &["n", "y_end", "abs_error", "order"],
            &ns,
            &[&y_end, &errors, &order_col],
        )
    })
}

fn wong_zakai(
    ctx: &Ctx,
    e: &WongZakaiExp,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
    out: &mut Output,
) -> Result<(), CliError> {
    let fine = ctx.driver(&e.driver)?;
    let vf = e.vf.build()?;
    let report = wong_zakai_study(&vf, &fine, &e.a.to_vec(), e.levels)?;
    let d = &report.distances;
    let first = d[0];
    let last = d[d.len() - 1];
    put(diag, "distances", json!(d));
    put(
        diag,
        "weakly_decreasing",
        json!(report.is_weakly_decreasing()),
    );
    put(
        diag,
        "levels",
        serde_json::to_value(&report.levels).expect("plain struct serializes"),
    );
    let worst_rise = d.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    checks.record(
        "distances-monotone",
        report.is_weakly_decreasing(),
        worst_rise,
        Some(0.0),
        None,
    );
    checks.at_most(
        "wong-zakai-contraction",
        last,
        e.tolerances.wong_zakai_contraction * first,
    );

    let dim = report.levels[0].y_end.len();
    let mut header = vec!["n".to_string()];
    header.extend((1..=dim).map(|c| {
        if dim == 1 {
            "y_end".into()
        } else {
            format!("y_end_{c}")
        }
    }));
    header.extend(["m_total_variation", "reflection_steps", "distance_to_next"].map(String::from));
    let n: Vec<f64> = report.levels.iter().map(|l| l.n_steps as f64).collect();
    let mut cols: Vec<Vec<f64>> = (0..dim)
        .map(|c| report.levels.iter().map(|l| l.y_end[c]).collect())
        .collect();
    cols.push(report.levels.iter().map(|l| l.m_total_variation).collect());
    cols.push(
        report
            .levels
            .iter()
            .map(|l| l.reflection_steps as f64)
            .collect(),
    );
    let mut dist = d.clone();
    dist.push(f64::NAN);
    cols.push(dist);
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    out.csv("wong_zakai.csv", |w| {
        write_columns_csv(w, &header, &n, &refs)
    })
}

fn stability(
    ctx: &Ctx,
    e: &StabilityExp,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
    out: &mut Output,
) -> Result<(), CliError> {
    let fine = ctx.driver(&e.driver)?;
    let vf = e.vf.build()?;
    let (mut ns, mut sup, mut ratios, mut touched) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in (0..e.levels).rev() {
        let x = RoughPathGrid::lift_piecewise_linear(&fine.coarsen(1 << k)?)?;
        let probe = stability_probe(&vf, &x, e.a, e.a + e.delta)?;
        ns.push((x.len() - 1) as f64);
        sup.push(probe.sup_diff);
        ratios.push(probe.ratio);
        touched.push(f64::from(u8::from(probe.touched_boundary)));
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    put(diag, "ratios", json!(ratios));
    put(diag, "spread", json!(spread));
    put(
        diag,
        "touched_boundary",
        json!(touched.iter().any(|&t| t > 0.0)),
    );
    checks.at_most("stability-spread", spread, e.tolerances.stability_spread);
    out.csv("stability.csv", |w| {
        write_columns_csv(
            w,
            &["n", "sup_diff", "ratio", "touched_boundary"],
            &ns,
            &[&sup, &ratios, &touched],
        )
    })
}

/// Gronwall instance built from two solves: `g = |y¹ - y²|`, `ω₁` a multiple
/// of the driver's homogeneous control, `ω₂` the 1-variation of `g`. The
/// implication "hypothesis ⇒ conclusion" must hold.
#[allow(clippy::too_many_arguments)]
pub fn gronwall_check(
    x: &RoughPathGrid,
    y1: &GridPath,
    y2: &GridPath,
    params: [f64; 4],
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
) -> Result<(GridPath, Vec<f64>), CliError> {
    let [c, l, kappa, scale] = params;
    let points = x.len().min(CUBIC_CHECK_POINTS);
    let head = x.prefix(points)?;
    let g: Vec<f64> = (0..points)
        .map(|k| {
            let d: Vec<f64> = y1
                .value(k)
                .iter()
                .zip(y2.value(k))
                .map(|(a, b)| a - b)
                .collect();
            euclidean(&d)
        })
        .collect();
    let g_path = GridPath::scalar(head.times().to_vec(), &g)?;
    let omega1 = homogeneous_control(&head)?.scale(scale)?;
    let omega2 = pvar_path(&g_path, 1.0)?.control;
    let data = GronwallData::new(g, omega1, omega2, c, l, kappa)?;
    let report = gronwall_verify(&data);
    let bounds = (0..points)
        .map(|t| gronwall_bound(&data, t))
        .collect::<rrde::Result<Vec<_>>>()?;
    put(
        diag,
        "gronwall",
        serde_json::to_value(report).expect("plain struct serializes"),
    );
    put(diag, "gronwall_constant", json!(data.constant()));
    put(diag, "gronwall_points", json!(points));
    checks.record(
        "gronwall-implication",
        report.consistent(),
        report.worst_ratio,
        Some(1.0),
        Some(format!(
            "hypothesis {}, conclusion {}",
            report.hypothesis_holds, report.conclusion_holds
        )),
    );
    Ok((g_path, bounds))
}

fn gronwall(
    ctx: &Ctx,
    e: &GronwallExp,
    checks: &mut Checks,
    diag: &mut Map<String, Value>,
    out: &mut Output,
) -> Result<(), CliError> {
    let x = lift(&ctx.driver(&e.driver)?, LiftKind::PiecewiseLinear, e.p)?;
    let vf = e.vf.build()?;
    let r1 = solve_reflected_orthant(&vf, &x, &[e.a[0]], SolveOptions::default())?;
    let r2 = solve_reflected_orthant(&vf, &x, &[e.a[1]], SolveOptions::default())?;
    let (g, bounds) = gronwall_check(
        &x,
        &r1.y,
        &r2.y,
        [e.c, e.l, e.kappa, e.omega1_scale],
        checks,
        diag,
    )?;
    out.csv("gronwall.csv", |w| {
        write_columns_csv(
            w,
            &["t", "g", "bound"],
            g.times(),
            &[&g.component(0), &bounds],
        )
    })
}
