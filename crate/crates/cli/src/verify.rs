//! The invariant battery behind `rrde verify`: Chen, geometricity,
//! superadditivity, complementarity, the reflection measure bound and the
//! Gronwall implication, evaluated on the instance each experiment
//! configures.

use serde_json::Map;

use rrde::grid::GridPath;
use rrde::roughpath::{RoughPathGrid, DEFAULT_P};
use rrde::skorohod::{check_skorohod_bound, skorohod_orthant};
use rrde::solver::VectorField;

use crate::config::{lift, DriverSpec, ExperimentKind, LiftKind, NamedExperiment};
use crate::error::CliError;
use crate::experiments::{
    chen_check, geometricity_check, gronwall_check, reflection_checks, superadditivity_check, Ctx,
};
use crate::report::{Checks, ExperimentReport};

/// Second starting point offset when an experiment configures only one.
const SECOND_START_OFFSET: f64 = 0.1;

struct Instance {
    x: RoughPathGrid,
    lift: LiftKind,
    allow_non_geometric: bool,
    /// With a vector field the reflected solves are checked; without one the
    /// driver itself is reflected.
    vf: Option<VectorField>,
    starts: [Vec<f64>; 2],
    /// Reflected driver for field-free instances.
    reflect: Option<GridPath>,
    gronwall: [f64; 4],
}

fn offset(a: &[f64]) -> Vec<f64> {
    a.iter().map(|v| v + SECOND_START_OFFSET).collect()
}

fn instance(ctx: &Ctx, kind: &ExperimentKind) -> Result<Instance, CliError> {
    let pl = |spec: &DriverSpec, p: f64| -> Result<RoughPathGrid, CliError> {
        lift(&ctx.driver(spec)?, LiftKind::PiecewiseLinear, p)
    };
    let base = |x: RoughPathGrid, vf: Option<VectorField>, a: Vec<f64>| Instance {
        x,
        lift: LiftKind::PiecewiseLinear,
        allow_non_geometric: false,
        vf,
        starts: [offset(&a), a],
        reflect: None,
        gronwall: [1.0, 1.0, 1.0, 1.0],
    };
    Ok(match kind {
        ExperimentKind::LiftCheck(e) => {
            let x = lift(&ctx.driver(&e.driver)?, e.lift, e.p)?;
            let g = x.level1_path();
            Instance {
                lift: e.lift,
                allow_non_geometric: e.allow_non_geometric,
                reflect: Some(g),
                ..base(x, None, Vec::new())
            }
        }
        ExperimentKind::Skorohod(e) => {
            let raw = ctx.driver(&e.driver)?;
            let values = raw
                .values()
                .iter()
                .map(|v| v.iter().map(|x| x + e.shift).collect())
                .collect();
            let g = GridPath::new(raw.times().to_vec(), values)?;
            let x = RoughPathGrid::lift_piecewise_linear(&raw)?;
            Instance {
                reflect: Some(g),
                ..base(x, None, Vec::new())
            }
        }
        ExperimentKind::Solve(e) => {
            let x = lift(&ctx.driver(&e.driver)?, e.lift, e.p)?;
            Instance {
                lift: e.lift,
                allow_non_geometric: e.allow_non_geometric,
                ..base(x, Some(e.vf.build()?), e.a.to_vec())
            }
        }
        ExperimentKind::ExponentialConvergence(e) => {
            let n = 1usize << e.n_levels[1];
            let x =
                RoughPathGrid::lift_piecewise_linear(&GridPath::sample(n, e.t_end, |t| vec![t])?)?;
            base(x, Some(VectorField::linear(vec![e.c])?), vec![e.a])
        }
        ExperimentKind::WongZakai(e) => {
            base(pl(&e.driver, DEFAULT_P)?, Some(e.vf.build()?), e.a.to_vec())
        }
        ExperimentKind::Stability(e) => {
            let mut inst = base(pl(&e.driver, DEFAULT_P)?, Some(e.vf.build()?), vec![e.a]);
            inst.starts = [vec![e.a], vec![e.a + e.delta]];
            inst
        }
        ExperimentKind::Gronwall(e) => {
            let mut inst = base(pl(&e.driver, e.p)?, Some(e.vf.build()?), vec![e.a[0]]);
            inst.starts = [vec![e.a[0]], vec![e.a[1]]];
            inst.gronwall = [e.c, e.l, e.kappa, e.omega1_scale];
            inst
        }
    })
}

pub fn verify_experiment(
    exp: &NamedExperiment,
    base_dir: &std::path::Path,
) -> Result<ExperimentReport, CliError> {
    let ctx = Ctx { exp, base_dir };
    let tol = exp.kind.tolerances();
    let mut checks = Checks::new(exp.kind.skip_checks());
    let mut diag = Map::new();
    let inst = instance(&ctx, &exp.kind)?;
    let x = &inst.x;

    chen_check(x, tol, &mut checks, &mut diag)?;
    geometricity_check(
        x,
        inst.lift,
        inst.allow_non_geometric,
        tol,
        &mut checks,
        &mut diag,
    );
    superadditivity_check(x, tol, &mut checks, &mut diag)?;

    match (&inst.vf, &inst.reflect) {
        (Some(vf), _) => {
            let opts = rrde::solver::SolveOptions {
                allow_non_geometric: inst.allow_non_geometric,
            };
            let solved = rrde::solver::solve_reflected_orthant(vf, x, &inst.starts[0], opts);
            match solved {
                Err(rrde::Error::NonGeometric { defect }) => {
                    let why = format!("solve refused: non-geometric driver (defect {defect:e})");
                    for name in [
                        "complementarity",
                        "domain",
                        "skorohod-bound",
                        "gronwall-implication",
                    ] {
                        checks.not_applicable(name, why.clone());
                    }
                }
                Err(e) => return Err(e.into()),
                Ok(r1) => {
                    reflection_checks(&r1, tol, &mut checks, &mut diag)?;
                    let r2 = rrde::solver::solve_reflected_orthant(vf, x, &inst.starts[1], opts)?;
                    gronwall_check(x, &r1.y, &r2.y, inst.gronwall, &mut checks, &mut diag)?;
                }
            }
        }
        (None, Some(g)) => {
            let r = skorohod_orthant(g)?;
            let comp = r.complementarity_sum();
            let min_y =
                r.y.values()
                    .iter()
                    .flatten()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
            let bound = check_skorohod_bound(g, &r)?;
            checks.record("complementarity", comp == 0.0, comp, Some(0.0), None);
            checks.at_least("domain", min_y, 0.0);
            checks.at_most("skorohod-bound", bound.max_ratio, tol.skorohod_bound);
            let shifted: Vec<Vec<f64>> = g.values().iter().map(|v| offset(v)).collect();
            let r2 = skorohod_orthant(&GridPath::new(g.times().to_vec(), shifted)?)?;
            gronwall_check(x, &r.y, &r2.y, inst.gronwall, &mut checks, &mut diag)?;
        }
        (None, None) => unreachable!("every instance has a field or a reflected driver"),
    }

    Ok(ExperimentReport {
        name: exp.name.clone(),
        experiment: exp.kind.label(),
        seed: exp.seed,
        passed: checks.passed(),
        checks: checks.into_vec(),
        diagnostics: diag,
        files: Vec::new(),
    })
}
