use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rbfsbp::golden::load_goldens;
use rbfsbp::pointsets::PointSet;
use rbfsbp::problems::{inflow_bump, inflow_exact};
use rbfsbp::quadrature::{collocation_diagnostic, RuleOptions};
use rbfsbp::rbf_space::{RbfSpace, SpaceOptions};
use rbfsbp::sbp::{collocation_operator, construct_operator, discrete_ibp_check, verify_sbp, EXACTNESS_TOL};
use rbfsbp::solver::{
    compute_errors, run_1d, run_2d, BlockGrid, DiffusionBc, Equation, EnergyTrace, Grid2d, Inflow2d, SolveConfig,
    Topology,
};
use rbfsbp::timestepping::TimeLoop;
use rbfsbp::SbpOperator;
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::config::{DiagnoseFamily, ExperimentConfig, ExperimentKind, OperatorMode, Problem};

const BUNDLED_GOLDENS: &str = include_str!("../../../goldens/operators.json");

/// What a successful command reports: either every check held, or the
/// artifacts were written but some check failed.
#[derive(Debug, PartialEq)]
pub enum Status {
    Ok,
    ChecksFailed(String),
}

pub fn build_block(cfg: &ExperimentConfig, k: usize) -> Result<(RbfSpace, SbpOperator)> {
    let xl = cfg.domain.0;
    let xr = xl + cfg.block_width();
    let centers = cfg.centers.build(k, xl, xr)?;
    let space = RbfSpace::build(cfg.kernel, &centers, cfg.poly_degree, (xl, xr))?;
    let op = match cfg.grid.mode {
        OperatorMode::Rbfsbp => {
            let options = RuleOptions {
                tol: cfg.grid.rule_tol,
                ..RuleOptions::default()
            };
            let n_start = cfg.grid.n_start.unwrap_or(k + 1);
            let n_max = cfg.grid.n_max.unwrap_or(10 * k);
            construct_operator(&space, cfg.grid.family, n_start, n_max, options)?
        }
        OperatorMode::Collocation => collocation_operator(&space),
    };
    Ok((space, op))
}

fn space_of(op: &SbpOperator) -> Result<RbfSpace> {
    let d = op.space().ok_or_else(|| anyhow!("operator carries no space description"))?;
    Ok(RbfSpace::from_centers(d.kernel, &d.centers, d.poly_degree, d.domain, SpaceOptions::default())?)
}

#[derive(Serialize)]
struct Verification {
    kind: rbfsbp::OperatorKind,
    nodes: usize,
    report: rbfsbp::VerifyReport,
    /// Largest `|v^T Q u + u^T Q v - (u v)|_ends|` over random space members.
    ibp_defect: f64,
    passed: bool,
}

fn verification(op: &SbpOperator, space: &RbfSpace) -> Verification {
    let report = verify_sbp(op, space, EXACTNESS_TOL);
    let ibp_defect = discrete_ibp_check(op, space, 16, 7);
    Verification {
        kind: op.kind(),
        nodes: op.len(),
        passed: report.passed(),
        report,
        ibp_defect,
    }
}

pub fn build_operator(cfg: &ExperimentConfig, out: &Path) -> Result<Status> {
    cfg.check_kind(&[ExperimentKind::BuildOperator])?;
    let mut art = Artifacts::open(out)?;
    let (space, op) = build_block(cfg, cfg.centers.count())?;
    art.write("operator.json", op.to_json() + "\n")?;
    let v = verification(&op, &space);
    println!("operator: {} nodes, kind {:?}", op.len(), op.kind());
    println!("{}", v.report);
    let mut failures = Vec::new();
    if !v.passed {
        failures.push("verification".to_string());
    }
    art.write_json("verification.json", &v)?;
    if let Some(g) = &cfg.golden {
        let text = match &g.path {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => BUNDLED_GOLDENS.to_string(),
        };
        let set = load_goldens(&text)?;
        let golden = set.get(&g.name).ok_or_else(|| anyhow!("no golden named {:?}", g.name))?;
        let cmp = golden.compare(&g.name, &op)?;
        println!(
            "golden {}: {} (weights {:.2e}, Q mismatches {}, D mismatches {})",
            g.name,
            if cmp.passed() { "match" } else { "MISMATCH" },
            cmp.weight_error,
            cmp.q_mismatches,
            cmp.d_mismatches
        );
        if !cmp.passed() {
            failures.push(format!("golden {}", g.name));
        }
        art.write_json("golden.json", &cmp)?;
    }
    art.commit();
    Ok(status(failures))
}

fn status(failures: Vec<String>) -> Status {
    if failures.is_empty() {
        Status::Ok
    } else {
        Status::ChecksFailed(failures.join(", "))
    }
}

pub fn verify(cfg: &ExperimentConfig, out: &Path) -> Result<Status> {
    cfg.check_kind(&[ExperimentKind::Verify, ExperimentKind::BuildOperator])?;
    let (space, op) = match &cfg.operator {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let op = SbpOperator::from_json(&text)?;
            (space_of(&op)?, op)
        }
        None => build_block(cfg, cfg.centers.count())?,
    };
    let mut art = Artifacts::open(out)?;
    let v = verification(&op, &space);
    println!("{}", v.report);
    println!("ibp defect {:.3e}", v.ibp_defect);
    art.write_json("verification.json", &v)?;
    art.commit();
    Ok(if v.passed {
        Status::Ok
    } else {
        Status::ChecksFailed("verification".into())
    })
}

#[derive(Serialize)]
struct DiagnosticRow {
    family: &'static str,
    #[serde(rename = "N")]
    n: usize,
    poly_degree: i32,
    residual: f64,
    min_weight: f64,
}

pub fn diagnose(cfg: &ExperimentConfig, out: &Path) -> Result<Status> {
    cfg.check_kind(&[ExperimentKind::DiagnoseCollocation])?;
    let spec = cfg.diagnose.as_ref().ok_or_else(|| anyhow!("config has no `diagnose` section"))?;
    let (xl, xr) = cfg.domain;
    let mut art = Artifacts::open(out)?;
    let mut rows = Vec::new();
    for &family in &spec.families {
        for &n in &spec.sizes {
            let pts = match family {
                DiagnoseFamily::Equidistant => PointSet::equidistant(n, xl, xr)?,
                DiagnoseFamily::Halton => PointSet::halton(n, xl, xr, false)?,
                DiagnoseFamily::Random => PointSet::random(n, xl, xr, spec.seed, false)?,
            };
            let x = pts.points();
            // moments over the hull, so the boundary matrix sits on the first and last point
            let hull = (x[0], x[x.len() - 1]);
            for &degree in &spec.degrees {
                let space = RbfSpace::from_centers(cfg.kernel, x, degree, hull, SpaceOptions::default())
                    .with_context(|| format!("{} N={n} degree {degree}", family.name()))?;
                let fit = collocation_diagnostic(&space, spec.pairs);
                println!(
                    "{:<12} N={n:<4} degree {degree:>2}: residual {:.2e}, min weight {:.2e}",
                    family.name(),
                    fit.residual,
                    fit.min_weight
                );
                rows.push(DiagnosticRow {
                    family: family.name(),
                    n,
                    poly_degree: degree,
                    residual: fit.residual,
                    min_weight: fit.min_weight,
                });
            }
        }
    }
    art.write_csv("diagnostic.csv", &rows)?;
    art.commit();
    Ok(Status::Ok)
}

type Exact1d = Box<dyn Fn(f64, f64) -> f64>;
type Field2d = Box<dyn Fn(f64, f64) -> f64>;
type Exact2d = Box<dyn Fn(f64, f64, f64) -> f64>;

enum Setup {
    OneD {
        grid: BlockGrid,
        solve: SolveConfig,
        equation: Equation,
        exact: Exact1d,
        speed: f64,
        kappa_max: f64,
    },
    TwoD {
        grid: Grid2d,
        a: f64,
        b: f64,
        initial: Field2d,
        exact: Exact2d,
    },
}

/// Shortest signed offset of `d` on a circle of length `len`.
fn periodic_offset(d: f64, len: f64) -> f64 {
    (d + 0.5 * len).rem_euclid(len) - 0.5 * len
}

fn setup(cfg: &ExperimentConfig, problem: &Problem, k: usize) -> Result<Setup> {
    let (_, op) = build_block(cfg, k)?;
    let (xl, xr) = cfg.domain;
    let len = xr - xl;
    let line = |topology| BlockGrid::uniform(&op, cfg.blocks, xl, topology);
    Ok(match *problem {
        Problem::PeriodicPulse { a, center, sharpness } => {
            let pulse = move |x: f64, t: f64| (-sharpness * periodic_offset(x - a * t - center, len).powi(2)).exp();
            Setup::OneD {
                grid: line(Topology::Ring)?,
                solve: SolveConfig::advection(a, move |x| pulse(x, 0.0)),
                equation: Equation::Advection,
                exact: Box::new(pulse),
                speed: a,
                kappa_max: 0.0,
            }
        }
        Problem::InflowBump => Setup::OneD {
            grid: line(Topology::Line)?,
            solve: SolveConfig::advection(1.0, move |x| inflow_bump(x - xl)).with_left(|t| inflow_bump(0.5 - t)),
            equation: Equation::Advection,
            exact: Box::new(move |x, t| inflow_exact(x - xl, t)),
            speed: 1.0,
            kappa_max: 0.0,
        },
        Problem::BoundaryLayer { kappa } => {
            if !(kappa > 0.0) {
                bail!("kappa must be positive");
            }
            let steady = move |x: f64| ((x - xl) / kappa).exp_m1() / (len / kappa).exp_m1();
            Setup::OneD {
                grid: line(Topology::Line)?,
                solve: SolveConfig::advection(1.0, move |x| (x - xl) / len)
                    .with_kappa(move |_| kappa)
                    .with_bc(DiffusionBc::Dirichlet)
                    .with_left(|_| 0.0)
                    .with_right(|_| 1.0),
                equation: Equation::AdvectionDiffusion,
                exact: Box::new(move |x, _| steady(x)),
                speed: 1.0,
                kappa_max: kappa,
            }
        }
        Problem::Torus2d { a, b } => {
            let g = line(Topology::Ring)?;
            let mid = xl + 0.5 * len;
            let pulse = move |x: f64, y: f64, t: f64| {
                let dx = periodic_offset(x - a * t - mid, len);
                let dy = periodic_offset(y - b * t - mid, len);
                (-20.0 * (dx * dx + dy * dy)).exp()
            };
            Setup::TwoD {
                grid: Grid2d { x: g.clone(), y: g },
                a,
                b,
                initial: Box::new(move |x, y| pulse(x, y, 0.0)),
                exact: Box::new(pulse),
            }
        }
        Problem::Inflow2d { a, b } => {
            if a < 0.0 || b < 0.0 {
                bail!("inflow2d needs non-negative speeds");
            }
            let g = line(Topology::Line)?;
            let c = xl + 0.25;
            // zero inflow data: anything entering through the inflow faces is zero
            let pulse = move |x: f64, y: f64, t: f64| {
                let (x0, y0) = (x - a * t, y - b * t);
                if x0 < xl || y0 < xl {
                    0.0
                } else {
                    (-20.0 * ((x0 - c).powi(2) + (y0 - c).powi(2))).exp()
                }
            };
            Setup::TwoD {
                grid: Grid2d { x: g.clone(), y: g },
                a,
                b,
                initial: Box::new(move |x, y| pulse(x, y, 0.0)),
                exact: Box::new(pulse),
            }
        }
    })
}

fn time_loop(cfg: &ExperimentConfig, h: f64, speed: f64, kappa_max: f64) -> Result<TimeLoop> {
    let t = &cfg.time;
    Ok(match t.dt {
        Some(dt) => TimeLoop::with_dt(dt, t.t_end)?,
        None => TimeLoop::from_cfl(t.cfl, h, speed, kappa_max, t.t_end)?,
    })
}

struct RunResult {
    points: Vec<(f64, Option<f64>)>,
    u: Vec<f64>,
    exact: Vec<f64>,
    trace: EnergyTrace,
    /// `(l2, max)` error at every logged step for 1D runs.
    errors: Option<Vec<(f64, f64)>>,
    final_error: (f64, f64),
    time: TimeLoop,
    nodes_per_block: usize,
    h: f64,
}

fn run_problem(cfg: &ExperimentConfig, problem: &Problem, k: usize) -> Result<RunResult> {
    match setup(cfg, problem, k)? {
        Setup::OneD {
            grid,
            solve,
            equation,
            exact,
            speed,
            kappa_max,
        } => {
            let time = time_loop(cfg, grid.min_gap(), speed, kappa_max)?;
            let (u, trace) = run_1d(&grid, &solve, equation, &time, Some(&*exact))?;
            let x = grid.points();
            let ex: Vec<f64> = x.iter().map(|&x| exact(x, cfg.time.t_end)).collect();
            let final_error = compute_errors(&u, &ex, &grid.weights());
            Ok(RunResult {
                points: x.into_iter().map(|x| (x, None)).collect(),
                u,
                exact: ex,
                errors: trace.errors.clone(),
                trace,
                final_error,
                time,
                nodes_per_block: grid.blocks()[0].len(),
                h: grid.h(),
            })
        }
        Setup::TwoD {
            grid,
            a,
            b,
            initial,
            exact,
        } => {
            let time = time_loop(cfg, grid.min_gap(), a.abs() + b.abs(), 0.0)?;
            let (u, trace) = run_2d(&grid, a, b, &Inflow2d::default(), &*initial, &time)?;
            let t_end = cfg.time.t_end;
            let ex = grid.sample(|x, y| exact(x, y, t_end));
            let final_error = compute_errors(&u, &ex, &grid.weights());
            let ys = grid.y.points();
            let points = grid
                .x
                .points()
                .into_iter()
                .flat_map(|x| ys.iter().map(move |&y| (x, Some(y))).collect::<Vec<_>>())
                .collect();
            Ok(RunResult {
                points,
                u,
                exact: ex,
                trace,
                errors: None,
                final_error,
                time,
                nodes_per_block: grid.x.blocks()[0].len(),
                h: grid.x.h(),
            })
        }
    }
}

#[derive(Serialize)]
struct EnergyRow {
    step: usize,
    t: f64,
    energy: f64,
}

#[derive(Serialize)]
struct EnergyErrorRow {
    step: usize,
    t: f64,
    energy: f64,
    l2_error: f64,
    max_error: f64,
}

#[derive(Serialize)]
struct SolutionRow1d {
    x: f64,
    u: f64,
    exact: f64,
}

#[derive(Serialize)]
struct SolutionRow2d {
    x: f64,
    y: f64,
    u: f64,
    exact: f64,
}

#[derive(Serialize)]
struct SolveSummary {
    problem: Problem,
    nodes_per_block: usize,
    blocks: usize,
    total_nodes: usize,
    dt: f64,
    steps: usize,
    t_end: f64,
    energy_initial: f64,
    energy_final: f64,
    relative_energy_drop: f64,
    max_relative_energy_increase: f64,
    l2_error: f64,
    max_error: f64,
}

fn logged(step: usize, last: usize, every: usize) -> bool {
    step % every == 0 || step == last
}

pub fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<Status> {
    cfg.check_kind(&[
        ExperimentKind::SolveAdvection,
        ExperimentKind::SolveAdvectionDiffusion,
        ExperimentKind::Solve2d,
    ])?;
    let problem = cfg.problem.as_ref().ok_or_else(|| anyhow!("config has no `problem`"))?;
    let mut art = Artifacts::open(out)?;
    let r = run_problem(cfg, problem, cfg.centers.count())?;
    let tr = &r.trace;
    let last = *tr.steps.last().unwrap_or(&0);
    let every = cfg.time.log_every;
    match &r.errors {
        Some(errs) => {
            let rows: Vec<_> = (0..tr.steps.len())
                .filter(|&i| logged(tr.steps[i], last, every))
                .map(|i| EnergyErrorRow {
                    step: tr.steps[i],
                    t: tr.times[i],
                    energy: tr.energy[i],
                    l2_error: errs[i].0,
                    max_error: errs[i].1,
                })
                .collect();
            art.write_csv("energy.csv", &rows)?;
        }
        None => {
            let rows: Vec<_> = (0..tr.steps.len())
                .filter(|&i| logged(tr.steps[i], last, every))
                .map(|i| EnergyRow {
                    step: tr.steps[i],
                    t: tr.times[i],
                    energy: tr.energy[i],
                })
                .collect();
            art.write_csv("energy.csv", &rows)?;
        }
    }
    if problem.is_2d() {
        let rows: Vec<_> = r
            .points
            .iter()
            .zip(r.u.iter().zip(&r.exact))
            .map(|(&(x, y), (&u, &exact))| SolutionRow2d {
                x,
                y: y.unwrap_or(0.0),
                u,
                exact,
            })
            .collect();
        art.write_csv("solution.csv", &rows)?;
    } else {
        let rows: Vec<_> = r
            .points
            .iter()
            .zip(r.u.iter().zip(&r.exact))
            .map(|(&(x, _), (&u, &exact))| SolutionRow1d { x, u, exact })
            .collect();
        art.write_csv("solution.csv", &rows)?;
    }
    let summary = SolveSummary {
        problem: problem.clone(),
        nodes_per_block: r.nodes_per_block,
        blocks: cfg.blocks,
        total_nodes: r.u.len(),
        dt: r.time.dt,
        steps: r.time.steps(),
        t_end: r.time.t_end,
        energy_initial: tr.energy[0],
        energy_final: *tr.energy.last().unwrap(),
        relative_energy_drop: tr.relative_drop(),
        max_relative_energy_increase: tr.max_relative_increase(),
        l2_error: r.final_error.0,
        max_error: r.final_error.1,
    };
    art.write_json("summary.json", &summary)?;
    println!(
        "{} nodes, {} steps of {:.3e}: energy {:.6e} -> {:.6e}, L2 error {:.3e}, max error {:.3e}",
        summary.total_nodes,
        summary.steps,
        summary.dt,
        summary.energy_initial,
        summary.energy_final,
        summary.l2_error,
        summary.max_error
    );
    art.commit();
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct ConvergenceRow {
    k: usize,
    nodes_per_block: usize,
    total_nodes: usize,
    h: f64,
    dt: f64,
    l2_error: f64,
    max_error: f64,
    /// Observed order against the previous row, from the L2 errors and `h`.
    order: Option<f64>,
}

pub fn convergence(cfg: &ExperimentConfig, out: &Path) -> Result<Status> {
    cfg.check_kind(&[ExperimentKind::Convergence])?;
    let problem = cfg.problem.as_ref().ok_or_else(|| anyhow!("config has no `problem`"))?;
    let spec = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| anyhow!("config has no `convergence` section"))?;
    if spec.k_values.is_empty() {
        bail!("convergence needs at least one K");
    }
    let mut art = Artifacts::open(out)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &k in &spec.k_values {
        let r = run_problem(cfg, problem, k).with_context(|| format!("K = {k}"))?;
        let order = rows
            .last()
            .map(|p| (p.l2_error / r.final_error.0).ln() / (p.h / r.h).ln());
        println!(
            "K={k:<3} N={:<4} L2 {:.3e} max {:.3e}{}",
            r.nodes_per_block,
            r.final_error.0,
            r.final_error.1,
            order.map_or(String::new(), |p| format!(" order {p:.2}"))
        );
        rows.push(ConvergenceRow {
            k,
            nodes_per_block: r.nodes_per_block,
            total_nodes: r.u.len(),
            h: r.h,
            dt: r.time.dt,
            l2_error: r.final_error.0,
            max_error: r.final_error.1,
            order,
        });
    }
    art.write_csv("convergence.csv", &rows)?;
    art.commit();
    Ok(Status::Ok)
}
