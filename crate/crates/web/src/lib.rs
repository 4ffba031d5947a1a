//! WebAssembly entry points for the demo page in `www/`.
//!
//! Every export takes plain numbers and strings and returns a JSON string.
//! Failures come back as `{"error": "..."}`, so the same functions run
//! unchanged in native tests.

use rbfsbp::kernels::Kernel;
use rbfsbp::pointsets::PointSet;
use rbfsbp::quadrature::{collocation_diagnostic, GridFamily, PairSet, RuleOptions};
use rbfsbp::rbf_space::{RbfSpace, SpaceOptions};
use rbfsbp::sbp::{collocation_operator, construct_operator, verify_sbp, EXACTNESS_TOL};
use rbfsbp::solver::{advection_rhs, discrete_energy, BlockGrid, SolveConfig, Topology};
use rbfsbp::timestepping::{ssprk33_step, TimeLoop};
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

fn respond<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn kernel(name: &str, shape: f64) -> Result<Kernel, String> {
    let k = match name {
        "cubic" => Ok(Kernel::cubic()),
        "gaussian" => Kernel::gaussian(shape),
        "multiquadric" => Kernel::multiquadric(shape),
        "thin_plate" => Kernel::phs_even(1),
        other => return Err(format!("unknown kernel {other:?}")),
    };
    k.map_err(|e| e.to_string())
}

fn grid_family(name: &str) -> Result<GridFamily, String> {
    match name {
        "equidistant" => Ok(GridFamily::Equidistant),
        "halton" => Ok(GridFamily::Halton),
        "random" => Ok(GridFamily::Random { seed: 1 }),
        other => Err(format!("unknown grid family {other:?}")),
    }
}

#[derive(Serialize)]
struct OperatorView {
    grid: Vec<f64>,
    weights: Vec<f64>,
    q: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
    exactness_residual: f64,
    skew_residual: f64,
    passed: bool,
}

/// Operator on `[x_left, x_right]` with `centers` equidistant centers.
#[wasm_bindgen]
pub fn build_operator(
    kernel_name: &str,
    shape: f64,
    centers: usize,
    poly_degree: i32,
    x_left: f64,
    x_right: f64,
    grid: &str,
) -> String {
    respond((|| {
        let k = kernel(kernel_name, shape)?;
        let c = PointSet::equidistant(centers, x_left, x_right).map_err(|e| e.to_string())?;
        let space = RbfSpace::build(k, &c, poly_degree, (x_left, x_right)).map_err(|e| e.to_string())?;
        let op = construct_operator(&space, grid_family(grid)?, centers + 1, 10 * centers, RuleOptions::default())
            .map_err(|e| e.to_string())?;
        let report = verify_sbp(&op, &space, EXACTNESS_TOL);
        let n = op.len();
        let (q, d) = (op.q(), op.d());
        Ok(OperatorView {
            grid: op.points().to_vec(),
            weights: op.weights().to_vec(),
            q: (0..n).map(|i| (0..n).map(|j| q[(i, j)]).collect()).collect(),
            d: (0..n).map(|i| (0..n).map(|j| d[(i, j)]).collect()).collect(),
            exactness_residual: report.exactness_residual,
            skew_residual: report.skew_residual,
            passed: report.passed(),
        })
    })())
}

#[derive(Serialize)]
struct DiagnosticView {
    points: Vec<f64>,
    weights: Vec<f64>,
    residual: f64,
    min_weight: f64,
}

/// Best weights for plain collocation on `n` points of `[0, 1]`.
#[wasm_bindgen]
pub fn collocation_check(kernel_name: &str, shape: f64, family: &str, n: usize, poly_degree: i32) -> String {
    respond((|| {
        let k = kernel(kernel_name, shape)?;
        let pts = match family {
            "equidistant" => PointSet::equidistant(n, 0.0, 1.0),
            "halton" => PointSet::halton(n, 0.0, 1.0, false),
            "random" => PointSet::random(n, 0.0, 1.0, 1, false),
            other => return Err(format!("unknown point family {other:?}")),
        }
        .map_err(|e| e.to_string())?;
        let x = pts.points();
        let hull = (x[0], x[x.len() - 1]);
        let space =
            RbfSpace::from_centers(k, x, poly_degree, hull, SpaceOptions::default()).map_err(|e| e.to_string())?;
        let fit = collocation_diagnostic(&space, PairSet::Ordered);
        Ok(DiagnosticView {
            points: x.to_vec(),
            weights: fit.weights,
            residual: fit.residual,
            min_weight: fit.min_weight,
        })
    })())
}

#[derive(Serialize)]
struct SimulationView {
    x: Vec<f64>,
    times: Vec<f64>,
    frames: Vec<Vec<f64>>,
    energy: Vec<f64>,
    /// Time at which the run was stopped for growing without bound.
    blew_up_at: Option<f64>,
}

/// `u_t + u_x = 0` on the periodic interval `[-1, 1]` from `exp(-20 x^2)`.
/// `method` is `"rbfsbp"` (`blocks` copies of one operator) or
/// `"collocation"` (one block with `centers` nodes; `blocks` is ignored).
#[wasm_bindgen]
pub fn simulate_pulse(
    kernel_name: &str,
    shape: f64,
    method: &str,
    centers: usize,
    blocks: usize,
    poly_degree: i32,
    t_end: f64,
    frames: usize,
) -> String {
    respond((|| {
        let k = kernel(kernel_name, shape)?;
        let grid = match method {
            "rbfsbp" => {
                if blocks == 0 {
                    return Err("need at least one block".into());
                }
                let width = 2.0 / blocks as f64;
                let c = PointSet::equidistant(centers, 0.0, width).map_err(|e| e.to_string())?;
                let space = RbfSpace::build(k, &c, poly_degree, (0.0, width)).map_err(|e| e.to_string())?;
                let op = construct_operator(
                    &space,
                    GridFamily::Equidistant,
                    centers + 1,
                    10 * centers,
                    RuleOptions::default(),
                )
                .map_err(|e| e.to_string())?;
                BlockGrid::uniform(&op, blocks, -1.0, Topology::Ring)
            }
            "collocation" => {
                let c = PointSet::equidistant(centers, -1.0, 1.0).map_err(|e| e.to_string())?;
                let space = RbfSpace::build(k, &c, poly_degree, (-1.0, 1.0)).map_err(|e| e.to_string())?;
                BlockGrid::new(vec![collocation_operator(&space)], Topology::Ring)
            }
            other => return Err(format!("unknown method {other:?}")),
        }
        .map_err(|e| e.to_string())?;
        let cfg = SolveConfig::advection(1.0, |x| (-20.0 * x * x).exp());
        let time = TimeLoop::from_cfl(0.1, grid.min_gap(), 1.0, 0.0, t_end).map_err(|e| e.to_string())?;
        let every = (time.steps() / frames.max(1)).max(1);
        let mut u = grid.sample(|x| (cfg.initial)(x));
        let e0 = discrete_energy(&grid, &u);
        let mut view = SimulationView {
            x: grid.points(),
            times: vec![0.0],
            frames: vec![u.clone()],
            energy: vec![e0],
            blew_up_at: None,
        };
        let mut rhs = |u: &[f64], t: f64, out: &mut [f64]| {
            advection_rhs(&grid, &cfg, u, t, out).expect("state length matches the grid")
        };
        let n = time.steps();
        for (i, (t, dt)) in time.schedule().enumerate() {
            let next = ssprk33_step(&mut rhs, &u, t, dt);
            let e = next.as_ref().map_or(f64::INFINITY, |v| discrete_energy(&grid, v));
            if !(e <= 1e8 * e0) {
                view.blew_up_at = Some(t + dt);
                break;
            }
            u = next.map_err(|e| e.to_string())?;
            if (i + 1) % every == 0 || i + 1 == n {
                view.times.push(t + dt);
                view.frames.push(u.clone());
                view.energy.push(e);
            }
        }
        Ok(view)
    })())
}
