//! SAT semi-discretizations on multi-block grids: 1D advection (inflow or
//! periodic), single-block advection-diffusion, and 2D advection on tensor
//! blocks. Also the discrete energy and error norms.

use std::sync::Arc;

use log::warn;
use thiserror::Error;

use crate::sbp::{OperatorKind, SbpOperator};
use crate::timestepping::{StepError, TimeLoop};

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("no blocks")]
    Empty,
    #[error("block {left} ends at {end} but block {} starts at {start}", left + 1)]
    InterfaceMismatch { left: usize, end: f64, start: f64 },
    #[error("advection-diffusion needs exactly one block, got {0}")]
    NeedsSingleBlock(usize),
    #[error("kappa({x}) = {value} is negative")]
    NegativeKappa { x: f64, value: f64 },
    #[error("advection speed {0} is not finite")]
    BadSpeed(f64),
    #[error("state has {got} entries, grid has {expected}")]
    StateLength { expected: usize, got: usize },
    #[error(transparent)]
    Step(#[from] StepError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Line,
    /// Last block's right end is coupled to the first block's left end.
    Ring,
}

#[derive(Clone, Debug)]
pub struct BlockGrid {
    blocks: Vec<SbpOperator>,
    topology: Topology,
    offsets: Vec<usize>,
}

impl BlockGrid {
    pub fn new(blocks: Vec<SbpOperator>, topology: Topology) -> Result<Self, SolverError> {
        if blocks.is_empty() {
            return Err(SolverError::Empty);
        }
        for (i, w) in blocks.windows(2).enumerate() {
            let end = *w[0].points().last().unwrap();
            let start = w[1].points()[0];
            let scale = 1.0 + end.abs().max(start.abs());
            if (end - start).abs() > 1e-12 * scale {
                return Err(SolverError::InterfaceMismatch { left: i, end, start });
            }
        }
        if blocks.iter().any(|b| b.kind() == OperatorKind::CollocationUnstable) {
            warn!("grid contains plain collocation blocks; the scheme is not energy stable");
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        for b in &blocks {
            offsets.push(acc);
            acc += b.len();
        }
        offsets.push(acc);
        Ok(Self {
            blocks,
            topology,
            offsets,
        })
    }

    /// `count` copies of `reference` laid end to end from `x_left`.
    pub fn uniform(reference: &SbpOperator, count: usize, x_left: f64, topology: Topology) -> Result<Self, SolverError> {
        let (a, b) = reference.domain();
        let width = b - a;
        let blocks = (0..count)
            .map(|i| reference.translated(x_left + i as f64 * width - a))
            .collect();
        Self::new(blocks, topology)
    }

    pub fn blocks(&self) -> &[SbpOperator] {
        &self.blocks
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Total number of nodes; interface nodes are counted once per block.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn points(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.points().iter().cloned()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.weights().iter().cloned()).collect()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.blocks[0].domain().0, self.blocks.last().unwrap().domain().1)
    }

    /// Largest neighbor gap inside any block.
    pub fn h(&self) -> f64 {
        self.blocks.iter().map(|b| b.h()).fold(0.0, f64::max)
    }

    /// Smallest neighbor gap inside any block.
    pub fn min_gap(&self) -> f64 {
        self.blocks.iter().map(|b| b.min_gap()).fold(f64::INFINITY, f64::min)
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points().into_iter().map(f).collect()
    }

    fn check_len(&self, u: &[f64]) -> Result<(), SolverError> {
        if u.len() != self.len() {
            return Err(SolverError::StateLength {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }
}

/// Boundary treatment for advection-diffusion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiffusionBc {
    /// Flux data `a u - kappa u_x = g_L` at the left end and
    /// `kappa u_x = g_R` at the right end, with penalties `sigma0`, `sigma1`.
    Robin { sigma0: f64, sigma1: f64 },
    /// Values `u = g_L`, `u = g_R`, imposed with symmetric penalties.
    Dirichlet,
}

impl Default for DiffusionBc {
    fn default() -> Self {
        DiffusionBc::Robin {
            sigma0: -1.0,
            sigma1: 1.0,
        }
    }
}

#[derive(Clone)]
pub struct SolveConfig {
    pub a: f64,
    pub kappa: Option<SpaceFn>,
    pub bc: DiffusionBc,
    pub forcing: Option<SpaceTimeFn>,
    pub g_left: Option<TimeFn>,
    pub g_right: Option<TimeFn>,
    pub initial: SpaceFn,
}

impl SolveConfig {
    pub fn advection(a: f64, initial: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            a,
            kappa: None,
            bc: DiffusionBc::default(),
            forcing: None,
            g_left: None,
            g_right: None,
            initial: Arc::new(initial),
        }
    }

    pub fn with_kappa(mut self, kappa: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.kappa = Some(Arc::new(kappa));
        self
    }

    pub fn with_left(mut self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.g_left = Some(Arc::new(g));
        self
    }

    pub fn with_right(mut self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.g_right = Some(Arc::new(g));
        self
    }

    pub fn with_bc(mut self, bc: DiffusionBc) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_forcing(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.forcing = Some(Arc::new(f));
        self
    }

    fn left(&self, t: f64) -> f64 {
        self.g_left.as_ref().map_or(0.0, |g| g(t))
    }

    fn right(&self, t: f64) -> f64 {
        self.g_right.as_ref().map_or(0.0, |g| g(t))
    }
}

/// `out = -a D u + P^{-1} S` along one line of blocks. Boundary data enter
/// only at the physical inflow end of a `Line`.
fn advection_line(grid: &BlockGrid, a: f64, g_in: f64, u: &[f64], out: &mut [f64]) {
    let nb = grid.blocks.len();
    let off = &grid.offsets;
    for (bi, op) in grid.blocks.iter().enumerate() {
        let ub = &u[off[bi]..off[bi + 1]];
        let ob = &mut out[off[bi]..off[bi + 1]];
        let d = op.d();
        let n = op.len();
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += d[(i, j)] * ub[j];
            }
            ob[i] = -a * s;
        }
        let w = op.weights();
        if a > 0.0 {
            let outer = if bi > 0 {
                u[off[bi] - 1]
            } else {
                match grid.topology {
                    Topology::Ring => u[off[nb] - 1],
                    Topology::Line => g_in,
                }
            };
            ob[0] -= a * (ub[0] - outer) / w[0];
        } else if a < 0.0 {
            let outer = if bi + 1 < nb {
                u[off[bi + 1]]
            } else {
                match grid.topology {
                    Topology::Ring => u[0],
                    Topology::Line => g_in,
                }
            };
            ob[n - 1] += a * (ub[n - 1] - outer) / w[n - 1];
        }
    }
}

pub fn advection_rhs(grid: &BlockGrid, cfg: &SolveConfig, u: &[f64], t: f64, out: &mut [f64]) -> Result<(), SolverError> {
    grid.check_len(u)?;
    if !cfg.a.is_finite() {
        return Err(SolverError::BadSpeed(cfg.a));
    }
    let g_in = if cfg.a >= 0.0 { cfg.left(t) } else { cfg.right(t) };
    advection_line(grid, cfg.a, g_in, u, out);
    if let Some(f) = &cfg.forcing {
        for (o, x) in out.iter_mut().zip(grid.points()) {
            *o += f(x, t);
        }
    }
    Ok(())
}

fn sample_kappa(cfg: &SolveConfig, x: &[f64]) -> Result<Vec<f64>, SolverError> {
    match &cfg.kappa {
        None => Ok(vec![0.0; x.len()]),
        Some(k) => x
            .iter()
            .map(|&x| {
                let value = k(x);
                if value >= 0.0 {
                    Ok(value)
                } else {
                    Err(SolverError::NegativeKappa { x, value })
                }
            })
            .collect(),
    }
}

/// `u_t = -a D u + D (K D u) + P^{-1} S` on a single block.
pub fn advection_diffusion_rhs(
    grid: &BlockGrid,
    cfg: &SolveConfig,
    u: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<(), SolverError> {
    grid.check_len(u)?;
    if grid.blocks.len() != 1 {
        return Err(SolverError::NeedsSingleBlock(grid.blocks.len()));
    }
    let a = cfg.a;
    if !a.is_finite() {
        return Err(SolverError::BadSpeed(a));
    }
    let op = &grid.blocks[0];
    let x = op.points();
    let kappa = sample_kappa(cfg, x)?;
    let d = op.d();
    let w = op.weights();
    let n = op.len();
    let du: Vec<f64> = (0..n).map(|i| (0..n).map(|j| d[(i, j)] * u[j]).sum()).collect();
    let flux: Vec<f64> = du.iter().zip(&kappa).map(|(v, k)| v * k).collect();
    for i in 0..n {
        let dflux: f64 = (0..n).map(|j| d[(i, j)] * flux[j]).sum();
        out[i] = -a * du[i] + dflux;
    }
    let (gl, gr) = (cfg.left(t), cfg.right(t));
    match cfg.bc {
        DiffusionBc::Robin { sigma0, sigma1 } => {
            out[0] += sigma0 * (a * u[0] - flux[0] - gl) / w[0];
            out[n - 1] -= sigma1 * (flux[n - 1] - gr) / w[n - 1];
        }
        DiffusionBc::Dirichlet => {
            let tau_l = a.max(0.0) + 2.0 * kappa[0] / w[0];
            let tau_r = (-a).max(0.0) + 2.0 * kappa[n - 1] / w[n - 1];
            let jump_l = u[0] - gl;
            let jump_r = u[n - 1] - gr;
            out[0] -= tau_l * jump_l / w[0];
            out[n - 1] -= tau_r * jump_r / w[n - 1];
            for j in 0..n {
                out[j] += (kappa[0] * d[(0, j)] * jump_l - kappa[n - 1] * d[(n - 1, j)] * jump_r) / w[j];
            }
        }
    }
    if let Some(f) = &cfg.forcing {
        for i in 0..n {
            out[i] += f(x[i], t);
        }
    }
    Ok(())
}

/// `2 (D u)^T P K (D u)` on a single block.
pub fn viscous_dissipation(grid: &BlockGrid, cfg: &SolveConfig, u: &[f64]) -> Result<f64, SolverError> {
    let op = &grid.blocks[0];
    let kappa = sample_kappa(cfg, op.points())?;
    let d = op.d();
    let n = op.len();
    Ok((0..n)
        .map(|i| {
            let du: f64 = (0..n).map(|j| d[(i, j)] * u[j]).sum();
            2.0 * op.weights()[i] * kappa[i] * du * du
        })
        .sum())
}

/// Boundary data for 2D inflow faces: `g_x(y, t)` on the x-inflow face and
/// `g_y(x, t)` on the y-inflow face. `None` means zero data.
#[derive(Clone, Default)]
pub struct Inflow2d {
    pub g_x: Option<SpaceTimeFn>,
    pub g_y: Option<SpaceTimeFn>,
}

/// Tensor-product grid; node `(i, j)` is stored at `i * ny + j`.
#[derive(Clone, Debug)]
pub struct Grid2d {
    pub x: BlockGrid,
    pub y: BlockGrid,
}

impl Grid2d {
    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let ys = self.y.points();
        self.x
            .points()
            .into_iter()
            .flat_map(|x| ys.iter().map(move |&y| (x, y)).collect::<Vec<_>>())
            .map(|(x, y)| f(x, y))
            .collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let wy = self.y.weights();
        self.x
            .weights()
            .into_iter()
            .flat_map(|wx| wy.iter().map(move |wy| wx * wy).collect::<Vec<_>>())
            .collect()
    }

    pub fn min_gap(&self) -> f64 {
        self.x.min_gap().min(self.y.min_gap())
    }
}

/// `u_t = -a (D_x (x) I) u - b (I (x) D_y) u + SATs`, each line handled by the
/// 1D upwind operator.
pub fn advection2d_rhs(
    grid: &Grid2d,
    a: f64,
    b: f64,
    inflow: &Inflow2d,
    u: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<(), SolverError> {
    if u.len() != grid.len() {
        return Err(SolverError::StateLength {
            expected: grid.len(),
            got: u.len(),
        });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(SolverError::BadSpeed(if a.is_finite() { b } else { a }));
    }
    let (nx, ny) = (grid.x.len(), grid.y.len());
    let xs = grid.x.points();
    let ys = grid.y.points();
    let mut line = vec![0.0; nx.max(ny)];
    let mut line_out = vec![0.0; nx.max(ny)];
    for j in 0..ny {
        for i in 0..nx {
            line[i] = u[i * ny + j];
        }
        let g = inflow.g_x.as_ref().map_or(0.0, |g| g(ys[j], t));
        advection_line(&grid.x, a, g, &line[..nx], &mut line_out[..nx]);
        for i in 0..nx {
            out[i * ny + j] = line_out[i];
        }
    }
    for i in 0..nx {
        let g = inflow.g_y.as_ref().map_or(0.0, |g| g(xs[i], t));
        let row = &u[i * ny..(i + 1) * ny];
        advection_line(&grid.y, b, g, row, &mut line_out[..ny]);
        for j in 0..ny {
            out[i * ny + j] += line_out[j];
        }
    }
    Ok(())
}

/// `sum over blocks of u^T P u`.
pub fn discrete_energy(grid: &BlockGrid, u: &[f64]) -> f64 {
    grid.weights().iter().zip(u).map(|(w, v)| w * v * v).sum()
}

pub fn discrete_energy_2d(grid: &Grid2d, u: &[f64]) -> f64 {
    grid.weights().iter().zip(u).map(|(w, v)| w * v * v).sum()
}

/// `(sqrt(sum (u - exact)^T P (u - exact)), max |u - exact|)`.
pub fn compute_errors(u: &[f64], exact: &[f64], weights: &[f64]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut max: f64 = 0.0;
    for ((a, b), w) in u.iter().zip(exact).zip(weights) {
        let e = a - b;
        l2 += w * e * e;
        max = max.max(e.abs());
    }
    (l2.sqrt(), max)
}

/// Per-step record of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyTrace {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// Time integral of `2 ||D u||_K^2`, when diffusion is present.
    pub viscous: Option<Vec<f64>>,
    /// `(l2, max)` error against an exact solution, when one is known.
    pub errors: Option<Vec<(f64, f64)>>,
}

impl EnergyTrace {
    pub fn push(&mut self, step: usize, t: f64, energy: f64) {
        self.steps.push(step);
        self.times.push(t);
        self.energy.push(energy);
    }

    /// Largest relative step-to-step energy increase (0 if none).
    pub fn max_relative_increase(&self) -> f64 {
        self.energy
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    pub fn relative_drop(&self) -> f64 {
        let first = self.energy[0];
        (first - self.energy.last().unwrap()) / first
    }
}

/// Which semi-discretization a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equation {
    Advection,
    AdvectionDiffusion,
}

/// Integrate a 1D problem from its initial data. `exact(x, t)`, when given,
/// fills the error columns of the trace.
pub fn run_1d(
    grid: &BlockGrid,
    cfg: &SolveConfig,
    equation: Equation,
    time: &TimeLoop,
    exact: Option<&dyn Fn(f64, f64) -> f64>,
) -> Result<(Vec<f64>, EnergyTrace), SolverError> {
    let x = grid.points();
    let weights = grid.weights();
    let u0 = grid.sample(|x| (cfg.initial)(x));
    let mut trace = EnergyTrace {
        viscous: (equation == Equation::AdvectionDiffusion).then(Vec::new),
        errors: exact.is_some().then(Vec::new),
        ..Default::default()
    };
    let mut failure = None;
    let mut rhs = |u: &[f64], t: f64, out: &mut [f64]| {
        let r = match equation {
            Equation::Advection => advection_rhs(grid, cfg, u, t, out),
            Equation::AdvectionDiffusion => advection_diffusion_rhs(grid, cfg, u, t, out),
        };
        if let Err(e) = r {
            failure.get_or_insert(e);
            out.fill(f64::NAN);
        }
    };
    let mut last: Option<(f64, f64)> = None;
    let mut visc_acc = 0.0;
    let result = time.run(&mut rhs, u0, |step, t, u| {
        trace.push(step, t, discrete_energy(grid, u));
        if let Some(v) = trace.viscous.as_mut() {
            let rate = viscous_dissipation(grid, cfg, u).unwrap_or(f64::NAN);
            if let Some((t0, r0)) = last {
                visc_acc += 0.5 * (rate + r0) * (t - t0);
            }
            last = Some((t, rate));
            v.push(visc_acc);
        }
        if let (Some(errs), Some(ex)) = (trace.errors.as_mut(), exact) {
            let e: Vec<f64> = x.iter().map(|&x| ex(x, t)).collect();
            errs.push(compute_errors(u, &e, &weights));
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((result?, trace))
}

/// Integrate 2D advection from `initial(x, y)`.
pub fn run_2d(
    grid: &Grid2d,
    a: f64,
    b: f64,
    inflow: &Inflow2d,
    initial: &dyn Fn(f64, f64) -> f64,
    time: &TimeLoop,
) -> Result<(Vec<f64>, EnergyTrace), SolverError> {
    let u0 = grid.sample(initial);
    let mut trace = EnergyTrace::default();
    let mut failure = None;
    let mut rhs = |u: &[f64], t: f64, out: &mut [f64]| {
        if let Err(e) = advection2d_rhs(grid, a, b, inflow, u, t, out) {
            failure.get_or_insert(e);
            out.fill(f64::NAN);
        }
    };
    let result = time.run(&mut rhs, u0, |step, t, u| trace.push(step, t, discrete_energy_2d(grid, u)));
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((result?, trace))
}
