use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rbfsbp::kernels::Kernel;
use rbfsbp::pointsets::PointSet;
use rbfsbp::quadrature::{GridFamily, PairSet, DEFAULT_RULE_TOL};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    BuildOperator,
    Verify,
    DiagnoseCollocation,
    SolveAdvection,
    SolveAdvectionDiffusion,
    Solve2d,
    Convergence,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    pub kernel: Kernel,
    #[serde(default)]
    pub centers: CenterSpec,
    #[serde(default)]
    pub poly_degree: i32,
    pub domain: (f64, f64),
    #[serde(default = "one")]
    pub blocks: usize,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub golden: Option<GoldenSpec>,
    /// Operator document to verify instead of building one.
    #[serde(default)]
    pub operator: Option<PathBuf>,
    #[serde(default)]
    pub diagnose: Option<DiagnoseSpec>,
    #[serde(default)]
    pub problem: Option<Problem>,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub convergence: Option<ConvergenceSpec>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterFamily {
    #[default]
    Equidistant,
    Halton,
    Random,
    Explicit,
}

/// Centers of the first block; the other blocks are translated copies.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterSpec {
    #[serde(default)]
    pub family: CenterFamily,
    #[serde(default = "three")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub include_endpoints: bool,
    /// Offsets from the block's left end, for `explicit`.
    #[serde(default)]
    pub points: Vec<f64>,
}

fn three() -> usize {
    3
}

impl Default for CenterSpec {
    fn default() -> Self {
        Self {
            family: CenterFamily::Equidistant,
            count: 3,
            seed: 0,
            include_endpoints: true,
            points: Vec::new(),
        }
    }
}

impl CenterSpec {
    pub fn build(&self, count: usize, xl: f64, xr: f64) -> Result<PointSet> {
        let set = match self.family {
            CenterFamily::Equidistant => PointSet::equidistant(count, xl, xr)?,
            CenterFamily::Halton => PointSet::halton(count, xl, xr, self.include_endpoints)?,
            CenterFamily::Random => PointSet::random(count, xl, xr, self.seed, self.include_endpoints)?,
            CenterFamily::Explicit => PointSet::explicit(self.points.iter().map(|p| xl + p).collect(), xl, xr)?,
        };
        Ok(set)
    }

    pub fn count(&self) -> usize {
        match self.family {
            CenterFamily::Explicit => self.points.len(),
            _ => self.count,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorMode {
    #[default]
    Rbfsbp,
    /// Differentiation of the interpolant on the centers; not energy stable.
    Collocation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(flatten)]
    pub family: GridFamily,
    #[serde(default)]
    pub n_start: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default = "default_rule_tol")]
    pub rule_tol: f64,
    #[serde(default)]
    pub mode: OperatorMode,
}

fn default_rule_tol() -> f64 {
    DEFAULT_RULE_TOL
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            family: GridFamily::Equidistant,
            n_start: None,
            n_max: None,
            rule_tol: DEFAULT_RULE_TOL,
            mode: OperatorMode::Rbfsbp,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenSpec {
    pub name: String,
    /// Golden file; the bundled set is used when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnoseFamily {
    Equidistant,
    Halton,
    Random,
}

impl DiagnoseFamily {
    pub fn name(self) -> &'static str {
        match self {
            DiagnoseFamily::Equidistant => "equidistant",
            DiagnoseFamily::Halton => "halton",
            DiagnoseFamily::Random => "random",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSpec {
    pub families: Vec<DiagnoseFamily>,
    pub sizes: Vec<usize>,
    pub degrees: Vec<i32>,
    #[serde(default = "seed_one")]
    pub seed: u64,
    #[serde(default = "ordered")]
    pub pairs: PairSet,
}

fn seed_one() -> u64 {
    1
}

fn ordered() -> PairSet {
    PairSet::Ordered
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    /// `exp(-sharpness (x - center)^2)` on a periodic interval.
    PeriodicPulse {
        #[serde(default = "unit")]
        a: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "twenty")]
        sharpness: f64,
    },
    /// Smooth bump with inflow data at the left end, unit speed.
    InflowBump,
    /// `u_t + u_x = kappa u_xx`, `u(0) = 0`, `u(right) = 1`, `u(x, 0) = 2x`.
    BoundaryLayer { kappa: f64 },
    /// Pulse at the center of a periodic square.
    Torus2d { a: f64, b: f64 },
    /// Pulse at (0.25, 0.25) with zero inflow data.
    Inflow2d { a: f64, b: f64 },
}

fn unit() -> f64 {
    1.0
}

fn twenty() -> f64 {
    20.0
}

impl Problem {
    pub fn is_2d(&self) -> bool {
        matches!(self, Problem::Torus2d { .. } | Problem::Inflow2d { .. })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default = "unit")]
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Fixed step; overrides `cfl`.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Write every n-th step to the energy trace (the last step always).
    #[serde(default = "one")]
    pub log_every: usize,
}

fn default_cfl() -> f64 {
    rbfsbp::timestepping::DEFAULT_CFL
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            cfl: default_cfl(),
            dt: None,
            log_every: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub k_values: Vec<usize>,
}

impl ExperimentConfig {
    /// Read a config and resolve relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.operator.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.golden.as_mut().and_then(|g| g.path.as_mut()) {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.domain;
        if !(a < b) {
            bail!("domain [{a}, {b}] is empty");
        }
        if self.blocks == 0 {
            bail!("blocks must be at least 1");
        }
        for p in self.operator.iter().chain(self.golden.iter().filter_map(|g| g.path.as_ref())) {
            if !p.exists() {
                bail!("{} does not exist", p.display());
            }
        }
        if !(self.time.t_end > 0.0 && self.time.cfl > 0.0) || self.time.dt.is_some_and(|dt| !(dt > 0.0)) {
            bail!("time settings must be positive");
        }
        if self.time.log_every == 0 {
            bail!("log_every must be at least 1");
        }
        Ok(())
    }

    pub fn block_width(&self) -> f64 {
        (self.domain.1 - self.domain.0) / self.blocks as f64
    }

    pub fn check_kind(&self, allowed: &[ExperimentKind]) -> Result<()> {
        match self.kind {
            Some(k) if !allowed.contains(&k) => bail!("config kind {k:?} does not match this command"),
            _ => Ok(()),
        }
    }
}
