//! Diagonal-norm RBFSBP operators `D = P^{-1} Q` with `Q + Q^T = B`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::min_norm_lstsq;
use crate::pointsets::PointSet;
use crate::quadrature::{construct_positive_rule, GridFamily, QuadratureError, QuadratureRule, RuleOptions, PINV_RCOND};
use crate::rbf_space::{RbfSpace, SpaceDescriptor};
use crate::rng::SplitMix64;

/// Default relative tolerance for the exactness check.
pub const EXACTNESS_TOL: f64 = 1e-8;
/// Absolute tolerance on `||Q + Q^T - B||_inf`.
pub const SKEW_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// Built from a positive exact quadrature rule.
    Rbfsbp,
    /// `D = C_x` on the centers, with trapezoid weights for the norm.
    /// Not SBP; kept only to show the instability of plain collocation.
    CollocationUnstable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SbpOperator {
    grid: PointSet,
    weights: Vec<f64>,
    q: DMatrix<f64>,
    d: DMatrix<f64>,
    kind: OperatorKind,
    space: Option<SpaceDescriptor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub exactness_residual: f64,
    pub exactness_bound: f64,
    pub skew_residual: f64,
    pub min_weight: f64,
    /// `||D 1||_inf` when constants are in the space.
    pub constant_residual: Option<f64>,
    pub exactness_ok: bool,
    pub skew_ok: bool,
    pub positivity_ok: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.exactness_ok && self.skew_ok && self.positivity_ok
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        writeln!(
            f,
            "exactness  {:.3e} (bound {:.3e}) {}",
            self.exactness_residual,
            self.exactness_bound,
            mark(self.exactness_ok)
        )?;
        writeln!(f, "skew       {:.3e} {}", self.skew_residual, mark(self.skew_ok))?;
        write!(f, "min weight {:.6e} {}", self.min_weight, mark(self.positivity_ok))?;
        if let Some(c) = self.constant_residual {
            write!(f, "\nD*1        {c:.3e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SbpError {
    #[error("weight {value:e} at node {index} is not positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("rule has {rule} nodes but {weights} weights")]
    SizeMismatch { rule: usize, weights: usize },
    #[error("operator failed verification: {0}")]
    Verification(Box<VerifyReport>),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("bad operator document: {0}")]
    Document(String),
}

/// Minimum-norm antisymmetric `Q_A` with `Q_A C = R`, `R = P C_x - B C / 2`.
///
/// A solution exists exactly when `C^T R + R^T C = 0`, which is the
/// exactness of the rule on `(c_k c_l)'`. With `C^+` the pseudo-inverse of
/// the full-column-rank `C`, the solution of least Frobenius norm is
/// `R C^+ - (R C^+)^T + (C^+)^T (R^T C) C^+`.
fn antisymmetric_part(weights: &[f64], c: &DMatrix<f64>, cx: &DMatrix<f64>) -> DMatrix<f64> {
    let n = weights.len();
    let mut r = DMatrix::from_fn(n, c.ncols(), |i, k| weights[i] * cx[(i, k)]);
    for k in 0..c.ncols() {
        r[(0, k)] += 0.5 * c[(0, k)];
        r[(n - 1, k)] -= 0.5 * c[(n - 1, k)];
    }
    let c_pinv = pseudo_inverse(c);
    let rc = &r * &c_pinv;
    let middle = r.transpose() * c;
    let mut qa = &rc - rc.transpose() + c_pinv.transpose() * middle * &c_pinv;
    // enforce exact antisymmetry against rounding
    for i in 0..n {
        qa[(i, i)] = 0.0;
        for j in 0..i {
            let v = 0.5 * (qa[(i, j)] - qa[(j, i)]);
            qa[(i, j)] = v;
            qa[(j, i)] = -v;
        }
    }
    qa
}

fn pseudo_inverse(c: &DMatrix<f64>) -> DMatrix<f64> {
    let k = c.ncols();
    let mut out = DMatrix::zeros(k, c.nrows());
    for i in 0..c.nrows() {
        let mut e = DVector::zeros(c.nrows());
        e[i] = 1.0;
        out.set_column(i, &min_norm_lstsq(c, &e, PINV_RCOND));
    }
    out
}

fn boundary_matrix(n: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, n);
    b[(0, 0)] = -1.0;
    b[(n - 1, n - 1)] = 1.0;
    b
}

fn row_scale(q: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] / weights[i])
}

pub fn build_sbp(space: &RbfSpace, rule: &QuadratureRule) -> Result<SbpOperator, SbpError> {
    build_sbp_with_tol(space, rule, EXACTNESS_TOL)
}

pub fn build_sbp_with_tol(space: &RbfSpace, rule: &QuadratureRule, tol: f64) -> Result<SbpOperator, SbpError> {
    let n = rule.grid.len();
    if rule.weights.len() != n {
        return Err(SbpError::SizeMismatch {
            rule: n,
            weights: rule.weights.len(),
        });
    }
    if let Some((index, &value)) = rule.weights.iter().enumerate().find(|(_, w)| **w <= 0.0) {
        return Err(SbpError::NonPositiveWeight { index, value });
    }
    let cm = space.cardinal_matrices(rule.grid.points());
    let mut q = antisymmetric_part(&rule.weights, &cm.c, &cm.cx);
    q[(0, 0)] = -0.5;
    q[(n - 1, n - 1)] = 0.5;
    let op = SbpOperator {
        grid: rule.grid.clone(),
        weights: rule.weights.clone(),
        d: row_scale(&q, &rule.weights),
        q,
        kind: OperatorKind::Rbfsbp,
        space: Some(space.descriptor()),
    };
    let report = verify_sbp(&op, space, tol);
    if !report.passed() {
        return Err(SbpError::Verification(Box::new(report)));
    }
    Ok(op)
}

/// Rule construction followed by operator construction.
pub fn construct_operator(
    space: &RbfSpace,
    family: GridFamily,
    n_start: usize,
    n_max: usize,
    options: RuleOptions,
) -> Result<SbpOperator, SbpError> {
    let rule = construct_positive_rule(space, family, n_start, n_max, options)?;
    build_sbp(space, &rule)
}

/// Plain collocation differentiation on the centers (grid = centers).
pub fn collocation_operator(space: &RbfSpace) -> SbpOperator {
    let x = space.centers();
    let n = x.len();
    let cm = space.cardinal_matrices(x);
    let d = cm.cx.clone();
    let mut weights = vec![0.0; n];
    for i in 0..n - 1 {
        let h = x[i + 1] - x[i];
        weights[i] += h / 2.0;
        weights[i + 1] += h / 2.0;
    }
    let q = DMatrix::from_fn(n, n, |i, j| weights[i] * d[(i, j)]);
    let (xl, xr) = space.domain();
    let grid = PointSet::explicit(x.to_vec(), xl, xr).expect("centers are sorted inside the domain");
    SbpOperator {
        grid,
        weights,
        q,
        d,
        kind: OperatorKind::CollocationUnstable,
        space: Some(space.descriptor()),
    }
}

pub fn verify_sbp(op: &SbpOperator, space: &RbfSpace, tol: f64) -> VerifyReport {
    let n = op.len();
    let cm = space.cardinal_matrices(op.grid.points());
    let dc = &op.d * &cm.c;
    let exactness_residual = (&dc - &cm.cx).amax();
    let cx_inf = (0..n).map(|i| cm.cx.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let exactness_bound = tol * (1.0 + cx_inf);
    let skew_residual = (&op.q + op.q.transpose() - boundary_matrix(n)).amax();
    let min_weight = op.weights.iter().cloned().fold(f64::INFINITY, f64::min);
    let constant_residual = space
        .contains_constants()
        .then(|| (0..n).map(|i| op.d.row(i).sum().abs()).fold(0.0, f64::max));
    VerifyReport {
        exactness_residual,
        exactness_bound,
        skew_residual,
        min_weight,
        constant_residual,
        exactness_ok: exactness_residual <= exactness_bound,
        skew_ok: skew_residual <= SKEW_TOL,
        positivity_ok: min_weight > 0.0,
    }
}

/// Largest `|f^T P D g + (D f)^T P g - f^T B g|` over random `f, g` in the
/// space, with cardinal coefficients uniform in `[-1, 1]`.
pub fn discrete_ibp_check(op: &SbpOperator, space: &RbfSpace, trials: usize, seed: u64) -> f64 {
    let cm = space.cardinal_matrices(op.grid.points());
    let k = space.dim();
    let n = op.len();
    let mut rng = SplitMix64::new(seed);
    let p = DVector::from_column_slice(&op.weights);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = DVector::from_fn(k, |_, _| rng.uniform(-1.0, 1.0));
        let b = DVector::from_fn(k, |_, _| rng.uniform(-1.0, 1.0));
        let f = &cm.c * a;
        let g = &cm.c * b;
        let dg = &op.d * &g;
        let df = &op.d * &f;
        let lhs = f.component_mul(&p).dot(&dg) + df.component_mul(&p).dot(&g);
        let boundary = f[n - 1] * g[n - 1] - f[0] * g[0];
        worst = worst.max((lhs - boundary).abs());
    }
    worst
}

impl SbpOperator {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn grid(&self) -> &PointSet {
        &self.grid
    }

    pub fn points(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn b(&self) -> DMatrix<f64> {
        boundary_matrix(self.len())
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn space(&self) -> Option<&SpaceDescriptor> {
        self.space.as_ref()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.grid.domain()
    }

    /// Largest gap between neighboring nodes.
    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn min_gap(&self) -> f64 {
        self.grid.min_gap()
    }

    /// The same operator on a shifted interval. Norm and derivative matrices
    /// are translation invariant.
    pub fn translated(&self, dx: f64) -> SbpOperator {
        let mut op = self.clone();
        op.grid = self.grid.translated(dx);
        if let Some(s) = op.space.as_mut() {
            for c in &mut s.centers {
                *c += dx;
            }
            s.domain = (s.domain.0 + dx, s.domain.1 + dx);
        }
        op
    }

    /// Injects a perturbation into `Q` (and `D`). Used for fault testing.
    pub fn with_q_entry(&self, i: usize, j: usize, value: f64) -> SbpOperator {
        let mut op = self.clone();
        op.q[(i, j)] = value;
        op.d[(i, j)] = value / op.weights[i];
        op
    }

    pub fn to_document(&self) -> OperatorDocument {
        OperatorDocument {
            grid: self.grid.points().to_vec(),
            domain: self.grid.domain(),
            weights: self.weights.iter().map(|w| w.to_string()).collect(),
            q: self.q.transpose().iter().cloned().collect(),
            metadata: OperatorMetadata {
                kind: self.kind,
                space: self.space.clone(),
                grid_family: self.grid.family(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("operator documents always serialize")
    }

    pub fn from_document(doc: OperatorDocument) -> Result<SbpOperator, SbpError> {
        let n = doc.grid.len();
        let weights = doc
            .weights
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| SbpError::Document(format!("weight {s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if weights.len() != n || doc.q.len() != n * n || n < 2 {
            return Err(SbpError::Document(format!(
                "{n} grid points, {} weights, {} Q entries",
                weights.len(),
                doc.q.len()
            )));
        }
        let grid = PointSet::explicit(doc.grid, doc.domain.0, doc.domain.1)
            .map_err(|e| SbpError::Document(e.to_string()))?
            .with_family(doc.metadata.grid_family);
        let q = DMatrix::from_row_slice(n, n, &doc.q);
        Ok(SbpOperator {
            grid,
            d: row_scale(&q, &weights),
            weights,
            q,
            kind: doc.metadata.kind,
            space: doc.metadata.space,
        })
    }

    pub fn from_json(text: &str) -> Result<SbpOperator, SbpError> {
        let doc: OperatorDocument = serde_json::from_str(text).map_err(|e| SbpError::Document(e.to_string()))?;
        Self::from_document(doc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorMetadata {
    pub kind: OperatorKind,
    pub space: Option<SpaceDescriptor>,
    pub grid_family: crate::pointsets::PointFamily,
}

/// On-disk operator: weights as shortest round-trip decimal strings and `Q`
/// in row-major order. `D` is rebuilt from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDocument {
    pub grid: Vec<f64>,
    pub domain: (f64, f64),
    pub weights: Vec<String>,
    pub q: Vec<f64>,
    pub metadata: OperatorMetadata,
}
