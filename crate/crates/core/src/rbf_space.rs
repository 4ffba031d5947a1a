//! The K-dimensional RBF approximation space with polynomial augmentation,
//! its saddle-point interpolation system, and cardinal-basis matrices.
//!
//! The polynomial block uses monomials in the block-local coordinate
//! `s = (2x - (x_left + x_right)) / (x_right - x_left)`, so `s` runs over
//! `[-1, 1]` on the domain. The saddle system is assembled, factored, and
//! solved in double-double arithmetic; cardinal values are rounded to f64
//! only on output.

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dd::Dd;
use crate::kernels::Kernel;
use crate::linalg::DdLu;
use crate::pointsets::PointSet;

/// Pivots below this fraction of the largest saddle entry mean "singular".
pub const SINGULAR_PIVOT_TOL: f64 = 1e-28;

#[derive(Debug, Error, PartialEq)]
pub enum RbfError {
    #[error("polynomial degree {0} is below -1")]
    BadDegree(i32),
    #[error("{m} polynomial terms exceed {k} centers; the polynomial block is overdetermined")]
    TooFewCenters { k: usize, m: usize },
    #[error("centers {0} and {1} coincide")]
    DuplicateCenters(usize, usize),
    #[error("center {0} lies outside the domain [{1}, {2}]")]
    CenterOutsideDomain(f64, f64, f64),
    #[error("saddle matrix is singular (relative pivot {relative_pivot:e} at step {step}); {hint}")]
    Singular {
        step: usize,
        relative_pivot: f64,
        hint: String,
    },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("interpolation residual {0:e} exceeds 1e-10")]
    Residual(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct SpaceOptions {
    /// A condition estimate above this only logs a warning.
    pub condition_warning: f64,
}

impl Default for SpaceOptions {
    fn default() -> Self {
        Self {
            condition_warning: 1e20,
        }
    }
}

/// Description of a space, carried along with operators built from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub kernel: Kernel,
    pub centers: Vec<f64>,
    pub poly_degree: i32,
    pub domain: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct RbfSpace {
    kernel: Kernel,
    centers: Vec<f64>,
    poly_degree: i32,
    domain: (f64, f64),
    lu: DdLu,
    /// Column `i` holds `(alpha^(i), beta^(i))` of cardinal function `c_i`.
    cardinal_coef: Vec<Vec<Dd>>,
    condition_estimate: f64,
    meets_order_hypothesis: bool,
}

/// `C[n][k] = c_k(y_n)` and `C_x[n][k] = c_k'(y_n)`.
#[derive(Clone, Debug)]
pub struct CardinalMatrices {
    pub grid: Vec<f64>,
    pub c: DMatrix<f64>,
    pub cx: DMatrix<f64>,
}

/// Interpolant coefficients: kernel weights `alpha` and polynomial `beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl RbfSpace {
    pub fn build(
        kernel: Kernel,
        centers: &PointSet,
        poly_degree: i32,
        domain: (f64, f64),
    ) -> Result<Self, RbfError> {
        Self::from_centers(kernel, centers.points(), poly_degree, domain, SpaceOptions::default())
    }

    pub fn from_centers(
        kernel: Kernel,
        centers: &[f64],
        poly_degree: i32,
        domain: (f64, f64),
        options: SpaceOptions,
    ) -> Result<Self, RbfError> {
        if poly_degree < -1 {
            return Err(RbfError::BadDegree(poly_degree));
        }
        let k = centers.len();
        let m = (poly_degree + 1) as usize;
        if m > k {
            return Err(RbfError::TooFewCenters { k, m });
        }
        let order = kernel.cpd_order();
        if let Some(&x) = centers.iter().find(|&&x| x < domain.0 || x > domain.1) {
            return Err(RbfError::CenterOutsideDomain(x, domain.0, domain.1));
        }
        // Unique solvability is only guaranteed for m >= order. Lower degrees
        // are accepted when the saddle matrix is still nonsingular.
        let meets_order_hypothesis = m >= order;
        if !meets_order_hypothesis {
            warn!(
                "{kernel} has order {order}; polynomial degree {poly_degree} is below the degree {} \
                 that guarantees unique solvability",
                order as i32 - 1
            );
        }

        let n = k + m;
        let shift = Dd::from_f64(domain.0) + Dd::from_f64(domain.1);
        let width = Dd::from_f64(domain.1) - Dd::from_f64(domain.0);
        let local = |x: f64| (Dd::from_f64(x).ldexp(1) - shift) / width;
        let mut a = vec![Dd::ZERO; n * n];
        for i in 0..k {
            for j in 0..k {
                let r = (Dd::from_f64(centers[i]) - Dd::from_f64(centers[j])).abs();
                a[i * n + j] = kernel.phi_dd(r);
            }
            let s = local(centers[i]);
            let mut p = Dd::ONE;
            for l in 0..m {
                a[i * n + k + l] = p;
                a[(k + l) * n + i] = p;
                p *= s;
            }
        }
        let a_norm1 = (0..n)
            .map(|j| (0..n).map(|i| a[i * n + j].to_f64().abs()).sum::<f64>())
            .fold(0.0, f64::max);

        let lu = DdLu::factor(n, a, SINGULAR_PIVOT_TOL).map_err(|sp| {
            let hint = match centers.windows(2).position(|w| w[0] == w[1]) {
                Some(i) => format!("centers {i} and {} coincide", i + 1),
                None if !meets_order_hypothesis => format!(
                    "{kernel} is conditionally positive definite of order {order} and needs \
                     polynomial degree >= {}",
                    order as i32 - 1
                ),
                None => "centers are not unisolvent for the polynomial block".to_string(),
            };
            RbfError::Singular {
                step: sp.step,
                relative_pivot: sp.relative_pivot,
                hint,
            }
        })?;

        let mut cardinal_coef = Vec::with_capacity(k);
        let mut inv_norm1: f64 = 0.0;
        for i in 0..n {
            let mut e = vec![Dd::ZERO; n];
            e[i] = Dd::ONE;
            let col = lu.solve(&e);
            inv_norm1 = inv_norm1.max(col.iter().map(|v| v.to_f64().abs()).sum());
            if i < k {
                cardinal_coef.push(col);
            }
        }
        let condition_estimate = a_norm1 * inv_norm1;
        if condition_estimate > options.condition_warning {
            warn!("saddle system condition estimate {condition_estimate:e} for {kernel} with {k} centers");
        }

        Ok(Self {
            kernel,
            centers: centers.to_vec(),
            poly_degree,
            domain,
            lu,
            cardinal_coef,
            condition_estimate,
            meets_order_hypothesis,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn dim(&self) -> usize {
        self.centers.len()
    }

    pub fn poly_degree(&self) -> i32 {
        self.poly_degree
    }

    /// Number of polynomial terms `m`.
    pub fn poly_terms(&self) -> usize {
        (self.poly_degree + 1) as usize
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn meets_order_hypothesis(&self) -> bool {
        self.meets_order_hypothesis
    }

    pub fn contains_constants(&self) -> bool {
        self.poly_degree >= 0
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor {
            kernel: self.kernel,
            centers: self.centers.clone(),
            poly_degree: self.poly_degree,
            domain: self.domain,
        }
    }

    fn local_coord(&self, x: Dd) -> Dd {
        let shift = Dd::from_f64(self.domain.0) + Dd::from_f64(self.domain.1);
        let width = Dd::from_f64(self.domain.1) - Dd::from_f64(self.domain.0);
        (x.ldexp(1) - shift) / width
    }

    /// Polynomial basis values and derivatives at `x`.
    fn poly_basis(&self, x: Dd) -> (Vec<Dd>, Vec<Dd>) {
        let m = self.poly_terms();
        let s = self.local_coord(x);
        let ds = Dd::from_f64(2.0) / (Dd::from_f64(self.domain.1) - Dd::from_f64(self.domain.0));
        let mut p = Vec::with_capacity(m);
        let mut dp = Vec::with_capacity(m);
        let mut pow = Dd::ONE;
        let mut pow_prev = Dd::ZERO;
        for l in 0..m {
            p.push(pow);
            dp.push(if l == 0 {
                Dd::ZERO
            } else {
                Dd::from_f64(l as f64) * pow_prev * ds
            });
            pow_prev = pow;
            pow *= s;
        }
        (p, dp)
    }

    /// Values and derivatives of every basis element (kernel translates, then
    /// polynomials) at `y`.
    fn basis_row(&self, y: f64) -> (Vec<Dd>, Vec<Dd>) {
        let yd = Dd::from_f64(y);
        let mut v = Vec::with_capacity(self.lu.dim());
        let mut dv = Vec::with_capacity(self.lu.dim());
        for &c in &self.centers {
            let d = yd - Dd::from_f64(c);
            v.push(self.kernel.phi_dd(d.abs()));
            dv.push(self.kernel.dx_dd(d));
        }
        let (p, dp) = self.poly_basis(yd);
        v.extend(p);
        dv.extend(dp);
        (v, dv)
    }

    pub fn cardinal_matrices(&self, grid: &[f64]) -> CardinalMatrices {
        let k = self.dim();
        let mut c = DMatrix::zeros(grid.len(), k);
        let mut cx = DMatrix::zeros(grid.len(), k);
        for (n, &y) in grid.iter().enumerate() {
            let (v, dv) = self.basis_row(y);
            for (i, coef) in self.cardinal_coef.iter().enumerate() {
                let mut s = Dd::ZERO;
                let mut ds = Dd::ZERO;
                for ((a, b), w) in v.iter().zip(&dv).zip(coef) {
                    s += *a * *w;
                    ds += *b * *w;
                }
                c[(n, i)] = s.to_f64();
                cx[(n, i)] = ds.to_f64();
            }
        }
        CardinalMatrices {
            grid: grid.to_vec(),
            c,
            cx,
        }
    }

    /// Solve the saddle system for data given at the centers.
    pub fn interpolate(&self, values: &[f64]) -> Result<Coefficients, RbfError> {
        let k = self.dim();
        if values.len() != k {
            return Err(RbfError::LengthMismatch {
                expected: k,
                got: values.len(),
            });
        }
        let m = self.poly_terms();
        let mut rhs: Vec<Dd> = values.iter().map(|&v| Dd::from_f64(v)).collect();
        rhs.extend(std::iter::repeat(Dd::ZERO).take(m));
        let sol = self.lu.solve(&rhs);
        let coef = Coefficients {
            alpha: sol[..k].iter().map(|v| v.to_f64()).collect(),
            beta: sol[k..].iter().map(|v| v.to_f64()).collect(),
        };
        let residual = self.saddle_residual(&sol, &rhs);
        let scale = 1.0 + values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if residual > 1e-10 * scale {
            return Err(RbfError::Residual(residual / scale));
        }
        Ok(coef)
    }

    fn saddle_residual(&self, sol: &[Dd], rhs: &[Dd]) -> f64 {
        let k = self.dim();
        let m = self.poly_terms();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            let (v, _) = self.basis_row(self.centers[i]);
            let mut s = Dd::ZERO;
            for (a, x) in v.iter().zip(sol) {
                s += *a * *x;
            }
            worst = worst.max((s - rhs[i]).to_f64().abs());
        }
        for l in 0..m {
            let mut s = Dd::ZERO;
            for i in 0..k {
                let (p, _) = self.poly_basis(Dd::from_f64(self.centers[i]));
                s += p[l] * sol[i];
            }
            worst = worst.max(s.to_f64().abs());
        }
        worst
    }

    /// Evaluate an interpolant and its derivative at `x`.
    pub fn evaluate(&self, coef: &Coefficients, x: f64) -> (f64, f64) {
        let (v, dv) = self.basis_row(x);
        let mut s = Dd::ZERO;
        let mut ds = Dd::ZERO;
        for (i, w) in coef.alpha.iter().chain(&coef.beta).enumerate() {
            s += v[i] * Dd::from_f64(*w);
            ds += dv[i] * Dd::from_f64(*w);
        }
        (s.to_f64(), ds.to_f64())
    }

    /// Polynomial basis value `p_l(x)` (monomial in the local coordinate).
    pub fn poly_value(&self, l: usize, x: f64) -> f64 {
        let (p, _) = self.poly_basis(Dd::from_f64(x));
        p[l].to_f64()
    }
}
