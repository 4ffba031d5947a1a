//! Positive least-squares quadrature rules that are exact on the span of
//! `(c_k c_l)'`, plus the collocation diagnostic (grid = centers).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::min_norm_lstsq;
use crate::pointsets::{PointSet, PointSetError};
use crate::rbf_space::{CardinalMatrices, RbfSpace};

/// Singular values below this fraction of the largest are dropped.
pub const PINV_RCOND: f64 = 1e-12;
/// Default acceptance: `||G w - m|| <= DEFAULT_RULE_TOL * (1 + ||m||)`.
pub const DEFAULT_RULE_TOL: f64 = 1e-10;

/// Which products `(c_k c_l)'` generate the rows of `G`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSet {
    /// Unordered pairs `k <= l`, `K(K+1)/2` rows.
    #[default]
    Symmetric,
    /// All ordered pairs, `K^2` rows; off-diagonal products appear twice.
    Ordered,
}

impl PairSet {
    pub fn pairs(self, k: usize) -> Vec<(usize, usize)> {
        match self {
            PairSet::Symmetric => (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect(),
            PairSet::Ordered => (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).collect(),
        }
    }
}

/// Grid generator used when oversampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GridFamily {
    Equidistant,
    Halton,
    Random { seed: u64 },
}

impl GridFamily {
    pub fn grid(self, n: usize, domain: (f64, f64)) -> Result<PointSet, PointSetError> {
        match self {
            GridFamily::Equidistant => PointSet::equidistant(n, domain.0, domain.1),
            GridFamily::Halton => PointSet::halton(n, domain.0, domain.1, true),
            GridFamily::Random { seed } => PointSet::random(n, domain.0, domain.1, seed, true),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub grid: PointSet,
    pub weights: Vec<f64>,
    pub exactness_residual: f64,
    pub min_weight: f64,
}

/// Result of one least-squares weight solve.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFit {
    pub weights: Vec<f64>,
    pub residual: f64,
    pub min_weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuleOptions {
    pub tol: f64,
    pub pairs: PairSet,
}

impl Default for RuleOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_RULE_TOL,
            pairs: PairSet::Symmetric,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("n_start {n_start} is below the space dimension {k}")]
    StartTooSmall { n_start: usize, k: usize },
    #[error(
        "no positive exact rule up to N = {n_max}; best seen at N = {best_n}: \
         residual {best_residual:e}, min weight {best_min_weight:e}"
    )]
    Exhausted {
        n_max: usize,
        best_n: usize,
        best_residual: f64,
        best_min_weight: f64,
    },
    #[error(transparent)]
    Grid(#[from] PointSetError),
}

/// Exact moments `(c_k c_l)(x_R) - (c_k c_l)(x_L)` for the chosen pairs.
pub fn product_derivative_moments(space: &RbfSpace, pairs: PairSet) -> (Vec<(usize, usize)>, Vec<f64>) {
    let (xl, xr) = space.domain();
    let k = space.dim();
    let idx = pairs.pairs(k);
    let centers = space.centers();
    let has_endpoints = centers.first() == Some(&xl) && centers.last() == Some(&xr);
    let m = if has_endpoints {
        idx.iter()
            .map(|&(a, b)| {
                let right = if a == k - 1 && b == k - 1 { 1.0 } else { 0.0 };
                let left = if a == 0 && b == 0 { 1.0 } else { 0.0 };
                right - left
            })
            .collect()
    } else {
        let ends = space.cardinal_matrices(&[xl, xr]);
        idx.iter()
            .map(|&(a, b)| ends.c[(1, a)] * ends.c[(1, b)] - ends.c[(0, a)] * ends.c[(0, b)])
            .collect()
    };
    (idx, m)
}

/// Rows `(c_k' c_l + c_k c_l')(y_n)` for each pair.
pub fn assemble_g(cm: &CardinalMatrices, pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let n = cm.grid.len();
    DMatrix::from_fn(pairs.len(), n, |row, j| {
        let (a, b) = pairs[row];
        cm.cx[(j, a)] * cm.c[(j, b)] + cm.c[(j, a)] * cm.cx[(j, b)]
    })
}

pub fn least_squares_weights(g: &DMatrix<f64>, m: &[f64]) -> WeightFit {
    let mv = DVector::from_column_slice(m);
    let w = min_norm_lstsq(g, &mv, PINV_RCOND);
    let residual = (g * &w - &mv).norm();
    let min_weight = w.iter().cloned().fold(f64::INFINITY, f64::min);
    WeightFit {
        weights: w.iter().cloned().collect(),
        residual,
        min_weight,
    }
}

/// Fit weights on a given grid and package them as a rule (no acceptance test).
pub fn fit_rule(space: &RbfSpace, grid: &PointSet, pairs: PairSet) -> QuadratureRule {
    let (idx, m) = product_derivative_moments(space, pairs);
    let cm = space.cardinal_matrices(grid.points());
    let fit = least_squares_weights(&assemble_g(&cm, &idx), &m);
    QuadratureRule {
        grid: grid.clone(),
        weights: fit.weights,
        exactness_residual: fit.residual,
        min_weight: fit.min_weight,
    }
}

/// Weights at rounding level relative to the largest one count as zero:
/// `D = P^{-1} Q` would be dominated by noise on such a node.
pub const WEIGHT_FLOOR: f64 = 1e-12;

fn accepts(rule: &QuadratureRule, m_norm: f64, tol: f64) -> bool {
    let w_max = rule.weights.iter().cloned().fold(0.0, f64::max);
    rule.exactness_residual <= tol * (1.0 + m_norm) && rule.min_weight > WEIGHT_FLOOR * w_max
}

/// Grow `N` from `n_start` until the least-squares rule is exact and positive.
pub fn construct_positive_rule(
    space: &RbfSpace,
    family: GridFamily,
    n_start: usize,
    n_max: usize,
    options: RuleOptions,
) -> Result<QuadratureRule, QuadratureError> {
    let k = space.dim();
    if n_start < k {
        return Err(QuadratureError::StartTooSmall { n_start, k });
    }
    let (_, m) = product_derivative_moments(space, options.pairs);
    let m_norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut best: Option<(usize, f64, f64)> = None;
    for n in n_start..=n_max {
        let grid = family.grid(n, space.domain())?;
        let rule = fit_rule(space, &grid, options.pairs);
        if accepts(&rule, m_norm, options.tol) {
            return Ok(rule);
        }
        let better = match best {
            None => true,
            Some((_, r, w)) => (rule.exactness_residual, -rule.min_weight) < (r, -w),
        };
        if better {
            best = Some((n, rule.exactness_residual, rule.min_weight));
        }
    }
    let (best_n, best_residual, best_min_weight) = best.unwrap_or((n_start, f64::NAN, f64::NAN));
    Err(QuadratureError::Exhausted {
        n_max,
        best_n,
        best_residual,
        best_min_weight,
    })
}

/// Least-squares weights with the grid equal to the centers.
pub fn collocation_diagnostic(space: &RbfSpace, pairs: PairSet) -> WeightFit {
    let (idx, m) = product_derivative_moments(space, pairs);
    let cm = space.cardinal_matrices(space.centers());
    least_squares_weights(&assemble_g(&cm, &idx), &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;
    use proptest::prelude::*;

    fn space(kernel: Kernel, k: usize, domain: (f64, f64)) -> RbfSpace {
        let c = PointSet::equidistant(k, domain.0, domain.1).unwrap();
        RbfSpace::build(kernel, &c, 0, domain).unwrap()
    }

    #[test]
    fn endpoint_moments() {
        let s = space(Kernel::cubic(), 3, (0.0, 1.0));
        let (idx, m) = product_derivative_moments(&s, PairSet::Symmetric);
        assert_eq!(idx.len(), 6);
        assert_eq!(m[0], -1.0);
        assert_eq!(*m.last().unwrap(), 1.0);
        assert_eq!(m[idx.iter().position(|&p| p == (0, 2)).unwrap()], 0.0);
        assert_eq!(PairSet::Ordered.pairs(3).len(), 9);
    }

    #[test]
    fn general_moments_agree_with_shortcut() {
        // interior centers only: moments come from endpoint cardinal values
        let c = [0.1, 0.4, 0.7, 0.9];
        let s = RbfSpace::from_centers(Kernel::cubic(), &c, 0, (0.0, 1.0), Default::default()).unwrap();
        let (idx, m) = product_derivative_moments(&s, PairSet::Symmetric);
        let ends = s.cardinal_matrices(&[0.0, 1.0]);
        for (&(a, b), v) in idx.iter().zip(&m) {
            let want = ends.c[(1, a)] * ends.c[(1, b)] - ends.c[(0, a)] * ends.c[(0, b)];
            assert_eq!(*v, want);
        }
        // an oversampled rule integrates those products exactly
        let rule = construct_positive_rule(&s, GridFamily::Equidistant, 4, 40, RuleOptions::default()).unwrap();
        assert!(rule.min_weight > 0.0);
    }

    #[test]
    fn g_rows_follow_product_rule() {
        let s = space(Kernel::cubic(), 3, (0.0, 1.0));
        let grid = PointSet::equidistant(4, 0.0, 1.0).unwrap();
        let cm = s.cardinal_matrices(grid.points());
        let idx = PairSet::Symmetric.pairs(3);
        let g = assemble_g(&cm, &idx);
        assert_eq!(g.shape(), (6, 4));
        for j in 0..4 {
            assert_eq!(g[(0, j)], 2.0 * cm.c[(j, 0)] * cm.cx[(j, 0)]);
        }
        let on_centers = s.cardinal_matrices(s.centers());
        let g = assemble_g(&on_centers, &idx);
        assert!((g[(0, 0)] - 2.0 * on_centers.cx[(0, 0)]).abs() < 1e-12);
    }

    #[test]
    fn cubic_four_point_weights() {
        let s = space(Kernel::cubic(), 3, (0.0, 1.0));
        let rule = construct_positive_rule(&s, GridFamily::Equidistant, 4, 10, RuleOptions::default()).unwrap();
        assert_eq!(rule.grid.len(), 4);
        let want = [16.0 / 129.0, 81.0 / 215.0, 81.0 / 215.0, 16.0 / 129.0];
        for (w, e) in rule.weights.iter().zip(want) {
            assert!((w - e).abs() <= 1e-10 * e, "{w} vs {e}");
        }
    }

    #[test]
    fn gaussian_and_multiquadric_weights() {
        let cases = [
            (Kernel::Gaussian { epsilon: 1.0 }, (0.0, 1.0), [0.15, 0.36]),
            (Kernel::Multiquadric { epsilon: 1.0 }, (0.0, 0.5), [0.07, 0.18]),
        ];
        for (kernel, dom, want) in cases {
            let s = space(kernel, 3, dom);
            let grid = PointSet::equidistant(4, dom.0, dom.1).unwrap();
            let rule = fit_rule(&s, &grid, PairSet::Symmetric);
            assert!(rule.exactness_residual < 1e-10);
            for (i, e) in [0, 1, 2, 3].iter().zip([want[0], want[1], want[1], want[0]]) {
                assert!((rule.weights[*i] - e).abs() < 5e-3, "{kernel}: {:?}", rule.weights);
            }
        }
    }

    #[test]
    fn exhausted_reports_diagnostics() {
        let s = space(Kernel::Gaussian { epsilon: 1.0 }, 3, (0.0, 1.0));
        let c = PointSet::explicit(vec![0.0, 0.25, 0.5], 0.0, 0.5).unwrap();
        let halton_space = RbfSpace::build(Kernel::Gaussian { epsilon: 1.0 }, &c, 0, (0.0, 0.5)).unwrap();
        let err = construct_positive_rule(&halton_space, GridFamily::Halton, 4, 4, RuleOptions::default()).unwrap_err();
        assert!(matches!(err, QuadratureError::Exhausted { n_max: 4, best_n: 4, .. }));
        assert!(matches!(
            construct_positive_rule(&s, GridFamily::Equidistant, 2, 5, RuleOptions::default()),
            Err(QuadratureError::StartTooSmall { .. })
        ));
    }

    #[test]
    fn halton_grid_needs_more_points_than_equidistant() {
        let c = PointSet::explicit(vec![0.0, 0.25, 0.5], 0.0, 0.5).unwrap();
        let s = RbfSpace::build(Kernel::Gaussian { epsilon: 1.0 }, &c, 0, (0.0, 0.5)).unwrap();
        // N = 3 is the collocation grid in both families; oversampling starts at 4
        let eq = construct_positive_rule(&s, GridFamily::Equidistant, 4, 40, RuleOptions::default()).unwrap();
        let ha = construct_positive_rule(&s, GridFamily::Halton, 4, 40, RuleOptions::default()).unwrap();
        assert_eq!(eq.grid.len(), 4);
        assert!(ha.grid.len() > eq.grid.len(), "{} vs {}", ha.grid.len(), eq.grid.len());
    }

    #[test]
    fn collocation_table_values() {
        let c = PointSet::equidistant(10, 0.0, 1.0).unwrap();
        let s = RbfSpace::from_centers(Kernel::cubic(), c.points(), 0, (0.0, 1.0), Default::default()).unwrap();
        let fit = collocation_diagnostic(&s, PairSet::Ordered);
        assert!((fit.residual - 0.66).abs() < 0.01, "{}", fit.residual);
        assert!((fit.min_weight - 3.31e-2).abs() < 1e-3, "{}", fit.min_weight);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn accepted_rule_is_exact_and_integrates_derivatives(k in 3usize..7, eps in 0.3f64..1.5, gauss in any::<bool>()) {
            let kernel = if gauss { Kernel::Gaussian { epsilon: eps } } else { Kernel::cubic() };
            let s = space(kernel, k, (-1.0, 1.0));
            let rule = construct_positive_rule(&s, GridFamily::Equidistant, k, 10 * k, RuleOptions::default()).unwrap();
            let (idx, m) = product_derivative_moments(&s, PairSet::Symmetric);
            let cm = s.cardinal_matrices(rule.grid.points());
            let g = assemble_g(&cm, &idx);
            let w = DVector::from_vec(rule.weights.clone());
            let gw = &g * &w;
            for (a, b) in gw.iter().zip(&m) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
            // constants are in the space, so each c_k' integrates to its endpoint jump
            let ends = s.cardinal_matrices(&[-1.0, 1.0]);
            for kk in 0..k {
                let q: f64 = (0..rule.grid.len()).map(|n| rule.weights[n] * cm.cx[(n, kk)]).sum();
                prop_assert!((q - (ends.c[(1, kk)] - ends.c[(0, kk)])).abs() <= 1e-9);
            }
        }

        #[test]
        fn residual_invariant_under_row_permutation(seed in any::<u64>()) {
            use crate::rng::SplitMix64;
            let s = space(Kernel::cubic(), 5, (0.0, 1.0));
            let (mut idx, _) = product_derivative_moments(&s, PairSet::Symmetric);
            let grid = PointSet::equidistant(7, 0.0, 1.0).unwrap();
            let cm = s.cardinal_matrices(grid.points());
            let (idx0, m0) = product_derivative_moments(&s, PairSet::Symmetric);
            let base = least_squares_weights(&assemble_g(&cm, &idx0), &m0);
            let mut rng = SplitMix64::new(seed);
            for i in (1..idx.len()).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                idx.swap(i, j);
            }
            let m: Vec<f64> = idx.iter().map(|p| m0[idx0.iter().position(|q| q == p).unwrap()]).collect();
            let perm = least_squares_weights(&assemble_g(&cm, &idx), &m);
            prop_assert!((perm.residual - base.residual).abs() <= 1e-12 * (1.0 + base.residual));
        }
    }
}
