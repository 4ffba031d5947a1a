//! Standard test problems: initial data, exact solutions, and block builders.

use crate::kernels::Kernel;
use crate::pointsets::PointSet;
use crate::quadrature::{GridFamily, RuleOptions};
use crate::rbf_space::RbfSpace;
use crate::sbp::{collocation_operator, construct_operator, SbpError, SbpOperator};

/// Smooth compactly supported bump on `(0, 0.5)`.
pub fn inflow_bump(x: f64) -> f64 {
    if x > 0.0 && x < 0.5 {
        let s = 4.0 * x - 1.0;
        (8.0 - 8.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// Exact solution of `u_t + u_x = 0` on `[0, 1]` with the bump as initial
/// data and `g(t) = inflow_bump(0.5 - t)` at `x = 0`.
pub fn inflow_exact(x: f64, t: f64) -> f64 {
    if x >= t {
        inflow_bump(x - t)
    } else {
        inflow_bump(0.5 - t + x)
    }
}

pub fn gaussian_pulse(x: f64) -> f64 {
    (-20.0 * x * x).exp()
}

/// `exp(-20 x^2)` advected with unit speed on the periodic interval `[-1, 1]`.
pub fn periodic_pulse_exact(x: f64, t: f64) -> f64 {
    let y = (x - t + 1.0).rem_euclid(2.0) - 1.0;
    gaussian_pulse(y)
}

/// Steady state of `u_t + u_x = kappa u_xx` on `[0, 0.5]` with
/// `u(0) = 0`, `u(0.5) = 1`.
pub fn boundary_layer_steady(x: f64, kappa: f64) -> f64 {
    (x / kappa).exp_m1() / (0.5 / kappa).exp_m1()
}

pub fn pulse_2d(x: f64, y: f64) -> f64 {
    (-20.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp()
}

/// RBFSBP operator on `[0, width]` with `k` equidistant centers, oversampled
/// on equidistant grids starting from `k + 1` nodes.
pub fn reference_block(
    kernel: Kernel,
    k: usize,
    width: f64,
    poly_degree: i32,
    rule_tol: f64,
) -> Result<(RbfSpace, SbpOperator), SbpError> {
    let centers = PointSet::equidistant(k, 0.0, width).map_err(|e| SbpError::Document(e.to_string()))?;
    let space = RbfSpace::build(kernel, &centers, poly_degree, (0.0, width))
        .map_err(|e| SbpError::Document(e.to_string()))?;
    let options = RuleOptions {
        tol: rule_tol,
        ..RuleOptions::default()
    };
    let op = construct_operator(&space, GridFamily::Equidistant, k + 1, 8 * k, options)?;
    Ok((space, op))
}

/// Plain collocation operator on `n` equidistant centers of `domain`.
pub fn collocation_block(kernel: Kernel, n: usize, domain: (f64, f64), poly_degree: i32) -> Result<SbpOperator, SbpError> {
    let centers = PointSet::equidistant(n, domain.0, domain.1).map_err(|e| SbpError::Document(e.to_string()))?;
    let space =
        RbfSpace::build(kernel, &centers, poly_degree, domain).map_err(|e| SbpError::Document(e.to_string()))?;
    Ok(collocation_operator(&space))
}
