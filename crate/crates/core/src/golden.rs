//! Reference operators stored as rational strings, and comparison against
//! them after rounding to two decimals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::Kernel;
use crate::quadrature::{fit_rule, PairSet};
use crate::rbf_space::{RbfError, RbfSpace, SpaceOptions};
use crate::sbp::{build_sbp, SbpError, SbpOperator};
use crate::pointsets::PointSet;

#[derive(Debug, Error)]
pub enum GoldenError {
    #[error("cannot parse {0:?} as a number or fraction")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Space(#[from] RbfError),
    #[error(transparent)]
    Sbp(#[from] SbpError),
    #[error(transparent)]
    Grid(#[from] crate::pointsets::PointSetError),
}

/// Parses `"p/q"`, `"-p/q"`, or a plain decimal.
pub fn parse_rational(s: &str) -> Result<f64, GoldenError> {
    let bad = || GoldenError::Parse(s.to_string());
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

pub fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoldenOperator {
    pub kernel: Kernel,
    pub centers: Vec<String>,
    pub domain: (String, String),
    pub poly_degree: i32,
    pub grid_points: usize,
    pub weights: Vec<String>,
    /// Weights given as exact fractions (compared to 1e-10 relative)
    /// rather than rounded decimals.
    pub weights_exact: bool,
    pub q: Vec<Vec<String>>,
    pub d: Vec<Vec<String>>,
}

pub type GoldenSet = BTreeMap<String, GoldenOperator>;

pub fn load_goldens(json: &str) -> Result<GoldenSet, GoldenError> {
    Ok(serde_json::from_str(json)?)
}

fn parse_all(v: &[String]) -> Result<Vec<f64>, GoldenError> {
    v.iter().map(|s| parse_rational(s)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenComparison {
    pub name: String,
    /// Largest relative weight error (exact goldens) or rounded mismatch.
    pub weight_error: f64,
    pub weights_match: bool,
    pub q_mismatches: usize,
    pub d_mismatches: usize,
    /// Largest `|computed - printed|` over Q and D entries.
    pub max_entry_gap: f64,
}

impl GoldenComparison {
    pub fn passed(&self) -> bool {
        self.weights_match && self.q_mismatches == 0 && self.d_mismatches == 0
    }
}

impl GoldenOperator {
    pub fn space(&self) -> Result<RbfSpace, GoldenError> {
        let centers = parse_all(&self.centers)?;
        let domain = (parse_rational(&self.domain.0)?, parse_rational(&self.domain.1)?);
        Ok(RbfSpace::from_centers(self.kernel, &centers, self.poly_degree, domain, SpaceOptions::default())?)
    }

    /// Build the operator on `grid_points` equidistant nodes.
    pub fn build(&self) -> Result<(RbfSpace, SbpOperator), GoldenError> {
        let space = self.space()?;
        let (a, b) = space.domain();
        let grid = PointSet::equidistant(self.grid_points, a, b)?;
        let rule = fit_rule(&space, &grid, PairSet::Symmetric);
        let op = build_sbp(&space, &rule)?;
        Ok((space, op))
    }

    pub fn compare(&self, name: &str, op: &SbpOperator) -> Result<GoldenComparison, GoldenError> {
        let w = parse_all(&self.weights)?;
        let (weight_error, weights_match) = if self.weights_exact {
            let e = w
                .iter()
                .zip(op.weights())
                .map(|(g, c)| (g - c).abs() / g.abs())
                .fold(0.0, f64::max);
            (e, e <= 1e-10 && w.len() == op.len())
        } else {
            let e = w
                .iter()
                .zip(op.weights())
                .map(|(g, c)| (round2(*c) - g).abs())
                .fold(0.0, f64::max);
            (e, e < 1e-9 && w.len() == op.len())
        };
        let mut gap: f64 = 0.0;
        let mut count = |rows: &[Vec<String>], m: &nalgebra::DMatrix<f64>| -> Result<usize, GoldenError> {
            let mut bad = 0;
            if rows.len() != m.nrows() {
                return Ok(rows.len().max(m.nrows()) * m.ncols().max(1));
            }
            for (i, row) in rows.iter().enumerate() {
                for (j, s) in row.iter().enumerate() {
                    let g = parse_rational(s)?;
                    gap = gap.max((m[(i, j)] - g).abs());
                    if (round2(m[(i, j)]) - round2(g)).abs() > 1e-9 {
                        bad += 1;
                    }
                }
            }
            Ok(bad)
        };
        let q_mismatches = count(&self.q, op.q())?;
        let d_mismatches = count(&self.d, op.d())?;
        Ok(GoldenComparison {
            name: name.to_string(),
            weight_error,
            weights_match,
            q_mismatches,
            d_mismatches,
            max_entry_gap: gap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("16/129").unwrap(), 16.0 / 129.0);
        assert_eq!(parse_rational("-3/50").unwrap(), -0.06);
        assert_eq!(parse_rational("0.15").unwrap(), 0.15);
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(round2(-0.001), 0.0);
        assert_eq!(round2(4.7323), 4.73);
    }

    #[test]
    fn stored_goldens_reproduce() {
        let set = load_goldens(include_str!("../../../goldens/operators.json")).unwrap();
        assert_eq!(set.len(), 3);
        for (name, g) in &set {
            let (_, op) = g.build().unwrap();
            let cmp = g.compare(name, &op).unwrap();
            assert!(cmp.passed(), "{cmp:?}");
        }
    }
}
