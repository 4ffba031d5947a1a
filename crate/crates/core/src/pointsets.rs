//! Center sets and evaluation grids on an interval.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Error, PartialEq)]
pub enum PointSetError {
    #[error("need at least {min} points, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("empty interval [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("points must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("point {0} lies outside [{1}, {2}]")]
    OutOfRange(f64, f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFamily {
    Equidistant,
    Halton,
    Random,
    Explicit,
}

/// Sorted, duplicate-free points in `[x_left, x_right]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<f64>,
    family: PointFamily,
    includes_endpoints: bool,
    domain: (f64, f64),
}

fn check_interval(x_left: f64, x_right: f64) -> Result<(), PointSetError> {
    if x_left < x_right && x_left.is_finite() && x_right.is_finite() {
        Ok(())
    } else {
        Err(PointSetError::BadInterval(x_left, x_right))
    }
}

/// Base-2 radical inverse (van der Corput) of `i`.
pub fn radical_inverse_base2(mut i: u64) -> f64 {
    let mut f = 0.5;
    let mut r = 0.0;
    while i > 0 {
        if i & 1 == 1 {
            r += f;
        }
        f *= 0.5;
        i >>= 1;
    }
    r
}

impl PointSet {
    /// `n` equally spaced points including both ends.
    pub fn equidistant(n: usize, x_left: f64, x_right: f64) -> Result<Self, PointSetError> {
        if n < 2 {
            return Err(PointSetError::TooFew { min: 2, got: n });
        }
        check_interval(x_left, x_right)?;
        let step = (x_right - x_left) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| x_left + i as f64 * step).collect();
        points[n - 1] = x_right;
        Ok(Self {
            points,
            family: PointFamily::Equidistant,
            includes_endpoints: true,
            domain: (x_left, x_right),
        })
    }

    /// Base-2 Halton (van der Corput) points, starting at index 1
    /// (1/2, 1/4, 3/4, ...). With `include_endpoints`, the interval ends take
    /// the place of the last two generated points.
    pub fn halton(
        n: usize,
        x_left: f64,
        x_right: f64,
        include_endpoints: bool,
    ) -> Result<Self, PointSetError> {
        Self::halton_from(n, 1, x_left, x_right, include_endpoints)
    }

    /// Halton points starting at an arbitrary sequence index. Index 0 yields
    /// the left end of the interval.
    pub fn halton_from(
        n: usize,
        start: u64,
        x_left: f64,
        x_right: f64,
        include_endpoints: bool,
    ) -> Result<Self, PointSetError> {
        if n < 2 {
            return Err(PointSetError::TooFew { min: 2, got: n });
        }
        check_interval(x_left, x_right)?;
        let interior = if include_endpoints { n - 2 } else { n };
        let mut points: Vec<f64> = Vec::with_capacity(n);
        if include_endpoints {
            points.push(x_left);
            points.push(x_right);
        }
        let mut idx = start;
        while points.len() < interior + if include_endpoints { 2 } else { 0 } {
            let v = radical_inverse_base2(idx);
            idx += 1;
            if include_endpoints && v == 0.0 {
                continue;
            }
            points.push(x_left + v * (x_right - x_left));
        }
        points.sort_by(f64::total_cmp);
        Ok(Self {
            points,
            family: PointFamily::Halton,
            includes_endpoints: include_endpoints,
            domain: (x_left, x_right),
        })
    }

    /// Uniform draws from [`SplitMix64`] keyed by `seed`, sorted. Duplicates
    /// (and draws equal to a forced endpoint) are redrawn.
    pub fn random(
        n: usize,
        x_left: f64,
        x_right: f64,
        seed: u64,
        include_endpoints: bool,
    ) -> Result<Self, PointSetError> {
        if n < 2 {
            return Err(PointSetError::TooFew { min: 2, got: n });
        }
        check_interval(x_left, x_right)?;
        let mut rng = SplitMix64::new(seed);
        let mut points: Vec<f64> = Vec::with_capacity(n);
        if include_endpoints {
            points.push(x_left);
            points.push(x_right);
        }
        while points.len() < n {
            let x = rng.uniform(x_left, x_right);
            if points.iter().any(|&p| p == x) {
                continue;
            }
            points.push(x);
        }
        points.sort_by(f64::total_cmp);
        Ok(Self {
            points,
            family: PointFamily::Random,
            includes_endpoints: include_endpoints,
            domain: (x_left, x_right),
        })
    }

    /// Caller-supplied points; must already be strictly increasing.
    pub fn explicit(points: Vec<f64>, x_left: f64, x_right: f64) -> Result<Self, PointSetError> {
        if points.is_empty() {
            return Err(PointSetError::TooFew { min: 1, got: 0 });
        }
        check_interval(x_left, x_right)?;
        for (i, w) in points.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(PointSetError::NotIncreasing(i + 1));
            }
        }
        if let Some(&p) = points.iter().find(|&&p| p < x_left || p > x_right || !p.is_finite()) {
            return Err(PointSetError::OutOfRange(p, x_left, x_right));
        }
        let includes_endpoints = points[0] == x_left && points[points.len() - 1] == x_right;
        Ok(Self {
            points,
            family: PointFamily::Explicit,
            includes_endpoints,
            domain: (x_left, x_right),
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn family(&self) -> PointFamily {
        self.family
    }

    pub fn includes_endpoints(&self) -> bool {
        self.includes_endpoints
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Largest gap between neighbouring points.
    pub fn h(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn min_gap(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Relabel the generating family (used when restoring stored grids).
    pub fn with_family(mut self, family: PointFamily) -> Self {
        self.family = family;
        self
    }

    /// Same relative layout shifted by `dx`.
    pub fn translated(&self, dx: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p + dx).collect(),
            family: self.family,
            includes_endpoints: self.includes_endpoints,
            domain: (self.domain.0 + dx, self.domain.1 + dx),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equidistant_examples() {
        let p = PointSet::equidistant(4, 0.0, 1.0).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, b) in p.points().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(PointSet::equidistant(2, 0.0, 1.0).unwrap().points(), &[0.0, 1.0]);
        let p8 = PointSet::equidistant(8, 0.0, 1.0).unwrap();
        for (i, x) in p8.points().iter().enumerate() {
            assert!((x - i as f64 / 7.0).abs() < 1e-15);
        }
        assert_eq!(
            PointSet::equidistant(1, 0.0, 1.0),
            Err(PointSetError::TooFew { min: 2, got: 1 })
        );
    }

    #[test]
    fn equidistant_gap() {
        let p = PointSet::equidistant(11, -1.0, 1.0).unwrap();
        assert!((p.h() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn van_der_corput_prefix() {
        let v: Vec<f64> = (1..=3).map(radical_inverse_base2).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75]);
    }

    #[test]
    fn halton_with_endpoints() {
        let p = PointSet::halton(3, 0.0, 1.0, true).unwrap();
        assert_eq!(p.points(), &[0.0, 0.5, 1.0]);
        let p = PointSet::halton(4, 0.0, 1.0, false).unwrap();
        assert_eq!(p.points(), &[0.125, 0.25, 0.5, 0.75]);
        let p = PointSet::halton_from(3, 0, 0.0, 1.0, false).unwrap();
        assert_eq!(p.points(), &[0.0, 0.25, 0.5]);
    }

    #[test]
    fn random_is_deterministic() {
        let a = PointSet::random(12, -1.0, 2.0, 42, true).unwrap();
        let b = PointSet::random(12, -1.0, 2.0, 42, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(PointSet::random(2, 0.0, 1.0, 9, true).unwrap().points(), &[0.0, 1.0]);
        assert!(a.points().iter().all(|&x| (-1.0..=2.0).contains(&x)));
        assert_eq!(a.points()[0], -1.0);
        assert_eq!(a.points()[11], 2.0);
    }

    #[test]
    fn explicit_validation() {
        assert!(PointSet::explicit(vec![0.0, 0.5, 1.0], 0.0, 1.0).unwrap().includes_endpoints());
        assert_eq!(
            PointSet::explicit(vec![0.0, 0.5, 0.5], 0.0, 1.0),
            Err(PointSetError::NotIncreasing(2))
        );
        assert!(matches!(
            PointSet::explicit(vec![0.0, 1.5], 0.0, 1.0),
            Err(PointSetError::OutOfRange(..))
        ));
    }

    proptest! {
        #[test]
        fn generated_sets_are_sorted_and_in_range(n in 2usize..60, seed in any::<u64>(), ends in any::<bool>()) {
            for p in [
                PointSet::halton(n, -0.5, 2.0, ends).unwrap(),
                PointSet::random(n, -0.5, 2.0, seed, ends).unwrap(),
                PointSet::equidistant(n, -0.5, 2.0).unwrap(),
            ] {
                prop_assert_eq!(p.len(), n);
                prop_assert!(p.points().windows(2).all(|w| w[0] < w[1]));
                prop_assert!(p.points().iter().all(|&x| (-0.5..=2.0).contains(&x)));
                if p.includes_endpoints() {
                    prop_assert_eq!(p.points()[0], -0.5);
                    prop_assert_eq!(p.points()[n - 1], 2.0);
                }
            }
        }
    }
}
