//! Radial kernels, their derivatives along a coordinate, and their
//! conditional-positive-definiteness orders.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dd::Dd;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel evaluated at negative radius {0}")]
    NegativeRadius(f64),
    #[error("shape parameter must be positive, got {0}")]
    BadShape(f64),
    #[error("polyharmonic exponent must be at least 1, got {0}")]
    BadExponent(u32),
}

/// A radial kernel `phi(r)`.
///
/// Serialized as a tagged record, e.g. `{"family":"phs_odd","k":2}` for the
/// cubic spline `r^3` or `{"family":"gaussian","epsilon":1.0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-(eps r)^2)`
    Gaussian { epsilon: f64 },
    /// `sqrt(1 + (eps r)^2)`
    Multiquadric { epsilon: f64 },
    /// `r^(2k-1)`
    PhsOdd { k: u32 },
    /// `r^(2k) log r`
    PhsEven { k: u32 },
}

impl Kernel {
    pub fn gaussian(epsilon: f64) -> Result<Self, KernelError> {
        Kernel::Gaussian { epsilon }.validated()
    }

    pub fn multiquadric(epsilon: f64) -> Result<Self, KernelError> {
        Kernel::Multiquadric { epsilon }.validated()
    }

    pub fn phs_odd(k: u32) -> Result<Self, KernelError> {
        Kernel::PhsOdd { k }.validated()
    }

    pub fn phs_even(k: u32) -> Result<Self, KernelError> {
        Kernel::PhsEven { k }.validated()
    }

    /// The cubic polyharmonic spline `r^3`.
    pub const fn cubic() -> Self {
        Kernel::PhsOdd { k: 2 }
    }

    pub fn validated(self) -> Result<Self, KernelError> {
        match self {
            Kernel::Gaussian { epsilon } | Kernel::Multiquadric { epsilon } => {
                if epsilon > 0.0 && epsilon.is_finite() {
                    Ok(self)
                } else {
                    Err(KernelError::BadShape(epsilon))
                }
            }
            Kernel::PhsOdd { k } | Kernel::PhsEven { k } => {
                if k >= 1 {
                    Ok(self)
                } else {
                    Err(KernelError::BadExponent(k))
                }
            }
        }
    }

    /// Order of conditional positive definiteness.
    pub fn cpd_order(&self) -> usize {
        match *self {
            Kernel::Gaussian { .. } => 0,
            Kernel::Multiquadric { .. } => 1,
            Kernel::PhsOdd { k } => k as usize,
            Kernel::PhsEven { k } => k as usize + 1,
        }
    }

    /// `phi(r)` for `r >= 0`.
    pub fn eval(&self, r: f64) -> Result<f64, KernelError> {
        if r < 0.0 {
            return Err(KernelError::NegativeRadius(r));
        }
        Ok(self.phi(r))
    }

    pub(crate) fn phi(&self, r: f64) -> f64 {
        match *self {
            Kernel::Gaussian { epsilon } => (-(epsilon * r).powi(2)).exp(),
            Kernel::Multiquadric { epsilon } => (1.0 + (epsilon * r).powi(2)).sqrt(),
            Kernel::PhsOdd { k } => r.powi(2 * k as i32 - 1),
            Kernel::PhsEven { k } => {
                if r == 0.0 {
                    0.0
                } else {
                    r.powi(2 * k as i32) * r.ln()
                }
            }
        }
    }

    /// `d/dx phi(|x - center|)`. At `x == center` this is the two-sided limit
    /// (zero for every supported family).
    pub fn eval_dx(&self, x: f64, center: f64) -> f64 {
        let d = x - center;
        match *self {
            Kernel::Gaussian { epsilon } => {
                let e2 = epsilon * epsilon;
                -2.0 * e2 * d * (-e2 * d * d).exp()
            }
            Kernel::Multiquadric { epsilon } => {
                let e2 = epsilon * epsilon;
                e2 * d / (1.0 + e2 * d * d).sqrt()
            }
            Kernel::PhsOdd { k } => {
                if d == 0.0 {
                    0.0
                } else if k == 1 {
                    d.signum()
                } else {
                    (2 * k - 1) as f64 * d * d.abs().powi(2 * k as i32 - 3)
                }
            }
            Kernel::PhsEven { k } => {
                if d == 0.0 {
                    0.0
                } else {
                    let r = d.abs();
                    d * r.powi(2 * k as i32 - 2) * (2.0 * k as f64 * r.ln() + 1.0)
                }
            }
        }
    }

    pub(crate) fn phi_dd(&self, r: Dd) -> Dd {
        match *self {
            Kernel::Gaussian { epsilon } => {
                let er = Dd::from_f64(epsilon) * r;
                (-(er * er)).exp()
            }
            Kernel::Multiquadric { epsilon } => {
                let er = Dd::from_f64(epsilon) * r;
                (Dd::ONE + er * er).sqrt()
            }
            Kernel::PhsOdd { k } => r.powi(2 * k - 1),
            Kernel::PhsEven { k } => {
                if r.hi == 0.0 {
                    Dd::ZERO
                } else {
                    r.powi(2 * k) * r.ln()
                }
            }
        }
    }

    /// Double-double version of [`Kernel::eval_dx`], with `d = x - center`.
    pub(crate) fn dx_dd(&self, d: Dd) -> Dd {
        match *self {
            Kernel::Gaussian { epsilon } => {
                let e2 = Dd::from_f64(epsilon) * Dd::from_f64(epsilon);
                -(e2.ldexp(1) * d * (-(e2 * d * d)).exp())
            }
            Kernel::Multiquadric { epsilon } => {
                let e2 = Dd::from_f64(epsilon) * Dd::from_f64(epsilon);
                e2 * d / (Dd::ONE + e2 * d * d).sqrt()
            }
            Kernel::PhsOdd { k } => {
                if d.hi == 0.0 {
                    Dd::ZERO
                } else if k == 1 {
                    Dd::from_f64(d.hi.signum())
                } else {
                    Dd::from_f64((2 * k - 1) as f64) * d * d.abs().powi(2 * k - 3)
                }
            }
            Kernel::PhsEven { k } => {
                if d.hi == 0.0 {
                    Dd::ZERO
                } else {
                    let r = d.abs();
                    d * r.powi(2 * k - 2) * (Dd::from_f64(2.0 * k as f64) * r.ln() + Dd::ONE)
                }
            }
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Gaussian { epsilon } => write!(f, "gaussian(eps={epsilon})"),
            Kernel::Multiquadric { epsilon } => write!(f, "multiquadric(eps={epsilon})"),
            Kernel::PhsOdd { k } => write!(f, "phs r^{}", 2 * k - 1),
            Kernel::PhsEven { k } => write!(f, "phs r^{} log r", 2 * k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_kernels() -> Vec<Kernel> {
        vec![
            Kernel::Gaussian { epsilon: 1.0 },
            Kernel::Gaussian { epsilon: 2.5 },
            Kernel::Multiquadric { epsilon: 1.0 },
            Kernel::Multiquadric { epsilon: 0.3 },
            Kernel::PhsOdd { k: 1 },
            Kernel::PhsOdd { k: 2 },
            Kernel::PhsOdd { k: 3 },
            Kernel::PhsEven { k: 1 },
            Kernel::PhsEven { k: 2 },
        ]
    }

    #[test]
    fn table_values() {
        assert_eq!(Kernel::gaussian(1.0).unwrap().eval(0.0).unwrap(), 1.0);
        assert_eq!(Kernel::cubic().eval(2.0).unwrap(), 8.0);
        assert_eq!(Kernel::phs_even(1).unwrap().eval(1.0).unwrap(), 0.0);
        assert_eq!(Kernel::multiquadric(1.0).unwrap().eval(0.0).unwrap(), 1.0);
        assert_eq!(Kernel::phs_even(1).unwrap().eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn orders() {
        assert_eq!(Kernel::Gaussian { epsilon: 1.0 }.cpd_order(), 0);
        assert_eq!(Kernel::Multiquadric { epsilon: 1.0 }.cpd_order(), 1);
        assert_eq!(Kernel::PhsOdd { k: 2 }.cpd_order(), 2);
        assert_eq!(Kernel::PhsEven { k: 1 }.cpd_order(), 2);
    }

    #[test]
    fn derivative_values() {
        assert_eq!(Kernel::cubic().eval_dx(1.0, 0.0), 3.0);
        assert_eq!(Kernel::cubic().eval_dx(0.3, 0.3), 0.0);
        assert_eq!(Kernel::Gaussian { epsilon: 1.0 }.eval_dx(0.0, 0.0), 0.0);
        for k in all_kernels() {
            assert_eq!(k.eval_dx(0.7, 0.7), 0.0, "{k}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(Kernel::cubic().eval(-1.0), Err(KernelError::NegativeRadius(-1.0)));
        assert!(Kernel::gaussian(0.0).is_err());
        assert!(Kernel::multiquadric(-2.0).is_err());
        assert!(Kernel::phs_odd(0).is_err());
    }

    #[test]
    fn serde_tagged_record() {
        let k: Kernel = serde_json::from_str(r#"{"family":"phs_odd","k":2}"#).unwrap();
        assert_eq!(k, Kernel::cubic());
        let g: Kernel = serde_json::from_str(r#"{"family":"gaussian","epsilon":1.0}"#).unwrap();
        assert_eq!(g, Kernel::Gaussian { epsilon: 1.0 });
        assert_eq!(
            serde_json::to_string(&Kernel::PhsEven { k: 1 }).unwrap(),
            r#"{"family":"phs_even","k":1}"#
        );
    }

    #[test]
    fn dd_paths_agree_with_f64() {
        for k in all_kernels() {
            for &(x, c) in &[(0.3, 0.0), (-0.7, 0.2), (1.9, 0.4)] {
                let r = (x - c) as f64;
                let phi = k.phi_dd(Dd::from_f64(r.abs())).to_f64();
                assert!((phi - k.phi(r.abs())).abs() <= 1e-14 * (1.0 + phi.abs()), "{k}");
                let dx = k.dx_dd(Dd::from_f64(r)).to_f64();
                assert!((dx - k.eval_dx(x, c)).abs() <= 1e-14 * (1.0 + dx.abs()), "{k}");
            }
        }
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(x in -2.0f64..2.0, c in -1.0f64..1.0) {
            prop_assume!((x - c).abs() > 1e-2);
            for k in all_kernels() {
                let h = 1e-6;
                let fd = (k.phi((x + h - c).abs()) - k.phi((x - h - c).abs())) / (2.0 * h);
                let an = k.eval_dx(x, c);
                prop_assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{} at x={} c={}: {} vs {}", k, x, c, fd, an);
            }
        }

        #[test]
        fn even_about_center(d in 0.0f64..3.0, c in -1.0f64..1.0) {
            for k in all_kernels() {
                let left = k.eval((c - d - c).abs()).unwrap();
                let right = k.eval((c + d - c).abs()).unwrap();
                prop_assert!((left - right).abs() <= 1e-12 * (1.0 + left.abs()), "{}: {} vs {}", k, left, right);
            }
        }
    }
}
