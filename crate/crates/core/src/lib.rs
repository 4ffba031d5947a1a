//! Radial-basis-function summation-by-parts (RBFSBP) operators and the
//! SAT-based semi-discretizations built on them.

pub mod dd;
pub mod golden;
pub mod kernels;
pub mod linalg;
pub mod pointsets;
pub mod problems;
pub mod quadrature;
pub mod rbf_space;
pub mod rng;
pub mod sbp;
pub mod solver;
pub mod timestepping;

pub use kernels::Kernel;
pub use pointsets::{PointFamily, PointSet};
pub use rbf_space::{CardinalMatrices, Coefficients, RbfSpace};
pub use quadrature::{GridFamily, PairSet, QuadratureRule, RuleOptions};
pub use sbp::{OperatorKind, SbpOperator, VerifyReport};
pub use solver::{BlockGrid, DiffusionBc, EnergyTrace, SolveConfig, Topology};
pub use timestepping::TimeLoop;
