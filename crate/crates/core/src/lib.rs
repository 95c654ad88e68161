//! Deterministic volume approximation for clipped unit hypercubes.

pub mod constraint;
pub mod error;
pub mod heaviside;
pub mod integrand;
pub mod moments;
pub mod numeric;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod polynomial;
pub mod volume;

pub use constraint::{ClippedCubeProblem, ConstraintKind, SeparableConstraint};
pub use error::{Error, Result};
pub use heaviside::Sharpness;
pub use moments::{BlockMomentTable, MomentCache, MomentFamily};
pub use polynomial::UnivariatePolynomial;
pub use volume::{t_of_k, ApproximationParams, VolumeReport};
pub use oracle::{mc_volume, McEstimate};
pub use solver::{max_distance, BisectionTrace, McOracle, TkOracle, VolumeOracle};
