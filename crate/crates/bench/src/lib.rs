//! Fixtures shared by the benchmarks.

use clipcube::volume::{expand_terms, Component};
use clipcube::{ClippedCubeProblem, MomentFamily, SeparableConstraint};
use rug::Rational;

/// `n`-dimensional ball centered at `(−1.5, ½, …, ½)` with radius 2.2.
pub fn shifted_ball(n: usize) -> ClippedCubeProblem {
    let mut center = vec![Rational::from((1, 2)); n];
    center[0] = Rational::from((-3, 2));
    let c = SeparableConstraint::from_ball(&center, &Rational::from((11, 5))).unwrap();
    ClippedCubeProblem::new(n, vec![c]).unwrap()
}

/// The first single-exponential moment family of a problem.
pub fn first_family(problem: &ClippedCubeProblem) -> MomentFamily {
    let terms = expand_terms(&problem.normalized()).unwrap();
    let first = terms.component(Component::I2).next().unwrap();
    first.family.clone()
}
