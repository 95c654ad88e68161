//! Separable polynomial constraints `Σ a_i(x_i) ≤ b` and the clipped cube.

use rug::Rational;

use crate::error::{Error, Result};
use crate::polynomial::UnivariatePolynomial;

/// Where a constraint came from. Normalization keeps the tag, since the set
/// itself is unchanged.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Ball {
        center: Vec<Rational>,
        radius: Rational,
    },
    HalfSpace {
        normal: Vec<Rational>,
        offset: Rational,
    },
    Generic,
}

/// The set `{x : Σ a_i(x_i) ≤ b}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeparableConstraint {
    per_coordinate: Vec<UnivariatePolynomial>,
    offset: Rational,
    kind: ConstraintKind,
}

impl SeparableConstraint {
    /// `‖x − C‖² ≤ r²`, stored as `a_i(x) = x² − 2C_i x + C_i²`, `b = r²`.
    pub fn from_ball(center: &[Rational], radius: &Rational) -> Result<Self> {
        if *radius <= 0 {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if center.is_empty() {
            return Err(Error::InvalidInput("ball center is empty".into()));
        }
        let per_coordinate = center
            .iter()
            .map(|c| {
                let lin = Rational::from(c * -2);
                let sq = Rational::from(c.square_ref());
                UnivariatePolynomial::new(vec![sq, lin, Rational::from(1)])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            per_coordinate,
            offset: Rational::from(radius.square_ref()),
            kind: ConstraintKind::Ball {
                center: center.to_vec(),
                radius: radius.clone(),
            },
        })
    }

    /// `wᵀx ≤ b`.
    pub fn from_halfspace(normal: &[Rational], offset: &Rational) -> Result<Self> {
        if normal.is_empty() {
            return Err(Error::InvalidInput("half-space normal is empty".into()));
        }
        if normal.iter().all(|w| *w == 0) {
            return Err(Error::InvalidInput("half-space normal is zero".into()));
        }
        let per_coordinate = normal
            .iter()
            .map(|w| UnivariatePolynomial::new(vec![Rational::new(), w.clone()]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            per_coordinate,
            offset: offset.clone(),
            kind: ConstraintKind::HalfSpace {
                normal: normal.to_vec(),
                offset: offset.clone(),
            },
        })
    }

    pub fn generic(per_coordinate: Vec<UnivariatePolynomial>, offset: Rational) -> Result<Self> {
        if per_coordinate.is_empty() {
            return Err(Error::InvalidInput(
                "constraint needs at least one coordinate".into(),
            ));
        }
        Ok(Self {
            per_coordinate,
            offset,
            kind: ConstraintKind::Generic,
        })
    }

    pub fn dimension(&self) -> usize {
        self.per_coordinate.len()
    }

    pub fn per_coordinate(&self) -> &[UnivariatePolynomial] {
        &self.per_coordinate
    }

    pub fn offset(&self) -> &Rational {
        &self.offset
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn is_normalized(&self) -> bool {
        self.offset == 0
    }

    /// Moves the offset into the polynomials, `a_i ← a_i − b/n`, so that
    /// `b = 0`. The residual is unchanged as a function.
    pub fn normalize(&self) -> Self {
        if self.is_normalized() {
            return self.clone();
        }
        let share = UnivariatePolynomial::constant(Rational::from(
            &self.offset / self.dimension() as u64,
        ));
        Self {
            per_coordinate: self.per_coordinate.iter().map(|a| a.sub(&share)).collect(),
            offset: Rational::new(),
            kind: self.kind.clone(),
        }
    }

    /// `ρ(x) = b − Σ a_i(x_i)`, positive strictly inside the set.
    pub fn residual(&self, x: &[Rational]) -> Result<Rational> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        let mut rho = self.offset.clone();
        for (a, xi) in self.per_coordinate.iter().zip(x) {
            rho -= a.evaluate(xi);
        }
        Ok(rho)
    }

    /// Certified `(lower, upper)` with `lower ≤ ρ(x) ≤ upper` on the cube.
    pub fn residual_range(&self) -> (Rational, Rational) {
        let mut lo = self.offset.clone();
        let mut hi = self.offset.clone();
        for a in &self.per_coordinate {
            let (alo, ahi) = a.range_enclosure_unit();
            lo -= ahi;
            hi -= alo;
        }
        (lo, hi)
    }

    /// `max(|lower|, |upper|)` of [`residual_range`](Self::residual_range).
    pub fn residual_sup(&self) -> Rational {
        let (lo, hi) = self.residual_range();
        lo.abs().max(hi.abs())
    }
}

/// Squared Euclidean distance from `center` to the unit cube, exact.
pub fn min_cube_distance_squared(center: &[Rational]) -> Rational {
    let mut total = Rational::new();
    for c in center {
        let gap = if *c < 0 {
            Rational::from(-c)
        } else if *c > 1 {
            Rational::from(c - 1u32)
        } else {
            continue;
        };
        total += gap.square();
    }
    total
}

/// Euclidean distance from `center` to the unit cube.
pub fn min_cube_distance(center: &[Rational]) -> f64 {
    min_cube_distance_squared(center).to_f64().sqrt()
}

/// The unit cube intersected with up to two separable constraints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClippedCubeProblem {
    dimension: usize,
    constraints: Vec<SeparableConstraint>,
}

impl ClippedCubeProblem {
    /// Zero constraints describe the bare cube, which the Monte Carlo oracle
    /// and the solver need. The smoothed volume needs at least one.
    pub fn new(dimension: usize, constraints: Vec<SeparableConstraint>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if constraints.len() > 2 {
            return Err(Error::InvalidInput(format!(
                "at most two constraints are supported, got {}",
                constraints.len()
            )));
        }
        for c in &constraints {
            if c.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: c.dimension(),
                });
            }
        }
        Ok(Self {
            dimension,
            constraints,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn constraints(&self) -> &[SeparableConstraint] {
        &self.constraints
    }

    /// Same problem with every constraint normalized.
    pub fn normalized(&self) -> Self {
        Self {
            dimension: self.dimension,
            constraints: self.constraints.iter().map(|c| c.normalize()).collect(),
        }
    }

    /// A copy with one more constraint appended.
    pub fn with_constraint(&self, extra: SeparableConstraint) -> Result<Self> {
        let mut constraints = self.constraints.clone();
        constraints.push(extra);
        Self::new(self.dimension, constraints)
    }

    /// Whether `x` satisfies every constraint (boundary included).
    pub fn contains(&self, x: &[Rational]) -> Result<bool> {
        for c in &self.constraints {
            if c.residual(x)? < 0 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn v(xs: &[(i64, i64)]) -> Vec<Rational> {
        xs.iter().map(|&(n, d)| q(n, d)).collect()
    }

    #[test]
    fn ball_expansion() {
        let c = SeparableConstraint::from_ball(&v(&[(0, 1), (0, 1)]), &q(1, 1)).unwrap();
        assert_eq!(c.per_coordinate()[0], UnivariatePolynomial::from_i64(&[0, 0, 1]));
        assert_eq!(*c.offset(), q(1, 1));

        let c = SeparableConstraint::from_ball(
            &v(&[(-3, 2), (1, 2), (1, 2), (1, 2)]),
            &q(11, 5),
        )
        .unwrap();
        assert_eq!(*c.offset(), q(121, 25));
        let a1 = UnivariatePolynomial::new(v(&[(9, 4), (3, 1), (1, 1)])).unwrap();
        let a2 = UnivariatePolynomial::new(v(&[(1, 4), (-1, 1), (1, 1)])).unwrap();
        assert_eq!(c.per_coordinate()[0], a1);
        for a in &c.per_coordinate()[1..] {
            assert_eq!(*a, a2);
        }
    }

    #[test]
    fn large_ball_covers_cube() {
        let c = SeparableConstraint::from_ball(&v(&[(1, 2), (1, 2), (1, 2)]), &q(10, 1)).unwrap();
        let (lo, _) = c.residual_range();
        assert!(lo > 0);
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(SeparableConstraint::from_ball(&v(&[(0, 1)]), &q(0, 1)).is_err());
        assert!(SeparableConstraint::from_ball(&v(&[(0, 1)]), &q(-1, 1)).is_err());
        assert!(SeparableConstraint::from_halfspace(&v(&[(0, 1), (0, 1)]), &q(1, 1)).is_err());
        let c = SeparableConstraint::from_halfspace(&v(&[(1, 1), (1, 1)]), &q(1, 1)).unwrap();
        assert!(matches!(
            c.residual(&v(&[(0, 1)])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn normalize_examples() {
        let c = SeparableConstraint::from_ball(&v(&[(0, 1), (0, 1)]), &q(1, 1)).unwrap();
        let n = c.normalize();
        assert_eq!(*n.offset(), q(0, 1));
        assert_eq!(
            n.per_coordinate()[0],
            UnivariatePolynomial::new(v(&[(-1, 2), (0, 1), (1, 1)])).unwrap()
        );
        assert_eq!(n.normalize(), n);

        let s = SeparableConstraint::from_halfspace(&v(&[(1, 1), (1, 1)]), &q(1, 1)).unwrap();
        let n = s.normalize();
        assert_eq!(
            n.per_coordinate()[1],
            UnivariatePolynomial::new(v(&[(-1, 2), (1, 1)])).unwrap()
        );
    }

    #[test]
    fn residual_examples() {
        let c = SeparableConstraint::from_ball(&v(&[(0, 1), (0, 1)]), &q(1, 1)).unwrap();
        assert_eq!(c.residual(&v(&[(0, 1), (0, 1)])).unwrap(), q(1, 1));
        assert_eq!(c.residual(&v(&[(3, 5), (4, 5)])).unwrap(), q(0, 1));
        let s = SeparableConstraint::from_halfspace(&v(&[(1, 1), (1, 1)]), &q(1, 1)).unwrap();
        assert_eq!(s.residual(&v(&[(1, 1), (1, 1)])).unwrap(), q(-1, 1));
    }

    #[test]
    fn residual_range_examples() {
        let s = SeparableConstraint::from_halfspace(&v(&[(1, 1), (1, 1)]), &q(1, 1))
            .unwrap()
            .normalize();
        let (lo, hi) = s.residual_range();
        assert!(lo >= q(-3, 1) && lo <= q(-1, 1));
        assert!(hi <= q(3, 1) && hi >= q(1, 1));

        let z = SeparableConstraint::generic(vec![UnivariatePolynomial::zero()], q(0, 1)).unwrap();
        assert_eq!(z.residual_range(), (q(0, 1), q(0, 1)));

        let b = SeparableConstraint::from_ball(&v(&[(-3, 2)]), &q(2, 1)).unwrap();
        let (lo, hi) = b.residual_range();
        assert!(lo <= q(-9, 4) && hi >= q(7, 4));
    }

    #[test]
    fn distance_examples() {
        let d = min_cube_distance(&v(&[(-3, 2), (1, 2), (1, 2), (1, 2)]));
        assert!((d - 1.5).abs() < 1e-15);
        assert_eq!(min_cube_distance(&v(&[(1, 3), (1, 1)])), 0.0);
        let d = min_cube_distance(&v(&[(-1, 1), (-1, 1)]));
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn problem_checks() {
        let b = SeparableConstraint::from_ball(&v(&[(0, 1), (0, 1)]), &q(1, 1)).unwrap();
        assert!(ClippedCubeProblem::new(2, vec![b.clone(), b.clone()]).is_ok());
        assert!(ClippedCubeProblem::new(2, vec![b.clone(), b.clone(), b.clone()]).is_err());
        assert!(ClippedCubeProblem::new(3, vec![b]).is_err());
        assert!(ClippedCubeProblem::new(0, vec![]).is_err());
    }

    fn rational_in(lo: i64, hi: i64) -> impl Strategy<Value = Rational> {
        (lo * 64..=hi * 64).prop_map(|k| q(k, 64))
    }

    fn cube_point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
        prop::collection::vec((0i64..=997).prop_map(|k| q(k, 997)), n)
    }

    proptest! {
        #[test]
        fn normalize_preserves_residual(
            center in prop::collection::vec(rational_in(-2, 3), 3),
            r in (1i64..40).prop_map(|k| q(k, 8)),
            x in cube_point(3),
        ) {
            let c = SeparableConstraint::from_ball(&center, &r).unwrap();
            prop_assert_eq!(c.normalize().residual(&x).unwrap(), c.residual(&x).unwrap());
        }

        #[test]
        fn ball_residual_is_radius_minus_distance(
            center in prop::collection::vec(rational_in(-2, 3), 4),
            r in (1i64..40).prop_map(|k| q(k, 8)),
            x in prop::collection::vec(rational_in(-3, 3), 4),
        ) {
            let c = SeparableConstraint::from_ball(&center, &r).unwrap();
            let mut dist = Rational::new();
            for (xi, ci) in x.iter().zip(&center) {
                dist += Rational::from(xi - ci).square();
            }
            prop_assert_eq!(c.residual(&x).unwrap(), r.square() - dist);
        }

        #[test]
        fn residual_range_holds(
            normal in prop::collection::vec(rational_in(-3, 3), 3),
            center in prop::collection::vec(rational_in(-2, 3), 3),
            x in cube_point(3),
        ) {
            let ball = SeparableConstraint::from_ball(&center, &q(3, 2)).unwrap();
            for c in [ball.clone(), ball.normalize()] {
                let (lo, hi) = c.residual_range();
                let rho = c.residual(&x).unwrap();
                prop_assert!(lo <= rho && rho <= hi);
            }
            if normal.iter().any(|w| *w != 0) {
                let s = SeparableConstraint::from_halfspace(&normal, &q(1, 2)).unwrap();
                let (lo, hi) = s.residual_range();
                let rho = s.residual(&x).unwrap();
                prop_assert!(lo <= rho && rho <= hi);
            }
        }

        #[test]
        fn distance_zero_iff_inside(center in prop::collection::vec(rational_in(-2, 3), 3)) {
            let inside = center.iter().all(|c| *c >= 0 && *c <= 1);
            prop_assert_eq!(min_cube_distance_squared(&center) == 0, inside);
        }
    }
}
