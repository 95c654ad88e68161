//! `max_{x ∈ 𝓤∩𝓗} ‖x − C₀‖` by bisection on the radius of a ball around
//! `C₀`, with a volume oracle deciding whether the ball covers the region.

use std::fmt::Write as _;

use rug::Rational;

use crate::constraint::{ClippedCubeProblem, SeparableConstraint};
use crate::error::{Error, Result};
use crate::oracle::mc_volume_pair;
use crate::volume::{ball_error_bound, t_of_k_cached, ApproximationParams};
use crate::moments::MomentCache;

/// A volume value with a bound on its error.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub error: f64,
    /// False when part of the error is not covered by a proven bound.
    pub certified: bool,
}

/// `vol(base)` against `vol(base ∩ ball)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub base: VolumeEstimate,
    pub clipped: VolumeEstimate,
    /// `base − clipped`.
    pub gap: f64,
    /// How large `gap` may be while the ball still covers the region.
    pub margin: f64,
}

pub trait VolumeOracle {
    fn name(&self) -> &'static str;

    fn estimate(&self, problem: &ClippedCubeProblem) -> Result<VolumeEstimate>;

    /// Compares `problem` with `problem ∩ extra`. The default estimates the
    /// two volumes separately and adds their errors.
    fn compare(&self, problem: &ClippedCubeProblem, extra: &SeparableConstraint) -> Result<Comparison> {
        let base = self.estimate(problem)?;
        let clipped = self.estimate(&problem.with_constraint(extra.clone())?)?;
        Ok(Comparison {
            gap: base.value - clipped.value,
            margin: base.error + clipped.error,
            base,
            clipped,
        })
    }
}

/// Uniform Monte Carlo with common random numbers in comparisons.
#[derive(Clone, Debug)]
pub struct McOracle {
    pub samples: u64,
    pub seed: u64,
}

impl McOracle {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed }
    }

    fn four_sigma(&self, p: f64) -> f64 {
        4.0 * (p * (1.0 - p) / self.samples as f64).sqrt()
    }
}

impl VolumeOracle for McOracle {
    fn name(&self) -> &'static str {
        "mc"
    }

    fn estimate(&self, problem: &ClippedCubeProblem) -> Result<VolumeEstimate> {
        let e = crate::oracle::mc_volume(problem, self.samples, self.seed)?;
        Ok(VolumeEstimate {
            value: e.mean,
            error: 4.0 * e.std_error,
            certified: false,
        })
    }

    fn compare(&self, problem: &ClippedCubeProblem, extra: &SeparableConstraint) -> Result<Comparison> {
        let (base, clipped) = mc_volume_pair(problem, extra, self.samples, self.seed)?;
        // The samples in the region but outside the ball are a binomial count
        // of their own.
        let d = (base.hits - clipped.hits) as f64 / self.samples as f64;
        Ok(Comparison {
            base: VolumeEstimate {
                value: base.mean,
                error: 4.0 * base.std_error,
                certified: false,
            },
            clipped: VolumeEstimate {
                value: clipped.mean,
                error: 4.0 * clipped.std_error,
                certified: false,
            },
            gap: d,
            margin: self.four_sigma(d),
        })
    }
}

/// The smoothed-volume engine. The error is the numerical certificate plus
/// the smoothing bound when it applies.
pub struct TkOracle {
    pub params: ApproximationParams,
    cache: MomentCache,
}

impl TkOracle {
    pub fn new(params: ApproximationParams) -> Self {
        Self {
            params,
            cache: MomentCache::new(),
        }
    }
}

impl VolumeOracle for TkOracle {
    fn name(&self) -> &'static str {
        "tk"
    }

    fn estimate(&self, problem: &ClippedCubeProblem) -> Result<VolumeEstimate> {
        if problem.constraints().is_empty() {
            return Ok(VolumeEstimate {
                value: 1.0,
                error: 0.0,
                certified: true,
            });
        }
        let r = t_of_k_cached(problem, &self.params, &self.cache)?;
        let (smoothing, certified) = match ball_error_bound(problem, self.params.k) {
            Ok(b) => (b, true),
            Err(_) => (0.0, false),
        };
        Ok(VolumeEstimate {
            value: r.t_of_k,
            error: r.numerical_error + smoothing,
            certified,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    /// The ball misses part of the region; the radius is a lower bound.
    Grow,
    /// The ball covers the region up to the margin.
    Shrink,
}

impl Decision {
    pub fn label(self) -> &'static str {
        match self {
            Decision::Grow => "grow",
            Decision::Shrink => "shrink",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectionStep {
    pub radius: f64,
    pub lo: f64,
    pub hi: f64,
    pub base: f64,
    pub clipped: f64,
    pub gap: f64,
    pub margin: f64,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectionTrace {
    pub oracle: String,
    pub steps: Vec<BisectionStep>,
    pub radius: f64,
    pub tolerance: f64,
    pub initial_hi: f64,
    /// Largest region volume a shrink decision may have ignored.
    pub volume_slack: f64,
    /// Whether every oracle answer carried a proven bound.
    pub certified: bool,
}

impl BisectionTrace {
    /// `⌈log₂(R_hi/tol)⌉`.
    pub fn iteration_limit(&self) -> usize {
        (self.initial_hi / self.tolerance).log2().ceil().max(0.0) as usize
    }

    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "radius = {}", self.radius);
        let _ = writeln!(out, "tolerance = {}", self.tolerance);
        let _ = writeln!(out, "oracle = {}", self.oracle);
        let _ = writeln!(out, "initial_hi = {}", self.initial_hi);
        let _ = writeln!(out, "iterations = {}", self.steps.len());
        let _ = writeln!(out, "volume_slack = {}", self.volume_slack);
        let _ = writeln!(out, "certified = {}", self.certified);
        let _ = writeln!(out, "iter,R,lo,hi,base,clipped,gap,margin,decision");
        for (i, s) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                i + 1,
                s.radius,
                s.lo,
                s.hi,
                s.base,
                s.clipped,
                s.gap,
                s.margin,
                s.decision.label()
            );
        }
        out
    }
}

/// Bisects `[0, ‖C₀ − ½·1‖ + √n/2]` until the bracket is narrower than
/// `tol` and returns its upper end.
pub fn max_distance(
    problem: &ClippedCubeProblem,
    center: &[Rational],
    tol: f64,
    oracle: &dyn VolumeOracle,
) -> Result<(f64, BisectionTrace)> {
    let n = problem.dimension();
    if center.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: center.len(),
        });
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if problem.constraints().len() > 1 {
        return Err(Error::Precondition(
            "the region may have at most one constraint so the ball fits".into(),
        ));
    }
    let base = oracle.estimate(problem)?;
    if base.value <= base.error {
        return Err(Error::EmptyRegion(format!(
            "volume estimate {} does not exceed its error {}",
            base.value, base.error
        )));
    }
    let mut certified = base.certified;

    let mut d2 = Rational::new();
    for c in center {
        d2 += Rational::from(c - Rational::from((1, 2))).square();
    }
    let initial_hi = d2.to_f64().sqrt() + (n as f64).sqrt() / 2.0;
    let (mut lo, mut hi) = (0.0f64, initial_hi);
    let mut steps = Vec::new();
    let mut volume_slack = 0.0f64;

    while hi - lo > tol {
        let iteration = steps.len() + 1;
        let r = 0.5 * (lo + hi);
        let radius = Rational::from_f64(r).ok_or_else(|| Error::InvalidInput(format!("radius {r}")))?;
        let ball = SeparableConstraint::from_ball(center, &radius)?;
        let cmp = oracle.compare(problem, &ball)?;
        certified &= cmp.base.certified && cmp.clipped.certified;
        if cmp.margin >= cmp.base.value {
            return Err(Error::Inconclusive {
                iteration,
                detail: format!(
                    "margin {} is not below the region volume {}",
                    cmp.margin, cmp.base.value
                ),
            });
        }
        if cmp.gap < -cmp.margin {
            return Err(Error::Inconclusive {
                iteration,
                detail: format!(
                    "clipped volume {} exceeds the region volume {} by more than {}",
                    cmp.clipped.value, cmp.base.value, cmp.margin
                ),
            });
        }
        let decision = if cmp.gap > cmp.margin {
            lo = r;
            Decision::Grow
        } else {
            hi = r;
            volume_slack = volume_slack.max(cmp.margin);
            Decision::Shrink
        };
        steps.push(BisectionStep {
            radius: r,
            lo,
            hi,
            base: cmp.base.value,
            clipped: cmp.clipped.value,
            gap: cmp.gap,
            margin: cmp.margin,
            decision,
        });
    }

    let trace = BisectionTrace {
        oracle: oracle.name().to_string(),
        steps,
        radius: hi,
        tolerance: tol,
        initial_hi,
        volume_slack,
        certified,
    };
    Ok((hi, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    /// Exact coverage: the ball covers the region iff it contains every
    /// vertex of a polytope region.
    struct VertexOracle {
        vertices: Vec<Vec<Rational>>,
    }

    impl VolumeOracle for VertexOracle {
        fn name(&self) -> &'static str {
            "vertex"
        }

        fn estimate(&self, _: &ClippedCubeProblem) -> Result<VolumeEstimate> {
            Ok(VolumeEstimate {
                value: 1.0,
                error: 0.0,
                certified: true,
            })
        }

        fn compare(&self, p: &ClippedCubeProblem, extra: &SeparableConstraint) -> Result<Comparison> {
            let covered = self
                .vertices
                .iter()
                .all(|v| extra.residual(v).unwrap() >= 0);
            let base = self.estimate(p)?;
            let clipped = VolumeEstimate {
                value: if covered { 1.0 } else { 0.5 },
                ..base.clone()
            };
            Ok(Comparison {
                gap: base.value - clipped.value,
                margin: 0.0,
                base,
                clipped,
            })
        }
    }

    fn square_vertices() -> Vec<Vec<Rational>> {
        vec![
            vec![q(0, 1), q(0, 1)],
            vec![q(1, 1), q(0, 1)],
            vec![q(0, 1), q(1, 1)],
            vec![q(1, 1), q(1, 1)],
        ]
    }

    #[test]
    fn exact_oracle_converges() {
        let p = ClippedCubeProblem::new(2, vec![]).unwrap();
        let oracle = VertexOracle {
            vertices: square_vertices(),
        };
        let (r, trace) = max_distance(&p, &[q(-1, 1), q(-1, 1)], 1e-6, &oracle).unwrap();
        assert!((r - 8f64.sqrt()).abs() <= 1e-6);
        assert!(r >= 8f64.sqrt() - 1e-12);
        assert!(trace.steps.len() <= trace.iteration_limit());
        for w in trace.steps.windows(2) {
            let (a, b) = (w[0].hi - w[0].lo, w[1].hi - w[1].lo);
            assert!((b - a / 2.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn mc_oracle_on_square_and_triangle() {
        let oracle = McOracle::new(1_000_000, 1);
        let cube = ClippedCubeProblem::new(2, vec![]).unwrap();
        let (r, _) = max_distance(&cube, &[q(-1, 1), q(-1, 1)], 1e-2, &oracle).unwrap();
        assert!((r - 8f64.sqrt()).abs() <= 1e-2);

        let hs = SeparableConstraint::from_halfspace(&[q(1, 1), q(1, 1)], &q(1, 1)).unwrap();
        let tri = ClippedCubeProblem::new(2, vec![hs]).unwrap();
        let (r, trace) = max_distance(&tri, &[q(0, 1), q(0, 1)], 1e-2, &oracle).unwrap();
        assert!((r - 1.0).abs() <= 1e-2, "r={r}");
        assert!(trace.steps.len() <= trace.iteration_limit());
    }

    #[test]
    fn empty_region_is_rejected() {
        let hs = SeparableConstraint::from_halfspace(&[q(1, 1), q(0, 1)], &q(0, 1)).unwrap();
        let p = ClippedCubeProblem::new(2, vec![hs]).unwrap();
        let oracle = McOracle::new(100_000, 1);
        assert!(matches!(
            max_distance(&p, &[q(-1, 1), q(1, 2)], 1e-2, &oracle),
            Err(Error::EmptyRegion(_))
        ));
    }

    #[test]
    fn noisy_oracle_is_inconclusive() {
        let p = ClippedCubeProblem::new(2, vec![]).unwrap();
        // 10 samples: the margin swamps a small region quickly
        let hs = SeparableConstraint::from_halfspace(&[q(1, 1), q(1, 1)], &q(1, 20)).unwrap();
        let tiny = p.with_constraint(hs).unwrap();
        let oracle = McOracle::new(200, 3);
        match max_distance(&tiny, &[q(0, 1), q(0, 1)], 1e-3, &oracle) {
            Err(Error::Inconclusive { iteration, .. }) => assert!(iteration >= 1),
            Err(Error::EmptyRegion(_)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relaxing_the_halfspace_does_not_shrink_radius() {
        let oracle = McOracle::new(200_000, 9);
        let mut prev = 0.0;
        for b in [q(1, 2), q(1, 1), q(3, 2)] {
            let hs = SeparableConstraint::from_halfspace(&[q(1, 1), q(1, 1)], &b).unwrap();
            let p = ClippedCubeProblem::new(2, vec![hs]).unwrap();
            let (r, _) = max_distance(&p, &[q(0, 1), q(0, 1)], 1e-2, &oracle).unwrap();
            assert!(r + 2e-2 >= prev);
            prev = r;
        }
    }
}
