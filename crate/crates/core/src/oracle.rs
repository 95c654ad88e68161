//! Independent volume estimators: uniform Monte Carlo over the cube and the
//! exact simplex volume.
//!
//! # Generator
//!
//! Coordinate `d` of sample `j` in dimension `n` uses counter
//! `i = j·n + d` and is
//!
//! ```text
//! z = seed + (i + 1)·0x9E3779B97F4A7C15          (wrapping)
//! z = (z ^ (z >> 30))·0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27))·0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! u = (z >> 11)·2⁻⁵³                              in [0, 1)
//! ```
//!
//! which is the `i`-th output of SplitMix64 started from state `seed`. Any
//! counter range can be generated independently, so hit counts do not depend
//! on how the work is split.

use rayon::prelude::*;
use rug::{Integer, Rational};

use crate::constraint::{ClippedCubeProblem, SeparableConstraint};
use crate::error::{Error, Result};
use crate::polynomial::horner_f64;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const CHUNK: u64 = 1 << 15;

/// The `i`-th SplitMix64 output for state `seed`.
pub fn splitmix64(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(i.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform `[0, 1)` variate for counter `i`.
pub fn uniform(seed: u64, i: u64) -> f64 {
    (splitmix64(seed, i) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// `sqrt(mean·(1 − mean)/samples)`.
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub hits: u64,
}

impl McEstimate {
    fn from_hits(hits: u64, samples: u64, seed: u64) -> Self {
        let mean = hits as f64 / samples as f64;
        Self {
            mean,
            std_error: (mean * (1.0 - mean) / samples as f64).sqrt(),
            samples,
            seed,
            hits,
        }
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "mean = {}\nstd_error = {}\nsamples = {}\nseed = {}\nhits = {}\n",
            self.mean, self.std_error, self.samples, self.seed, self.hits
        )
    }
}

/// Floating copy of a constraint for fast membership tests.
struct Compiled {
    coeffs: Vec<Vec<f64>>,
    offset: f64,
}

impl Compiled {
    fn new(c: &SeparableConstraint) -> Self {
        Self {
            coeffs: c.per_coordinate().iter().map(|a| a.to_f64_coefficients()).collect(),
            offset: c.offset().to_f64(),
        }
    }

    fn holds(&self, x: &[f64]) -> bool {
        let s: f64 = self.coeffs.iter().zip(x).map(|(a, &xi)| horner_f64(a, xi)).sum();
        self.offset - s >= 0.0
    }
}

/// Counts samples satisfying `a` and samples satisfying `a` and `b`, over a
/// shared sample stream.
fn count_hits(
    n: usize,
    samples: u64,
    seed: u64,
    a: &[Compiled],
    b: &[Compiled],
) -> (u64, u64) {
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut x = vec![0.0; n];
            let (mut ha, mut hab) = (0u64, 0u64);
            for j in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let base = j * n as u64;
                for (d, xd) in x.iter_mut().enumerate() {
                    *xd = uniform(seed, base + d as u64);
                }
                if a.iter().all(|k| k.holds(&x)) {
                    ha += 1;
                    if b.iter().all(|k| k.holds(&x)) {
                        hab += 1;
                    }
                }
            }
            (ha, hab)
        })
        .reduce(|| (0, 0), |l, r| (l.0 + r.0, l.1 + r.1))
}

fn check_samples(samples: u64) -> Result<()> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be at least 1".into()));
    }
    Ok(())
}

/// Fraction of uniform cube samples with every residual `≥ 0`.
pub fn mc_volume(problem: &ClippedCubeProblem, samples: u64, seed: u64) -> Result<McEstimate> {
    check_samples(samples)?;
    if problem.constraints().is_empty() {
        return Ok(McEstimate::from_hits(samples, samples, seed));
    }
    let a: Vec<Compiled> = problem.constraints().iter().map(Compiled::new).collect();
    let (hits, _) = count_hits(problem.dimension(), samples, seed, &a, &[]);
    Ok(McEstimate::from_hits(hits, samples, seed))
}

/// Estimates of `vol(problem)` and `vol(problem ∩ extra)` from the same
/// samples, so their difference has the variance of the difference alone.
pub fn mc_volume_pair(
    problem: &ClippedCubeProblem,
    extra: &SeparableConstraint,
    samples: u64,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    check_samples(samples)?;
    if extra.dimension() != problem.dimension() {
        return Err(Error::DimensionMismatch {
            expected: problem.dimension(),
            got: extra.dimension(),
        });
    }
    let a: Vec<Compiled> = problem.constraints().iter().map(Compiled::new).collect();
    let b = [Compiled::new(extra)];
    let (ha, hab) = count_hits(problem.dimension(), samples, seed, &a, &b);
    Ok((
        McEstimate::from_hits(ha, samples, seed),
        McEstimate::from_hits(hab, samples, seed),
    ))
}

/// `vol(𝓤 ∩ {Σx_i ≤ b}) = bⁿ/n!` for `0 < b ≤ 1`.
pub fn exact_simplex_volume(n: u32, b: &Rational) -> Result<Rational> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if *b <= 0 || *b > 1 {
        return Err(Error::InvalidInput(format!(
            "simplex offset must lie in (0, 1], got {b}"
        )));
    }
    let mut v = Rational::from(rug::ops::Pow::pow(b, n));
    v /= Integer::from(Integer::factorial(n));
    Ok(v)
}
