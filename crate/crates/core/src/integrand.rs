//! Truncated Taylor series for
//!
//! ```text
//! J1(y)    = ∫ Πf · e^{−y²(Σg)²}
//! J2(y, z) = ∫ Πf · e^{−y²(Σg)²} · e^{−z²(Σh)²}
//! ```
//!
//! over exact moment tables. The series alternate with terms as large as
//! `e^{t_max}` while the sums stay below `∫|Πf|`, so accumulation runs in
//! MPFR at a precision that grows with `t_max`.

use rug::{Assign, Float, Integer};

use crate::constraint::ClippedCubeProblem;
use crate::error::{Error, Result};
use crate::heaviside::Sharpness;
use crate::moments::BlockMomentTable;

/// Guard bits added on top of the `t_max·log₂(e)` that cancellation eats.
pub const GUARD_BITS: u32 = 64;

/// Truncation order and working precision for one series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPlan {
    /// Bound on the exponent magnitude over the whole domain.
    pub t_max: f64,
    /// Highest retained power `p` of the exponent.
    pub order: usize,
    pub precision_bits: u32,
    /// Target for the truncation error of the integrand.
    pub tolerance: f64,
    /// `e^{t_max}·t_max^{p+1}/(p+1)!` at the chosen order.
    pub remainder_bound: f64,
}

impl SeriesPlan {
    /// Smallest admissible working precision for this `t_max`.
    pub fn min_precision_bits(&self) -> u32 {
        min_precision_bits(self.t_max)
    }

    /// Same plan at a different precision. Refuses to go below the minimum.
    pub fn with_precision(&self, bits: u32) -> Result<Self> {
        let min = self.min_precision_bits();
        if bits < min {
            return Err(Error::Precondition(format!(
                "precision of {bits} bits is below the {min} bits needed for t_max = {}",
                self.t_max
            )));
        }
        Ok(Self {
            precision_bits: bits,
            ..self.clone()
        })
    }

    /// Bound on the error of the float accumulation, relative to the weight
    /// `∫|Πf|`. Each of the `p + 1` terms is bounded by `e^{t_max}` times the
    /// weight and picks up a few roundings.
    pub fn rounding_bound(&self) -> f64 {
        let log2 = (4.0 * (self.order as f64 + 2.0)).log2()
            + self.t_max * std::f64::consts::LOG2_E
            - self.precision_bits as f64;
        log2.exp2()
    }
}

pub fn min_precision_bits(t_max: f64) -> u32 {
    (1.45 * t_max).ceil() as u32 + GUARD_BITS
}

/// `ln(e^t·t^{p+1}/(p+1)!)`.
fn log_remainder(t_max: f64, order: usize, log_factorial: f64) -> f64 {
    t_max + (order as f64 + 1.0) * t_max.ln() - log_factorial
}

/// Smallest order whose Lagrange remainder bound is within `tolerance`.
pub fn plan_for_bound(t_max: f64, tolerance: f64) -> Result<SeriesPlan> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "series tolerance must be positive, got {tolerance}"
        )));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid exponent bound {t_max}")));
    }
    if t_max == 0.0 {
        return Ok(SeriesPlan {
            t_max,
            order: 0,
            precision_bits: min_precision_bits(0.0),
            tolerance,
            remainder_bound: 0.0,
        });
    }
    let target = tolerance.ln();
    // ln((p+1)!) accumulated as p grows
    let mut log_fact = 0.0f64;
    let mut order = 0usize;
    loop {
        log_fact += ((order + 1) as f64).ln();
        let lr = log_remainder(t_max, order, log_fact);
        // a relative slack absorbs the rounding in the log-space sum
        if lr + 1e-12 * lr.abs().max(1.0) <= target {
            return Ok(SeriesPlan {
                t_max,
                order,
                precision_bits: min_precision_bits(t_max),
                tolerance,
                remainder_bound: lr.exp(),
            });
        }
        order += 1;
    }
}

/// Plan for a problem at sharpness `K`: `t_max = K²·Σ_i N_i²` with `N_i`
/// the certified bound on `|ρ_i|` over the cube.
pub fn plan_series(
    problem: &ClippedCubeProblem,
    k: Sharpness,
    tolerance: f64,
) -> Result<SeriesPlan> {
    let kk = k.value() * k.value();
    let t_max = problem
        .constraints()
        .iter()
        .map(|c| {
            let n = crate::numeric::abs_upper_f64(&c.normalize().residual_sup());
            kk * n * n
        })
        .sum::<f64>();
    plan_for_bound(crate::numeric::next_up(t_max), tolerance)
}

/// Precomputed `c_k = values(2k, 0)/k!` for fast evaluation of `J1`.
#[derive(Clone, Debug)]
pub struct J1Series {
    coeffs: Vec<Float>,
    precision_bits: u32,
}

impl J1Series {
    pub fn new(table: &BlockMomentTable, plan: &SeriesPlan) -> Result<Self> {
        let need = 2 * plan.order;
        if table.max_g_power() < need {
            return Err(Error::InsufficientDepth {
                need_g: need,
                need_h: 0,
                have_g: table.max_g_power(),
                have_h: table.max_h_power(),
            });
        }
        let prec = plan.precision_bits;
        let mut fact = Integer::from(1);
        let mut coeffs = Vec::with_capacity(plan.order + 1);
        for k in 0..=plan.order {
            if k > 0 {
                fact *= k as u64;
            }
            coeffs.push(table.value_float(2 * k, 0, prec) / &fact);
        }
        Ok(Self {
            coeffs,
            precision_bits: prec,
        })
    }

    /// `Σ_k c_k·(−y²)^k`, ascending in `k`.
    pub fn eval(&self, y: f64) -> f64 {
        let prec = self.precision_bits;
        let mut u = Float::with_val(prec, y);
        u.square_mut();
        u = -u;
        let mut pw = Float::with_val(prec, 1);
        let mut sum = self.coeffs[0].clone();
        let mut term = Float::new(prec);
        for c in &self.coeffs[1..] {
            pw *= &u;
            term.assign(c * &pw);
            sum += &term;
        }
        sum.to_f64()
    }
}

/// Precomputed `c_{i,j} = values(2i, 2j)/(i!·j!)` for `J2`.
#[derive(Clone, Debug)]
pub struct J2Series {
    coeffs: Vec<Vec<Float>>,
    precision_bits: u32,
}

impl J2Series {
    pub fn new(table: &BlockMomentTable, plan: &SeriesPlan) -> Result<Self> {
        let need = 2 * plan.order;
        if table.max_g_power() < need || table.max_h_power() < need {
            return Err(Error::InsufficientDepth {
                need_g: need,
                need_h: need,
                have_g: table.max_g_power(),
                have_h: table.max_h_power(),
            });
        }
        let prec = plan.precision_bits;
        let facts: Vec<Integer> = (0..=plan.order as u32)
            .map(|k| Integer::from(Integer::factorial(k)))
            .collect();
        let coeffs = (0..=plan.order)
            .map(|i| {
                (0..=plan.order)
                    .map(|j| {
                        table.value_float(2 * i, 2 * j, prec)
                            / Integer::from(&facts[i] * &facts[j])
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            coeffs,
            precision_bits: prec,
        })
    }

    /// `Σ_i (−y²)^i Σ_j c_{i,j}·(−z²)^j`, ascending in `i` then `j`.
    pub fn eval(&self, y: f64, z: f64) -> f64 {
        let prec = self.precision_bits;
        let neg_square = |v: f64| {
            let mut f = Float::with_val(prec, v);
            f.square_mut();
            -f
        };
        let u = neg_square(y);
        let v = neg_square(z);
        let mut pu = Float::with_val(prec, 1);
        let mut sum = Float::new(prec);
        let mut term = Float::new(prec);
        for (i, row) in self.coeffs.iter().enumerate() {
            if i > 0 {
                pu *= &u;
            }
            let mut pv = Float::with_val(prec, 1);
            let mut inner = Float::new(prec);
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    pv *= &v;
                }
                term.assign(c * &pv);
                inner += &term;
            }
            inner *= &pu;
            sum += &inner;
        }
        sum.to_f64()
    }
}

/// One-off evaluation of `J1(y)`.
pub fn eval_j1(y: f64, table: &BlockMomentTable, plan: &SeriesPlan) -> Result<f64> {
    Ok(J1Series::new(table, plan)?.eval(y))
}

/// One-off evaluation of `J2(y, z)`.
pub fn eval_j2(y: f64, z: f64, table: &BlockMomentTable, plan: &SeriesPlan) -> Result<f64> {
    Ok(J2Series::new(table, plan)?.eval(y, z))
}
