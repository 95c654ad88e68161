//! Riemann sums over `[0, K]` and `[0, K]²` with a-priori error certificates.
//!
//! For an integrand with `|f'| ≤ D` the left rule with `M` equal steps of
//! `ε = K/M` is off by at most `D·ε·K`. Nodes are evaluated in parallel and
//! summed in index order, so results do not depend on the thread count.

use rayon::prelude::*;
use rug::Rational;

use crate::error::{Error, Result};
use crate::heaviside::Sharpness;
use crate::moments::MomentFamily;
use crate::numeric::abs_upper_f64;
use crate::polynomial::UnivariatePolynomial;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RiemannRule {
    #[default]
    Left,
    /// Sample at cell midpoints. The left-rule certificate still applies.
    Midpoint,
}

impl RiemannRule {
    fn offset(self) -> f64 {
        match self {
            RiemannRule::Left => 0.0,
            RiemannRule::Midpoint => 0.5,
        }
    }
}

/// Uniform grid on `[0, K]` (per axis) and its error certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraturePlan {
    pub k: f64,
    /// Number of cells per axis, so `step = K / intervals`.
    pub intervals: usize,
    pub step: f64,
    /// Sum of the per-axis derivative bounds.
    pub derivative_bound: f64,
    pub certified_error: f64,
    /// 1 or 2.
    pub dims: u32,
    pub rule: RiemannRule,
}

impl QuadraturePlan {
    /// A grid with a fixed number of cells and no certificate.
    pub fn uniform(k: Sharpness, intervals: usize) -> Result<Self> {
        Self::uniform_nd(k, intervals, 1)
    }

    pub fn uniform_2d(k: Sharpness, intervals: usize) -> Result<Self> {
        Self::uniform_nd(k, intervals, 2)
    }

    fn uniform_nd(k: Sharpness, intervals: usize, dims: u32) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidInput("quadrature needs at least one cell".into()));
        }
        Ok(Self {
            k: k.value(),
            intervals,
            step: k.value() / intervals as f64,
            derivative_bound: f64::INFINITY,
            certified_error: f64::INFINITY,
            dims,
            rule: RiemannRule::Left,
        })
    }

    pub fn with_rule(mut self, rule: RiemannRule) -> Self {
        self.rule = rule;
        self
    }

    /// Total number of integrand evaluations.
    pub fn nodes(&self) -> usize {
        self.intervals.pow(self.dims)
    }

    fn node(&self, i: usize) -> f64 {
        (i as f64 + self.rule.offset()) * self.k / self.intervals as f64
    }
}

/// Certified bound on `|Σ_q g_q(x_q)|` over the cube.
pub fn sum_sup_bound(g: &[UnivariatePolynomial]) -> f64 {
    let mut lo = Rational::new();
    let mut hi = Rational::new();
    for p in g {
        let (a, b) = p.range_enclosure_unit();
        lo += a;
        hi += b;
    }
    abs_upper_f64(&lo.abs().max(hi.abs()))
}

/// Certified bound on `∫|Πf_q|` as the product of per-coordinate bounds.
pub fn weight_bound(f: &[UnivariatePolynomial]) -> f64 {
    let mut w = Rational::from(1);
    for p in f {
        if p.is_one() {
            continue;
        }
        w *= p.abs_integral_bound_unit();
    }
    abs_upper_f64(&w)
}

/// `2·K·B_f·N²` with `B_f ≥ ∫|Πf|` and `N ≥ sup|Σg|`, a bound on
/// `|d J1/dy|` over `[0, K]`.
pub fn derivative_bound(fam: &MomentFamily, k: Sharpness) -> f64 {
    let n = sum_sup_bound(fam.g());
    if n == 0.0 {
        return 0.0;
    }
    2.0 * k.value() * weight_bound(fam.f()) * n * n
}

/// `(∂/∂y, ∂/∂z)` bounds of `J2`.
pub fn derivative_bounds_2d(fam: &MomentFamily, k: Sharpness) -> (f64, f64) {
    let dy = derivative_bound(fam, k);
    let dz = match fam.h() {
        Some(h) => {
            let n = sum_sup_bound(h);
            2.0 * k.value() * weight_bound(fam.f()) * n * n
        }
        None => 0.0,
    };
    (dy, dz)
}

fn check_target(delta: f64, bound: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "quadrature target must be positive, got {delta}"
        )));
    }
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid derivative bound {bound}")));
    }
    Ok(())
}

/// Coarsest grid on `[0, K]` with `D·ε·K ≤ δ`.
pub fn plan_quadrature(k: Sharpness, delta: f64, derivative_bound: f64) -> Result<QuadraturePlan> {
    check_target(delta, derivative_bound)?;
    let kv = k.value();
    // error = D·K²/M
    plan_cells(kv, 1, derivative_bound, kv * kv, delta)
}

/// Coarsest square grid on `[0, K]²` with `(D_y + D_z)·ε·K² ≤ δ`.
pub fn plan_quadrature_2d(
    k: Sharpness,
    delta: f64,
    bound_y: f64,
    bound_z: f64,
) -> Result<QuadraturePlan> {
    let d = bound_y + bound_z;
    check_target(delta, d)?;
    let kv = k.value();
    // error = D·K³/M
    plan_cells(kv, 2, d, kv * kv * kv, delta)
}

fn plan_cells(k: f64, dims: u32, d: f64, scale: f64, delta: f64) -> Result<QuadraturePlan> {
    let error_for = |m: usize| d * scale / m as f64;
    let mut m = if d == 0.0 {
        1
    } else {
        let raw = (d * scale / delta).ceil();
        if raw > 1e12 {
            return Err(Error::Precondition(format!(
                "quadrature target {delta} needs {raw:e} cells per axis"
            )));
        }
        raw.max(1.0) as usize
    };
    while error_for(m) > delta {
        m += 1;
    }
    Ok(QuadraturePlan {
        k,
        intervals: m,
        step: k / m as f64,
        derivative_bound: d,
        certified_error: error_for(m),
        dims,
        rule: RiemannRule::Left,
    })
}

/// `Σ_i f(y_i) · K/M`, summed in ascending `i`.
pub fn riemann_1d<F>(f: F, plan: &QuadraturePlan) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let values: Vec<f64> = (0..plan.intervals)
        .into_par_iter()
        .map(|i| f(plan.node(i)))
        .collect::<Result<_>>()?;
    let total: f64 = values.iter().sum();
    Ok(total * plan.k / plan.intervals as f64)
}

/// Tensor-product sum over `[0, K]²`, summed row by row.
pub fn riemann_2d<F>(f: F, plan: &QuadraturePlan) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let m = plan.intervals;
    // one partial sum per row keeps memory linear in M and the order fixed
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let y = plan.node(i);
            let mut s = 0.0;
            for j in 0..m {
                s += f(y, plan.node(j))?;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let total: f64 = rows.iter().sum();
    let cell = plan.k / m as f64;
    Ok(total * cell * cell)
}
