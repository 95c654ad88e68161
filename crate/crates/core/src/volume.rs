//! The smoothed volume `T(K) = ∫_𝓤 Π_i H_K(ρ_i)` and a-priori bounds on
//! `|vol − T(K)|`.
//!
//! With normalized constraints `ρ_i = −Σ_q c̄_{i,q}(x_q)` and
//! `H_K(ρ) = ½ + (1/√π)∫₀ᴷ ρ·e^{−y²ρ²} dy`, the product expands into
//!
//! ```text
//! one constraint:  T = ½ + (1/√π)  ∫₀ᴷ Σ_q ∫(−c̄_q)·e^{−y²ρ²}
//! two constraints: T = ¼ + I₂ + I₃ + I₄
//!   I₂ = (1/(2√π)) ∫₀ᴷ dy ∫ρ₀·e^{−y²ρ₀²}
//!   I₃ = (1/(2√π)) ∫₀ᴷ dz ∫ρ₁·e^{−z²ρ₁²}
//!   I₄ = (1/π) ∫₀ᴷ∫₀ᴷ dy dz ∫ρ₀ρ₁·e^{−y²ρ₀²}·e^{−z²ρ₁²}
//! ```
//!
//! where each `ρ` factor is distributed over coordinates into separable
//! terms.

use std::fmt::Write as _;
use std::time::Instant;

use rug::Rational;

use crate::constraint::{min_cube_distance_squared, ClippedCubeProblem, ConstraintKind};
use crate::error::{Error, Result};
use crate::heaviside::Sharpness;
use crate::integrand::{plan_for_bound, J1Series, J2Series, SeriesPlan};
use crate::moments::{block_moments_cached, linear_combination, MomentCache, MomentFamily};
use crate::polynomial::UnivariatePolynomial;
use crate::quadrature::{
    plan_quadrature, plan_quadrature_2d, riemann_1d, riemann_2d, sum_sup_bound, weight_bound,
    QuadraturePlan, RiemannRule,
};

/// Which integral of the decomposition a term feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    /// One exponential, first constraint.
    I2,
    /// One exponential, second constraint.
    I3,
    /// Both exponentials.
    I4,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::I2 => "i2",
            Component::I3 => "i3",
            Component::I4 => "i4",
        }
    }
}

/// `coefficient · ∫ Πf · e^{…}` for one moment family.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: Rational,
    pub family: MomentFamily,
    pub component: Component,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TermExpansion {
    pub terms: Vec<Term>,
}

impl TermExpansion {
    pub fn component(&self, which: Component) -> impl Iterator<Item = &Term> {
        self.terms.iter().filter(move |t| t.component == which)
    }

    pub fn count(&self, which: Component) -> usize {
        self.component(which).count()
    }
}

fn single_factor_terms(c: &[UnivariatePolynomial], component: Component) -> Result<Vec<Term>> {
    let n = c.len();
    (0..n)
        .map(|q| {
            let mut f = vec![UnivariatePolynomial::one(); n];
            f[q] = c[q].neg();
            Ok(Term {
                coefficient: Rational::from(1),
                family: MomentFamily::new(f, c.to_vec(), None)?,
                component,
            })
        })
        .collect()
}

/// Distributes each residual factor over the coordinates. Constraints must
/// already be normalized.
pub fn expand_terms(problem: &ClippedCubeProblem) -> Result<TermExpansion> {
    let cs = problem.constraints();
    if let Some(i) = cs.iter().position(|c| !c.is_normalized()) {
        return Err(Error::Precondition(format!(
            "constraint {i} has offset {}; normalize it first",
            cs[i].offset()
        )));
    }
    let mut terms = Vec::new();
    let Some(first) = cs.first() else {
        return Ok(TermExpansion { terms });
    };
    let c0 = first.per_coordinate();
    terms.extend(single_factor_terms(c0, Component::I2)?);
    if let Some(second) = cs.get(1) {
        let c1 = second.per_coordinate();
        terms.extend(single_factor_terms(c1, Component::I3)?);
        let n = problem.dimension();
        for q in 0..n {
            for r in 0..n {
                let mut f = vec![UnivariatePolynomial::one(); n];
                if q == r {
                    // (−c̄₀)(−c̄₁) on the same coordinate
                    f[q] = c0[q].multiply(&c1[q]);
                } else {
                    f[q] = c0[q].neg();
                    f[r] = c1[r].neg();
                }
                terms.push(Term {
                    coefficient: Rational::from(1),
                    family: MomentFamily::new(f, c0.to_vec(), Some(c1.to_vec()))?,
                    component: Component::I4,
                });
            }
        }
    }
    Ok(TermExpansion { terms })
}

/// Inputs of [`t_of_k`].
#[derive(Clone, Debug)]
pub struct ApproximationParams {
    pub k: Sharpness,
    /// Target for the summed quadrature certificates.
    pub delta: f64,
    /// Truncation tolerance of every series evaluation.
    pub tau: f64,
    /// Working precision; the minimum the plan allows when absent.
    pub precision_bits: Option<u32>,
    pub rule: RiemannRule,
}

impl ApproximationParams {
    pub fn new(k: Sharpness, delta: f64, tau: f64) -> Self {
        Self {
            k,
            delta,
            tau,
            precision_bits: None,
            rule: RiemannRule::Left,
        }
    }
}

/// Value and error budget of one integral.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentReport {
    pub component: Component,
    pub value: f64,
    pub terms: usize,
    pub series: SeriesPlan,
    pub quadrature: QuadraturePlan,
    pub quadrature_error: f64,
    pub series_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeReport {
    pub k: f64,
    pub delta: f64,
    pub tau: f64,
    pub t_of_k: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub components: Vec<ComponentReport>,
    /// Certified bound on `|T(K) − computed value|`.
    pub numerical_error: f64,
    /// A-priori bound on `|vol − T(K)|` when it applies.
    pub error_bound: Option<f64>,
    /// Why `error_bound` is absent.
    pub error_bound_note: Option<String>,
    pub wall_time_ms: u128,
}

impl VolumeReport {
    pub fn quadrature_error(&self) -> f64 {
        self.components.iter().map(|c| c.quadrature_error).sum()
    }

    pub fn series_error(&self) -> f64 {
        self.components.iter().map(|c| c.series_error).sum()
    }

    /// Highest truncation order over the components.
    pub fn order(&self) -> usize {
        self.components.iter().map(|c| c.series.order).max().unwrap_or(0)
    }

    pub fn precision_bits(&self) -> u32 {
        self.components
            .iter()
            .map(|c| c.series.precision_bits)
            .max()
            .unwrap_or(0)
    }

    pub fn t_max(&self) -> f64 {
        self.components.iter().map(|c| c.series.t_max).fold(0.0, f64::max)
    }

    /// Finest step over the components.
    pub fn epsilon(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.quadrature.step)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn nodes(&self) -> usize {
        self.components.iter().map(|c| c.quadrature.nodes()).sum()
    }

    /// Flat `key = value` block. `wall_time_ms` is only written on request
    /// so that reports stay byte-identical between runs.
    pub fn to_key_values(&self, include_timing: bool) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("k", self.k.to_string());
        kv("delta", self.delta.to_string());
        kv("tau", self.tau.to_string());
        kv("t_of_k", self.t_of_k.to_string());
        kv("i1", self.i1.to_string());
        kv("i2", self.i2.to_string());
        kv("i3", self.i3.to_string());
        kv("i4", self.i4.to_string());
        kv("numerical_error", self.numerical_error.to_string());
        kv("quadrature_error", self.quadrature_error().to_string());
        kv("series_error", self.series_error().to_string());
        match (&self.error_bound, &self.error_bound_note) {
            (Some(b), _) => kv("error_bound", b.to_string()),
            (None, note) => {
                kv("error_bound", "not_applicable".into());
                if let Some(n) = note {
                    kv("error_bound_reason", n.clone());
                }
            }
        }
        kv("p", self.order().to_string());
        kv("precision_bits", self.precision_bits().to_string());
        kv("t_max", self.t_max().to_string());
        kv("epsilon", self.epsilon().to_string());
        kv("nodes", self.nodes().to_string());
        for c in &self.components {
            let name = c.component.name();
            kv(&format!("{name}.terms"), c.terms.to_string());
            kv(&format!("{name}.p"), c.series.order.to_string());
            kv(&format!("{name}.intervals"), c.quadrature.intervals.to_string());
        }
        if include_timing {
            kv("wall_time_ms", self.wall_time_ms.to_string());
        }
        out
    }
}

/// `T(K)` with a fresh moment cache.
pub fn t_of_k(problem: &ClippedCubeProblem, params: &ApproximationParams) -> Result<VolumeReport> {
    t_of_k_cached(problem, params, &MomentCache::new())
}

/// `T(K)`, reusing moment tables held in `cache`.
pub fn t_of_k_cached(
    problem: &ClippedCubeProblem,
    params: &ApproximationParams,
    cache: &MomentCache,
) -> Result<VolumeReport> {
    let started = Instant::now();
    if !(params.delta > 0.0 && params.delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "delta must be positive, got {}",
            params.delta
        )));
    }
    if !(params.tau > 0.0 && params.tau.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "tau must be positive, got {}",
            params.tau
        )));
    }
    let count = problem.constraints().len();
    if count == 0 {
        return Err(Error::Precondition(
            "the smoothed volume needs at least one constraint".into(),
        ));
    }
    let normalized = problem.normalized();
    let expansion = expand_terms(&normalized)?;
    let which: &[Component] = if count == 1 {
        &[Component::I2]
    } else {
        &[Component::I2, Component::I3, Component::I4]
    };
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let delta_each = params.delta / which.len() as f64;

    let mut components = Vec::with_capacity(which.len());
    for &c in which {
        let prefactor = match (count, c) {
            (1, _) => 1.0 / sqrt_pi,
            (_, Component::I4) => 1.0 / std::f64::consts::PI,
            _ => 0.5 / sqrt_pi,
        };
        let terms: Vec<&Term> = expansion.component(c).collect();
        let report = evaluate_component(c, &terms, prefactor, delta_each, params, cache)
            .map_err(|e| with_context(e, c))?;
        components.push(report);
    }

    let value_of = |c: Component| {
        components
            .iter()
            .find(|r| r.component == c)
            .map_or(0.0, |r| r.value)
    };
    let i1 = if count == 1 { 0.5 } else { 0.25 };
    let (i2, i3, i4) = (
        value_of(Component::I2),
        value_of(Component::I3),
        value_of(Component::I4),
    );
    let numerical_error = components
        .iter()
        .map(|c| c.quadrature_error + c.series_error)
        .sum();
    let (error_bound, error_bound_note) = match ball_error_bound(problem, params.k) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(VolumeReport {
        k: params.k.value(),
        delta: params.delta,
        tau: params.tau,
        t_of_k: i1 + i2 + i3 + i4,
        i1,
        i2,
        i3,
        i4,
        components,
        numerical_error,
        error_bound,
        error_bound_note,
        wall_time_ms: started.elapsed().as_millis(),
    })
}

fn with_context(e: Error, c: Component) -> Error {
    match e {
        Error::Precondition(m) => Error::Precondition(format!("{}: {m}", c.name())),
        Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", c.name())),
        other => other,
    }
}

const F64_UNIT: f64 = f64::EPSILON;

fn evaluate_component(
    component: Component,
    terms: &[&Term],
    prefactor: f64,
    delta: f64,
    params: &ApproximationParams,
    cache: &MomentCache,
) -> Result<ComponentReport> {
    let k = params.k;
    let kv = k.value();
    let fam0 = &terms[0].family;
    let two = component == Component::I4;
    let n_g = sum_sup_bound(fam0.g());
    let n_h = fam0.h().map_or(0.0, sum_sup_bound);
    let weight: f64 = terms
        .iter()
        .map(|t| crate::numeric::abs_upper_f64(&t.coefficient) * weight_bound(t.family.f()))
        .sum();

    let mut plan = if two {
        plan_for_bound(crate::numeric::next_up(kv * kv * (n_g * n_g + n_h * n_h)), params.tau / 2.0)?
    } else {
        plan_for_bound(crate::numeric::next_up(kv * kv * n_g * n_g), params.tau)?
    };
    plan.tolerance = params.tau;
    if let Some(bits) = params.precision_bits {
        plan = plan.with_precision(bits)?;
    }

    let depth = 2 * plan.order;
    let h_depth = if two { depth } else { 0 };
    let tables = terms
        .iter()
        .map(|t| block_moments_cached(&t.family, depth, h_depth, cache))
        .collect::<Result<Vec<_>>>()?;
    let combo: Vec<(Rational, &_)> = terms
        .iter()
        .zip(&tables)
        .map(|(t, table)| (t.coefficient.clone(), table))
        .collect();
    let table = linear_combination(&combo)?;

    let scale = prefactor * 2.0 * kv * weight;
    if two {
        let quad = plan_quadrature_2d(k, delta, scale * n_g * n_g, scale * n_h * n_h)?
            .with_rule(params.rule);
        let series = J2Series::new(&table, &plan)?;
        let value = prefactor * riemann_2d(|y, z| Ok(series.eval(y, z)), &quad)?;
        let per_node = weight * (params.tau * (1.0 + params.tau) + plan.rounding_bound() * (plan.order as f64 + 2.0))
            + (weight + params.tau) * F64_UNIT;
        let summation = (quad.nodes() as f64 + 2.0) * F64_UNIT * (weight + params.tau);
        Ok(ComponentReport {
            component,
            value,
            terms: terms.len(),
            series_error: prefactor * kv * kv * (per_node + summation),
            quadrature_error: quad.certified_error,
            series: plan,
            quadrature: quad,
        })
    } else {
        let quad = plan_quadrature(k, delta, scale * n_g * n_g)?.with_rule(params.rule);
        let series = J1Series::new(&table, &plan)?;
        let value = prefactor * riemann_1d(|y| Ok(series.eval(y)), &quad)?;
        let per_node = weight * (params.tau + plan.rounding_bound()) + (weight + params.tau) * F64_UNIT;
        let summation = (quad.nodes() as f64 + 2.0) * F64_UNIT * (weight + params.tau);
        Ok(ComponentReport {
            component,
            value,
            terms: terms.len(),
            series_error: prefactor * kv * (per_node + summation),
            quadrature_error: quad.certified_error,
            series: plan,
            quadrature: quad,
        })
    }
}

/// `√n·(√n/2 + ‖C − ½·1‖)`, an upper bound on `vol(conv(C, 𝓤))`.
pub fn prism_bound(center: &[Rational]) -> f64 {
    let n = center.len() as f64;
    let mut dist2 = Rational::new();
    for c in center {
        dist2 += (Rational::from(c - Rational::from((1, 2)))).square();
    }
    n.sqrt() * (n.sqrt() / 2.0 + dist2.to_f64().sqrt())
}

/// `n/(√(2n−1)·K) · Σ_i prism_bound(C_i)` for ball constraints whose centers
/// are at distance at least 1 from the cube.
pub fn ball_error_bound(problem: &ClippedCubeProblem, k: Sharpness) -> Result<f64> {
    if problem.constraints().is_empty() {
        return Err(Error::NotApplicable("no constraints".into()));
    }
    let mut total = 0.0;
    for (i, c) in problem.constraints().iter().enumerate() {
        let ConstraintKind::Ball { center, .. } = c.kind() else {
            return Err(Error::NotApplicable(format!("constraint {i} is not a ball")));
        };
        let d2 = min_cube_distance_squared(center);
        if d2 < 1 {
            return Err(Error::NotApplicable(format!(
                "ball {i} center is at distance {:.6} < 1 from the cube",
                d2.to_f64().sqrt()
            )));
        }
        total += prism_bound(center);
    }
    let n = problem.dimension() as f64;
    Ok(n / ((2.0 * n - 1.0).sqrt() * k.value()) * total)
}
