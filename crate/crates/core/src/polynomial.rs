//! Exact univariate polynomials over the rationals.
//!
//! Every operation here is exact. Polynomials are only ever integrated or
//! bounded over the unit interval `[0, 1]`, so the bounding helpers are
//! specialised to it.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::{Assign, Rational};

use crate::error::{Error, Result};
use crate::numeric::binomial;

/// Number of equal pieces `[0, 1]` is cut into for Bernstein enclosures.
const ENCLOSURE_PIECES: u32 = 32;

/// A polynomial `c_0 + c_1 x + ... + c_d x^d` with exact rational
/// coefficients. The coefficient list never has trailing zeros, except that
/// the zero polynomial is stored as `[0]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnivariatePolynomial {
    coeffs: Vec<Rational>,
}

impl UnivariatePolynomial {
    /// Builds a polynomial from its coefficients, lowest power first.
    pub fn new(coeffs: Vec<Rational>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        Ok(Self::trimmed(coeffs))
    }

    fn trimmed(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == 0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rational::new());
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::trimmed(coeffs.iter().map(|&c| Rational::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self::trimmed(vec![Rational::new()])
    }

    pub fn one() -> Self {
        Self::constant(Rational::from(1))
    }

    pub fn constant(c: Rational) -> Self {
        Self::trimmed(vec![c])
    }

    /// The identity polynomial `x`.
    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 1
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let mut c = Rational::new();
            if let Some(a) = self.coeffs.get(i) {
                c += a;
            }
            if let Some(b) = other.coeffs.get(i) {
                c += b;
            }
            out.push(c);
        }
        Self::trimmed(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self::trimmed(self.coeffs.iter().map(|c| Rational::from(-c)).collect())
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self::trimmed(
            self.coeffs
                .iter()
                .map(|c| Rational::from(c * factor))
                .collect(),
        )
    }

    pub fn multiply(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Rational::new(); self.coeffs.len() + other.coeffs.len() - 1];
        let mut prod = Rational::new();
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                prod.assign(a * b);
                out[i + j] += &prod;
            }
        }
        Self::trimmed(out)
    }

    /// `self^m` by repeated squaring; `p^0 = 1`.
    pub fn power(&self, m: u32) -> Self {
        let mut result = Self::one();
        let mut base = self.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = result.multiply(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.multiply(&base);
            }
        }
        result
    }

    /// Exact Horner evaluation.
    pub fn evaluate(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    /// `∫₀¹ p(x) dx = Σ c_j / (j + 1)`.
    pub fn integrate_unit(&self) -> Rational {
        let mut sum = Rational::new();
        for (j, c) in self.coeffs.iter().enumerate() {
            if *c != 0 {
                sum += Rational::from(c / (j as u64 + 1));
            }
        }
        sum
    }

    /// `Σ |c_j|`, an upper bound for `max_{x∈[0,1]} |p(x)|`.
    pub fn sup_bound_unit(&self) -> Rational {
        let mut sum = Rational::new();
        for c in &self.coeffs {
            sum += Rational::from(c.abs_ref());
        }
        sum
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::trimmed(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| Rational::from(c * j as u64))
                .collect(),
        )
    }

    /// `q(t) = p(shift + span · t)`.
    pub fn compose_affine(&self, shift: &Rational, span: &Rational) -> Self {
        let inner = Self::trimmed(vec![shift.clone(), span.clone()]);
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.multiply(&inner).add(&Self::constant(c.clone()));
        }
        acc
    }

    /// Polynomial long division: `self = quotient · divisor + remainder`
    /// with `deg(remainder) < deg(divisor)`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        if divisor.is_zero() {
            return Err(Error::InvalidInput("division by the zero polynomial".into()));
        }
        let d = divisor.degree();
        let lead = divisor.coeffs[d].clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= d {
            return Ok((Self::zero(), self.clone()));
        }
        let mut quot = vec![Rational::new(); rem.len() - d];
        for k in (0..quot.len()).rev() {
            let q = Rational::from(&rem[k + d] / &lead);
            if q != 0 {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] -= Rational::from(&q * dc);
                }
            }
            quot[k] = q;
        }
        rem.truncate(d.max(1));
        Ok((Self::trimmed(quot), Self::trimmed(rem)))
    }

    /// Bernstein coefficients of `p` restricted to `[lo, hi]`, in the
    /// degree-`d` basis of that interval.
    pub fn bernstein_coefficients(&self, lo: &Rational, hi: &Rational) -> Vec<Rational> {
        let span = Rational::from(hi - lo);
        let local = self.compose_affine(lo, &span);
        let d = self.degree() as u32;
        let a = &local.coeffs;
        (0..=d)
            .map(|k| {
                let mut b = Rational::new();
                for j in 0..=k {
                    if let Some(aj) = a.get(j as usize) {
                        if *aj != 0 {
                            b += Rational::from((binomial(k, j), binomial(d, j))) * aj;
                        }
                    }
                }
                b
            })
            .collect()
    }

    /// Certified enclosure `[lo, hi] ⊇ { p(x) : x ∈ [0, 1] }` from Bernstein
    /// coefficients on a uniform subdivision.
    pub fn range_enclosure_unit(&self) -> (Rational, Rational) {
        if self.degree() <= 1 {
            let a = self.evaluate(&Rational::new());
            let b = self.evaluate(&Rational::from(1));
            return if a <= b { (a, b) } else { (b, a) };
        }
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for piece in 0..ENCLOSURE_PIECES {
            let a = Rational::from((piece, ENCLOSURE_PIECES));
            let b = Rational::from((piece + 1, ENCLOSURE_PIECES));
            for c in self.bernstein_coefficients(&a, &b) {
                if lo.as_ref().is_none_or(|l| c < *l) {
                    lo = Some(c.clone());
                }
                if hi.as_ref().is_none_or(|h| c > *h) {
                    hi = Some(c);
                }
            }
        }
        (lo.unwrap_or_default(), hi.unwrap_or_default())
    }

    /// Certified upper bound on `∫₀¹ |p(x)| dx`.
    pub fn abs_integral_bound_unit(&self) -> Rational {
        if self.degree() == 0 {
            return Rational::from(self.coeffs[0].abs_ref());
        }
        let d = self.degree() as u64;
        let mut total = Rational::new();
        for piece in 0..ENCLOSURE_PIECES {
            let a = Rational::from((piece, ENCLOSURE_PIECES));
            let b = Rational::from((piece + 1, ENCLOSURE_PIECES));
            for c in self.bernstein_coefficients(&a, &b) {
                total += c.abs();
            }
        }
        total / (Rational::from(d + 1) * ENCLOSURE_PIECES)
    }

    /// Coefficients rounded to `f64`, for fast approximate evaluation.
    pub fn to_f64_coefficients(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64()).collect()
    }
}

/// Horner evaluation of `f64` coefficients.
pub fn horner_f64(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl Default for UnivariatePolynomial {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Display for UnivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if *c == 0 && !(self.is_zero() && j == 0) {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*x")?,
                _ => write!(f, "{c}*x^{j}")?,
            }
        }
        Ok(())
    }
}

impl Add for &UnivariatePolynomial {
    type Output = UnivariatePolynomial;
    fn add(self, rhs: Self) -> UnivariatePolynomial {
        UnivariatePolynomial::add(self, rhs)
    }
}

impl Sub for &UnivariatePolynomial {
    type Output = UnivariatePolynomial;
    fn sub(self, rhs: Self) -> UnivariatePolynomial {
        UnivariatePolynomial::sub(self, rhs)
    }
}

impl Mul for &UnivariatePolynomial {
    type Output = UnivariatePolynomial;
    fn mul(self, rhs: Self) -> UnivariatePolynomial {
        self.multiply(rhs)
    }
}

impl Neg for &UnivariatePolynomial {
    type Output = UnivariatePolynomial;
    fn neg(self) -> UnivariatePolynomial {
        UnivariatePolynomial::neg(self)
    }
}
