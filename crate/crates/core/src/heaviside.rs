//! Smoothed step functions.
//!
//! `H_K(t) = ½ + (1/√π)∫₀ᴷ t·e^{−(ty)²} dy`, which the substitution `u = ty`
//! turns into `½·(1 + erf(Kt)) = ½·erfc(−Kt)`.

use rug::Float;

use crate::error::{Error, Result};

/// The sharpness `K > 0` of the smoothed step.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Sharpness(f64);

impl Sharpness {
    pub fn new(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sharpness K must be positive and finite, got {k}"
            )));
        }
        Ok(Self(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `erf(x)` rounded to `precision_bits`.
pub fn erf(x: f64, precision_bits: u32) -> Float {
    Float::with_val(precision_bits, x).erf()
}

/// `erfc(x)` rounded to `precision_bits`.
pub fn erfc(x: f64, precision_bits: u32) -> Float {
    Float::with_val(precision_bits, x).erfc()
}

/// `H_K(t)`. Evaluated as `½·erfc(−Kt)` so the lower tail keeps full
/// relative accuracy.
pub fn h_k(t: f64, k: Sharpness) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    let mut v = erfc(-k.0 * t, 64);
    v /= 2;
    v.to_f64()
}

/// The `K → ∞` limit: 0 below zero, ½ at zero, 1 above.
pub fn h_k_limit(t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else if t > 0.0 {
        1.0
    } else {
        0.5
    }
}

/// `L_K(t) = e^{Kt}/(1 + e^{Kt})`.
pub fn logistic(t: f64, k: Sharpness) -> f64 {
    let s = k.0 * t;
    if s > 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `Φ_L(t) = 1/(2 + e^t + e^{−t})`, the derivative of the logistic kernel.
pub fn phi_l(t: f64) -> f64 {
    let a = t.abs();
    // 1/(2 + e^a + e^{-a}) = e^{-a}/(1 + e^{-a})²
    let e = (-a).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `Φ_G(t) = ¼·e^{−t²}`.
pub fn phi_g(t: f64) -> f64 {
    0.25 * (-t * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: f64) -> Sharpness {
        Sharpness::new(v).unwrap()
    }

    #[test]
    fn sharpness_must_be_positive() {
        assert!(Sharpness::new(0.0).is_err());
        assert!(Sharpness::new(-1.0).is_err());
        assert!(Sharpness::new(f64::NAN).is_err());
    }

    #[test]
    fn h_k_examples() {
        assert_eq!(h_k(0.0, k(3.0)), 0.5);
        assert!((h_k(1.0, k(2.0)) - 0.997_661_132_509_476_5).abs() < 1e-15);
        assert!((h_k(-1.0, k(2.0)) - 0.002_338_867_490_523_6).abs() < 1e-15);
    }

    #[test]
    fn limit_examples() {
        assert_eq!(h_k_limit(-3.0), 0.0);
        assert_eq!(h_k_limit(0.0), 0.5);
        assert_eq!(h_k_limit(5.0), 1.0);
    }

    #[test]
    fn logistic_examples() {
        assert_eq!(logistic(0.0, k(1.0)), 0.5);
        assert!(logistic(40.0, k(1.0)) > 1.0 - 1e-15);
        assert!(logistic(1e4, k(1.0)) == 1.0);
        assert!(logistic(-1e4, k(1.0)) == 0.0);
        for i in -50..=50 {
            let t = i as f64 * 0.173;
            assert!((logistic(-t, k(2.5)) - (1.0 - logistic(t, k(2.5)))).abs() < 1e-15);
        }
    }

    #[test]
    fn kernels() {
        assert_eq!(phi_l(0.0), 0.25);
        assert_eq!(phi_g(0.0), 0.25);
        for i in 0..100 {
            let t = i as f64 * 0.07;
            assert_eq!(phi_l(t), phi_l(-t));
            assert_eq!(phi_g(t), phi_g(-t));
            let direct = 1.0 / (2.0 + t.exp() + (-t).exp());
            assert!((phi_l(t) - direct).abs() < 1e-16);
        }
    }

    #[test]
    fn odd_symmetry_and_monotone() {
        for &kv in &[0.5, 1.0, 4.0, 16.0] {
            let mut prev = 0.0;
            for i in -300..=300 {
                let t = i as f64 / 100.0;
                let v = h_k(t, k(kv));
                assert!((v + h_k(-t, k(kv)) - 1.0).abs() <= 1e-14);
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn gap_shrinks_with_k() {
        for &t in &[-0.7, -0.1, 0.05, 0.3, 1.2] {
            let mut prev = f64::INFINITY;
            for kv in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
                let gap = (h_k_limit(t) - h_k(t, k(kv))).abs();
                assert!(gap <= prev);
                prev = gap;
            }
        }
    }

    /// Composite Simpson on `∫₀ᴷ t·e^{−(ty)²} dy`, the integral definition.
    fn h_k_by_quadrature(t: f64, kv: f64) -> f64 {
        let n = 4000;
        let h = kv / n as f64;
        let f = |y: f64| t * (-(t * y) * (t * y)).exp();
        let mut s = f(0.0) + f(kv);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        0.5 + s * h / 3.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn closed_form_matches_integral_definition() {
        for &kv in &[0.5, 1.0, 2.0, 4.0] {
            for &t in &[-2.0, -0.75, -0.1, 0.0, 0.3, 1.0, 1.7] {
                let d = (h_k(t, k(kv)) - h_k_by_quadrature(t, kv)).abs();
                assert!(d < 1e-10, "K={kv} t={t} diff={d}");
            }
        }
    }

    #[test]
    fn tail_integral_closed_form() {
        for &kv in &[1.0, 2.0, 4.0] {
            let upper = 12.0 / kv;
            let n = 20000;
            let h = upper / n as f64;
            let f = |t: f64| 1.0 - h_k(t, k(kv));
            let mut s = f(0.0) + f(upper);
            for i in 1..n {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let integral = s * h / 3.0;
            let closed = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * kv);
            assert!((integral - closed).abs() / closed < 0.01);
        }
    }

    #[test]
    fn erf_precision() {
        let hi = erf(1.0, 256);
        assert_eq!(hi.prec(), 256);
        assert!((hi.to_f64() - 0.842_700_792_949_714_9).abs() < 1e-16);
        assert!((erfc(3.0, 64).to_f64() - 2.209_049_699_858_544e-5).abs() < 1e-19);
    }
}
