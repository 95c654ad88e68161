//! Exact number ingestion and small integer helpers shared by the modules.

use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// Parses an exact rational from a decimal string (`"-1.5"`, `"2.2e-3"`),
/// an integer, or a fraction `"p/q"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::InvalidInput(format!("malformed number '{text}'"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_integer(num.trim()).ok_or_else(bad)?;
        let den = parse_integer(den.trim()).ok_or_else(bad)?;
        if den == 0 {
            return Err(Error::InvalidInput(format!("zero denominator in '{text}'")));
        }
        return Ok(Rational::from((num, den)));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from(Integer::from_str_radix(&all_digits, 10).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    if scale >= 0 {
        value *= Integer::from(Integer::u_pow_u(10, scale as u32));
    } else {
        value /= Integer::from(Integer::u_pow_u(10, (-scale) as u32));
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

fn parse_integer(s: &str) -> Option<Integer> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Integer::from_str_radix(s, 10).ok()
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(value: &Rational) -> String {
    if *value.denom() == 1 {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Rounds a rational to the nearest `f64` and nudges it outward so the result
/// is an upper bound on `|value|`.
pub(crate) fn abs_upper_f64(value: &Rational) -> f64 {
    let v = value.to_f64().abs();
    if v == 0.0 && *value != 0 {
        f64::MIN_POSITIVE
    } else {
        next_up(v)
    }
}

pub(crate) fn next_up(v: f64) -> f64 {
    if v.is_nan() || v == f64::INFINITY {
        return v;
    }
    if v == 0.0 {
        return f64::from_bits(1);
    }
    let bits = v.to_bits();
    if v > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// Row `n` of Pascal's triangle, built by iterating the rows.
pub(crate) fn pascal_rows(max: usize) -> Vec<Vec<Integer>> {
    let mut rows: Vec<Vec<Integer>> = Vec::with_capacity(max + 1);
    rows.push(vec![Integer::from(1)]);
    for n in 1..=max {
        let prev = &rows[n - 1];
        let mut row = Vec::with_capacity(n + 1);
        row.push(Integer::from(1));
        for k in 1..n {
            row.push(Integer::from(&prev[k - 1] + &prev[k]));
        }
        row.push(Integer::from(1));
        rows.push(row);
    }
    rows
}

pub(crate) fn binomial(n: u32, k: u32) -> Integer {
    Integer::from(Integer::binomial_u(n, k))
}
