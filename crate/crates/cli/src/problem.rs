//! Problem files.
//!
//! ```text
//! # comments run to the end of the line
//! dimension = 4
//!
//! [ball]
//! center = -3/2, 0.5, 0.5, 0.5
//! radius = 2.2
//!
//! [halfspace]
//! normal = 1, 1, 0, 0
//! offset = 1
//!
//! [generic]
//! # coefficient lists in ascending powers, one per coordinate
//! coefficients = 0, 1; 0, 0, 1; 0; 0
//! offset = 1
//! ```
//!
//! Numbers are decimals (`0.5`, `2.2e-3`) or fractions (`p/q`) and are read
//! exactly. Each section adds one constraint `Σ a_i(x_i) ≤ b`.

use std::fmt::Write as _;

use clipcube::numeric::{format_rational, parse_rational};
use clipcube::{ClippedCubeProblem, ConstraintKind, SeparableConstraint, UnivariatePolynomial};
use rug::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, field '{field}': {message}")]
pub struct ParseError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

fn err(line: usize, field: &str, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SectionKind {
    Ball,
    HalfSpace,
    Generic,
}

struct Section {
    kind: SectionKind,
    line: usize,
    fields: Vec<(String, String, usize)>,
}

impl Section {
    fn take(&self, name: &str) -> Result<(&str, usize), ParseError> {
        self.fields
            .iter()
            .find(|(k, _, _)| k == name)
            .map(|(_, v, l)| (v.as_str(), *l))
            .ok_or_else(|| err(self.line, name, "missing field"))
    }
}

fn number(text: &str, line: usize, field: &str) -> Result<Rational, ParseError> {
    parse_rational(text).map_err(|e| err(line, field, e.to_string()))
}

fn list(text: &str, line: usize, field: &str) -> Result<Vec<Rational>, ParseError> {
    text.split(',').map(|t| number(t, line, field)).collect()
}

fn sized(
    values: Vec<Rational>,
    n: usize,
    line: usize,
    field: &str,
) -> Result<Vec<Rational>, ParseError> {
    if values.len() != n {
        return Err(err(
            line,
            field,
            format!("expected {n} entries for dimension {n}, got {}", values.len()),
        ));
    }
    Ok(values)
}

fn build(section: &Section, n: usize) -> Result<SeparableConstraint, ParseError> {
    let known: &[&str] = match section.kind {
        SectionKind::Ball => &["center", "radius"],
        SectionKind::HalfSpace => &["normal", "offset"],
        SectionKind::Generic => &["coefficients", "offset"],
    };
    for (k, _, l) in &section.fields {
        if !known.contains(&k.as_str()) {
            return Err(err(*l, k, "unknown field"));
        }
    }
    let engine = |e: clipcube::Error, field: &str| err(section.line, field, e.to_string());
    match section.kind {
        SectionKind::Ball => {
            let (c, cl) = section.take("center")?;
            let center = sized(list(c, cl, "center")?, n, cl, "center")?;
            let (r, rl) = section.take("radius")?;
            let radius = number(r, rl, "radius")?;
            SeparableConstraint::from_ball(&center, &radius).map_err(|e| engine(e, "radius"))
        }
        SectionKind::HalfSpace => {
            let (w, wl) = section.take("normal")?;
            let normal = sized(list(w, wl, "normal")?, n, wl, "normal")?;
            let (b, bl) = section.take("offset")?;
            let offset = number(b, bl, "offset")?;
            SeparableConstraint::from_halfspace(&normal, &offset).map_err(|e| engine(e, "normal"))
        }
        SectionKind::Generic => {
            let (cs, cl) = section.take("coefficients")?;
            let polys = cs
                .split(';')
                .map(|p| {
                    let coeffs = list(p, cl, "coefficients")?;
                    UnivariatePolynomial::new(coeffs).map_err(|e| err(cl, "coefficients", e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if polys.len() != n {
                return Err(err(
                    cl,
                    "coefficients",
                    format!("expected {n} polynomials, got {}", polys.len()),
                ));
            }
            let (b, bl) = section.take("offset")?;
            let offset = number(b, bl, "offset")?;
            SeparableConstraint::generic(polys, offset).map_err(|e| engine(e, "coefficients"))
        }
    }
}

/// Reads a problem file. Constraints come back normalized.
pub fn parse_problem(text: &str) -> Result<ClippedCubeProblem, ParseError> {
    let mut dimension: Option<(usize, usize)> = None;
    let mut sections: Vec<Section> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, "section", "missing ']'"))?
                .trim();
            let kind = match name {
                "ball" => SectionKind::Ball,
                "halfspace" => SectionKind::HalfSpace,
                "generic" => SectionKind::Generic,
                other => return Err(err(line, "section", format!("unknown constraint type '{other}'"))),
            };
            sections.push(Section {
                kind,
                line,
                fields: Vec::new(),
            });
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(line, body, "expected 'key = value'"))?;
        let (key, value) = (key.trim(), value.trim());
        match sections.last_mut() {
            None if key == "dimension" => {
                if dimension.is_some() {
                    return Err(err(line, key, "given twice"));
                }
                let n: usize = value
                    .parse()
                    .map_err(|_| err(line, key, format!("not a positive integer: '{value}'")))?;
                if n == 0 {
                    return Err(err(line, key, "must be positive"));
                }
                dimension = Some((n, line));
            }
            None => return Err(err(line, key, "unknown top-level field")),
            Some(s) => {
                if s.fields.iter().any(|(k, _, _)| k == key) {
                    return Err(err(line, key, "given twice"));
                }
                s.fields.push((key.to_string(), value.to_string(), line));
            }
        }
    }

    let (n, _) = dimension.ok_or_else(|| err(1, "dimension", "missing"))?;
    if sections.len() > 2 {
        return Err(err(
            sections[2].line,
            "section",
            format!("at most two constraints are supported, got {}", sections.len()),
        ));
    }
    let constraints = sections
        .iter()
        .map(|s| build(s, n))
        .collect::<Result<Vec<_>, _>>()?;
    let problem =
        ClippedCubeProblem::new(n, constraints).map_err(|e| err(1, "dimension", e.to_string()))?;
    Ok(problem.normalized())
}

fn join(values: &[Rational]) -> String {
    values.iter().map(format_rational).collect::<Vec<_>>().join(", ")
}

/// Writes a problem back in the file format. Balls and half-spaces are
/// written from their defining data, so `parse_problem` restores them
/// exactly.
pub fn serialize_problem(problem: &ClippedCubeProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dimension = {}", problem.dimension());
    for c in problem.constraints() {
        let _ = writeln!(out);
        match c.kind() {
            ConstraintKind::Ball { center, radius } => {
                let _ = writeln!(out, "[ball]");
                let _ = writeln!(out, "center = {}", join(center));
                let _ = writeln!(out, "radius = {}", format_rational(radius));
            }
            ConstraintKind::HalfSpace { normal, offset } => {
                let _ = writeln!(out, "[halfspace]");
                let _ = writeln!(out, "normal = {}", join(normal));
                let _ = writeln!(out, "offset = {}", format_rational(offset));
            }
            ConstraintKind::Generic => {
                let _ = writeln!(out, "[generic]");
                let polys: Vec<String> = c
                    .per_coordinate()
                    .iter()
                    .map(|p| {
                        if p.is_zero() {
                            "0".to_string()
                        } else {
                            join(p.coefficients())
                        }
                    })
                    .collect();
                let _ = writeln!(out, "coefficients = {}", polys.join("; "));
                let _ = writeln!(out, "offset = {}", format_rational(c.offset()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_example() {
        let p = parse_problem("dimension = 4\n[ball]\ncenter = -1.5, 0.5, 0.5, 0.5\nradius = 2.2\n").unwrap();
        assert_eq!(p.dimension(), 4);
        assert_eq!(p.constraints().len(), 1);
        assert!(p.constraints()[0].is_normalized());
        match p.constraints()[0].kind() {
            ConstraintKind::Ball { center, radius } => {
                assert_eq!(center[0], Rational::from((-3, 2)));
                assert_eq!(*radius, Rational::from((11, 5)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixed_and_too_many() {
        let two = "dimension = 2\n[ball]\ncenter = 0, 0\nradius = 1\n[halfspace]\nnormal = 1, 1\noffset = 1\n";
        assert_eq!(parse_problem(two).unwrap().constraints().len(), 2);
        let three = format!("{two}[halfspace]\nnormal = 1, 0\noffset = 1/2\n");
        let e = parse_problem(&three).unwrap_err();
        assert!(e.message.contains("at most two"), "{e}");
        assert_eq!(e.line, 8);
    }

    #[test]
    fn errors_carry_context() {
        let e = parse_problem("dimension = 2\n[cube]\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (2, "section"));
        let e = parse_problem("dimension = 2\n[ball]\ncenter = 0, x\nradius = 1\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (3, "center"));
        let e = parse_problem("dimension = 3\n[ball]\ncenter = 0, 0\nradius = 1\n").unwrap_err();
        assert!(e.message.contains("expected 3"));
        let e = parse_problem("dimension = 2\n[halfspace]\nnormal = 1, 1\n").unwrap_err();
        assert_eq!(e.field, "offset");
        let e = parse_problem("[ball]\ncenter = 0\nradius = 1\n").unwrap_err();
        assert_eq!(e.field, "dimension");
        let e = parse_problem("dimension = 1\n[ball]\ncenter = 0\nradius = 1\ncolour = red\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (5, "colour"));
    }

    #[test]
    fn generic_round_trip() {
        let text = "dimension = 2 # two\n[generic]\ncoefficients = 0, 1; 1/3, 0, -2\noffset = 1\n";
        let p = parse_problem(text).unwrap();
        assert_eq!(parse_problem(&serialize_problem(&p)).unwrap(), p);
    }
}
