use std::path::Path;

use clipcube::{ClippedCubeProblem, SeparableConstraint, UnivariatePolynomial};
use clipcube_cli::{parse_problem, run, serialize_problem};
use proptest::prelude::*;
use rug::Rational;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{report}"))
        .to_string()
}

#[test]
fn volume_on_symmetric_interval() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "half.txt", "dimension = 1\n[halfspace]\nnormal = 1\noffset = 0.5\n");
    let out = run(["clipcube", "volume", "--problem", &f, "--K", "4", "--delta", "1e-3", "--tau", "1e-8"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let t: f64 = value(&out.stdout, "t_of_k").parse().unwrap();
    let err: f64 = value(&out.stdout, "numerical_error").parse().unwrap();
    assert!((t - 0.5).abs() <= err);
    assert!(!out.stdout.contains("wall_time_ms"));

    let timed = run(["clipcube", "--timing", "volume", "--problem", &f, "--K", "1", "--delta", "1e-2", "--tau", "1e-6"]);
    assert!(timed.stdout.contains("wall_time_ms = "));
}

#[test]
fn bound_reports_not_applicable() {
    let dir = tempfile::tempdir().unwrap();
    let near = write(dir.path(), "near.txt", "dimension = 2\n[ball]\ncenter = -0.5, 0.5\nradius = 1\n");
    let out = run(["clipcube", "bound", "--problem", &near, "--K", "2"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("not applicable"));

    let far = write(
        dir.path(),
        "far.txt",
        "dimension = 4\n[ball]\ncenter = -3/2, 1/2, 1/2, 1/2\nradius = 2.2\n",
    );
    let out = run(["clipcube", "bound", "--problem", &far, "--K", "1"]);
    assert_eq!(out.code, 0);
    let b: f64 = value(&out.stdout, "error_bound").parse().unwrap();
    assert!((b - 24.0 / 7f64.sqrt()).abs() < 1e-12);
}

#[test]
fn plot_grid_and_output_file() {
    let out = run(["clipcube", "plot", "--function", "hk", "--K", "1,4,16", "--range", "-3:3:0.01"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "t,value,K");
    assert_eq!(lines.len(), 1 + 3 * 601);
    assert!(lines[1].starts_with("-3.00,") && lines[1].ends_with(",1"));
    assert!(lines.iter().any(|l| l.starts_with("0.00,0.5,")));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phil.csv");
    let p = path.display().to_string();
    let out = run(["clipcube", "plot", "--function", "phil", "--K", "2", "--range", "-1:1:0.5", "--out", &p]);
    assert_eq!(out.code, 0);
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.contains("0.0,0.25,2"));
}

#[test]
fn parse_errors_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "dimension = 2\n[ball]\ncenter = 0, zz\nradius = 1\n");
    let out = run(["clipcube", "mc", "--problem", &bad]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("line 3") && out.stderr.contains("center"), "{}", out.stderr);

    let three = write(
        dir.path(),
        "three.txt",
        "dimension = 1\n[halfspace]\nnormal = 1\noffset = 1\n[halfspace]\nnormal = -1\noffset = 0\n[ball]\ncenter = 0\nradius = 1\n",
    );
    let out = run(["clipcube", "mc", "--problem", &three]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("at most two"));

    assert_eq!(run(["clipcube", "nonsense"]).code, 1);
    assert_eq!(run(["clipcube", "--help"]).code, 0);
}

#[test]
fn solver_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.txt", "dimension = 2\n[halfspace]\nnormal = 1, 1\noffset = 1\n");
    let out = run(["clipcube", "maxdist", "--problem", &tri, "--center", "0,0", "--tol", "0.01"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let r: f64 = value(&out.stdout, "radius").parse().unwrap();
    assert!((r - 1.0).abs() <= 0.01);

    // The certificate at this delta swamps the region volume.
    let out = run([
        "clipcube", "maxdist", "--problem", &tri, "--center", "0,0", "--tol", "0.01", "--oracle", "tk",
        "--K", "1", "--delta", "0.4",
    ]);
    assert_eq!(out.code, 3, "{}{}", out.stdout, out.stderr);
    assert!(out.stderr.contains("iteration 1"));

    let empty = write(dir.path(), "empty.txt", "dimension = 2\n[halfspace]\nnormal = 1, 0\noffset = 0\n");
    let out = run(["clipcube", "maxdist", "--problem", &empty, "--center", "-1,0.5", "--tol", "0.01"]);
    assert_eq!(out.code, 2);
}

#[test]
fn moments_dump() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "g.txt", "dimension = 2\n[generic]\ncoefficients = 0, 1; 0, 1\noffset = 0\n");
    let out = run(["clipcube", "moments", "--problem", &f, "--max-power", "2"]);
    assert_eq!(out.code, 0);
    // ∫(x₁ + x₂)² = 7/6
    assert!(out.stdout.contains("\n2,0,7/6\n"), "{}", out.stdout);
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=8).prop_map(|(n, d)| Rational::from((n, d)))
}

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..=40, 1i64..=8).prop_map(|(n, d)| Rational::from((n, d)))
}

fn constraint(n: usize) -> impl Strategy<Value = SeparableConstraint> {
    let ball = (prop::collection::vec(small_rational(), n), positive_rational())
        .prop_map(|(c, r)| SeparableConstraint::from_ball(&c, &r).unwrap());
    let half = (prop::collection::vec(small_rational(), n), small_rational())
        .prop_map(|(w, b)| SeparableConstraint::from_halfspace(&w, &b).unwrap());
    let generic = (
        prop::collection::vec(prop::collection::vec(small_rational(), 1..4), n),
        small_rational(),
    )
        .prop_map(|(cs, b)| {
            let polys = cs.into_iter().map(|c| UnivariatePolynomial::new(c).unwrap()).collect();
            SeparableConstraint::generic(polys, b).unwrap()
        });
    prop_oneof![ball, half, generic]
}

fn problem() -> impl Strategy<Value = ClippedCubeProblem> {
    (1usize..=4).prop_flat_map(|n| {
        prop::collection::vec(constraint(n), 0..=2)
            .prop_map(move |cs| ClippedCubeProblem::new(n, cs).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialize_then_parse_round_trips(p in problem()) {
        let text = serialize_problem(&p);
        let back = parse_problem(&text).unwrap();
        prop_assert_eq!(&back, &p.normalized());
        prop_assert_eq!(parse_problem(&serialize_problem(&back)).unwrap(), back);
    }
}
