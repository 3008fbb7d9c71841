mod common;

use std::fs;

use common::corpus::{run, sabotage, OPAQUE};
use tempfile::TempDir;

fn scratch() -> TempDir {
    tempfile::tempdir().unwrap()
}

fn compile_into(dir: &TempDir, file: &str, args: &[&str]) {
    let c = run(dir.path(), args);
    assert_eq!(c.code, 0, "{}", c.stderr);
    fs::write(dir.path().join(file), c.stdout).unwrap();
}

#[test]
fn eval_examples() {
    let d = scratch();
    let c = run(d.path(), &["eval", "1/x", "--var", "x=1/2", "--t", "9"]);
    assert_eq!((c.code, c.stdout.as_str()), (0, "2 (± 1/10)\n"));
    let c = run(d.path(), &["eval", "x", "--var", "x=0", "--t", "5"]);
    assert_eq!((c.code, c.stdout.as_str()), (0, "0 (± 1/6)\n"));
    let c = run(d.path(), &["eval", "exp(ln(2))", "--eps", "1/1000"]);
    assert_eq!(c.code, 0);
    assert!(c.stdout.contains("(± 1/1000"), "{}", c.stdout);
    let value: f64 = c.stdout.split_whitespace().next().unwrap().parse().unwrap();
    assert!((value - 2.0).abs() < 1e-3);
}

#[test]
fn eps_is_t() {
    let d = scratch();
    for (expr, x) in [("1/x", "3/7"), ("sqrt(x)", "5"), ("sin(x)*x", "-2/3")] {
        let var = format!("x={x}");
        for t in [0u64, 9, 41] {
            let eps = format!("1/{}", t + 1);
            let ts = t.to_string();
            let a = run(d.path(), &["eval", expr, "--var", &var, "--t", &ts]);
            let b = run(d.path(), &["eval", expr, "--var", &var, "--eps", &eps, "--format", "rational"]);
            assert_eq!(a, b, "{expr} at t={t}");
        }
    }
}

#[test]
fn trace_lines() {
    let d = scratch();
    let c = run(d.path(), &["eval", "1/x", "--var", "x=1/2", "--t", "9", "--trace"]);
    assert_eq!(c.code, 0);
    let lines: Vec<&str> = c.stdout.lines().collect();
    assert_eq!(lines[0], "node=0 s=2 d0=2 d=179");
    assert!(lines[1].starts_with("node=1 s=0"));
    assert_eq!(*lines.last().unwrap(), "2 (± 1/10)");
}

#[test]
fn exit_codes() {
    let d = scratch();
    assert_eq!(run(d.path(), &["eval", "(x", "--t", "3"]).code, 1);
    assert_eq!(run(d.path(), &["eval", "x", "--var", "x=1"]).code, 1);
    assert_eq!(run(d.path(), &["eval", "x", "--var", "x=1", "--t", "1", "--eps", "1/2"]).code, 1);
    assert_eq!(run(d.path(), &["eval", "x", "--var", "x=1", "--eps", "0"]).code, 1);
    assert_eq!(run(d.path(), &["eval", "x", "--var", "x=1", "--t", "1", "--format", "hex"]).code, 1);
    assert_eq!(run(d.path(), &["frobnicate"]).code, 1);
    assert_eq!(run(d.path(), &["--help"]).code, 0);
    assert_eq!(run(d.path(), &["translate", "normalize", "missing.sexp", "out.sexp"]).code, 1);

    let c = run(d.path(), &["eval", "x + y", "--var", "x=1", "--t", "3"]);
    assert_eq!(c.code, 2);
    assert!(c.stderr.contains('y'));

    let c = run(d.path(), &["eval", "ln(x)", "--var", "x=0", "--t", "3", "--budget", "300"]);
    assert_eq!(c.code, 3);
    assert!(c.stderr.contains("node=0 (ln)") && c.stderr.contains("s=0..=300"), "{}", c.stderr);
    let c = run(d.path(), &["eval", "2 + 1/(x - 1)", "--var", "x=1", "--t", "3", "--budget", "300"]);
    assert_eq!(c.code, 3);
    assert!(c.stderr.contains("(recip)"), "{}", c.stderr);

    fs::write(d.path().join("opaque.sexp"), OPAQUE).unwrap();
    let c = run(d.path(), &["translate", "unif-to-tz", "opaque.sexp", "opaque.tz"]);
    assert_eq!(c.code, 4, "{}", c.stderr);
    assert!(c.stderr.contains("twice"));
}

#[test]
fn decimal_format() {
    let d = scratch();
    let c = run(d.path(), &["eval", "x", "--var", "x=-2/3", "--t", "99", "--format", "decimal:4"]);
    assert_eq!(c.stdout, "-0.6700 (± 1/100, rounded to 4 places)\n");
    let c = run(d.path(), &["eval", "x", "--var", "x=1/3", "--eps", "1/10"]);
    assert_eq!(c.stdout, "0.30 (± 1/10, rounded to 2 places)\n");
}

#[test]
fn translate_round_trips_through_files() {
    let d = scratch();
    compile_into(&d, "recip.sexp", &["compile", "1/x"]);
    compile_into(&d, "add.sexp", &["compile", "--uniform", "x+y"]);
    for (dir, input, output) in [
        ("cond-to-tz", "recip.sexp", "recip.tz"),
        ("tz-to-cond", "recip.tz", "recip-back.sexp"),
        ("normalize", "recip.sexp", "recip-norm.sexp"),
        ("unif-to-tz", "add.sexp", "add.tz"),
        ("tz-to-unif", "add.tz", "add-back.sexp"),
        ("unif-to-cond", "add.sexp", "add-cond.sexp"),
    ] {
        let c = run(d.path(), &["translate", dir, input, output]);
        assert_eq!(c.code, 0, "{dir}: {}", c.stderr);
        let side = fs::read_to_string(d.path().join(format!("{output}.provenance.json"))).unwrap();
        assert!(side.contains("\"kind\""), "{side}");
    }
    let side = fs::read_to_string(d.path().join("recip.tz.provenance.json")).unwrap();
    assert!(side.contains("d(s,t) = 6 w'(s,t) + 5"));

    // integer points have a single special name per level, so the prefix tree is a path
    for file in ["recip-back.sexp", "recip-norm.sexp"] {
        let c = run(d.path(), &["bound", file, "--point", "2"]);
        assert_eq!(c.code, 0, "{file}: {}", c.stderr);
        assert!(c.stdout.starts_with("T = 0\n"), "{file}: {}", c.stdout);
    }
    assert_eq!(run(d.path(), &["translate", "tz-to-unif", "recip.tz", "x"]).code, 1);
    assert_eq!(run(d.path(), &["translate", "cond-to-tz", "add.tz", "x"]).code, 1);
}

#[test]
fn bound_outputs() {
    let d = scratch();
    compile_into(&d, "recip.sexp", &["compile", "1/x"]);
    compile_into(&d, "inc.sexp", &["compile", "--uniform", "x+1"]);
    let c = run(d.path(), &["bound", "recip.sexp", "--point", "1/2"]);
    assert_eq!(c.code, 0);
    assert!(c.stdout.starts_with("T = 3\ndepth = "), "{}", c.stdout);
    assert!(c.stdout.contains("branches = "));
    let c = run(d.path(), &["bound", "inc.sexp", "--point", "1/2"]);
    assert!(c.stdout.starts_with("T = 0\n"), "{}", c.stdout);
    let c = run(d.path(), &["bound", "recip.sexp", "--point", "0"]);
    assert_eq!(c.code, 3, "{}", c.stderr);
    assert_eq!(run(d.path(), &["bound", "recip.sexp", "--point", "1/2,1"]).code, 1);
}

#[test]
fn check_outcomes() {
    let d = scratch();
    compile_into(&d, "recip.sexp", &["compile", "1/x"]);
    assert_eq!(run(d.path(), &["translate", "cond-to-tz", "recip.sexp", "recip.tz"]).code, 0);

    let c = run(d.path(), &["check", "recip.tz", "--point", "1/2", "--expect", "1/x", "--samples", "60"]);
    assert_eq!(c.code, 0, "{}", c.stderr);
    assert!(c.stdout.trim_end().ends_with("0 violations"), "{}", c.stdout);
    assert!(!d.path().join("recip.tz.replay.json").exists());

    let c = run(d.path(), &["check", "recip.tz", "--point", "2", "--expect", "1/x", "--samples", "0"]);
    assert_eq!(c.code, 0);
    assert_eq!(c.stdout, "check at (2)\nsamples=0 seed=0 t_max=50\n0 violations\n");

    sabotage(d.path());
    let c = run(d.path(), &["check", "bad.tz", "--point", "1/2", "--expect", "1/x", "--samples", "60"]);
    assert_eq!(c.code, 5);
    assert!(c.stdout.contains("violation precision"), "{}", c.stdout);
    let replay = fs::read_to_string(d.path().join("bad.tz.replay.json")).unwrap();
    assert!(replay.contains("\"kind\": \"precision\""));

    let c = run(
        d.path(),
        &["check", "bad.tz", "--point", "1/2", "--expect", "1/x", "--samples", "60", "--replay", "r.json"],
    );
    assert_eq!(c.code, 5);
    assert_eq!(fs::read_to_string(d.path().join("r.json")).unwrap(), replay);
}

#[test]
fn check_with_transcendental_target() {
    let d = scratch();
    compile_into(&d, "exp.sexp", &["compile", "exp(x)"]);
    assert_eq!(run(d.path(), &["translate", "cond-to-tz", "exp.sexp", "exp.tz"]).code, 0);
    let c = run(d.path(), &["check", "exp.tz", "--point", "1/3", "--expect", "exp(x)", "--samples", "30", "--t-max", "20"]);
    assert_eq!(c.code, 0, "{}{}", c.stdout, c.stderr);
}

#[test]
fn parse_base_prints_arity() {
    let d = scratch();
    let c = run(d.path(), &["parse-base", "(subst (mul) (proj 2 1) (subst (succ) (proj 2 2)))"]);
    assert_eq!(c.code, 0);
    assert!(c.stdout.ends_with("arity=2\n"), "{}", c.stdout);
    assert_eq!(run(d.path(), &["parse-base", "(proj 2 3)"]).code, 1);
}
