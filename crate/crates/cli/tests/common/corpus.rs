//! The CLI invocation corpus, run in order inside a scratch directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

pub const BIN: &str = env!("CARGO_BIN_EXE_condreal");

/// An uncompiled system whose only native has no majorant.
pub const OPAQUE: &str = "(define-native twice :eval (subst (mul) (proj 1 1) (const 2)))

(uniform-system :k 1
  :F (base (native twice) (apply 1 x))
  :G (apply 2 x)
  :H (apply 3 x))
";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capture {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(dir: &Path, args: &[&str]) -> Capture {
    let out = Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs");
    Capture {
        code: out.status.code().expect("exited normally"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

/// The recip witness with `d` replaced by `t ∸ 1`.
pub fn sabotage(dir: &Path) {
    let text = fs::read_to_string(dir.join("recip.tz")).unwrap();
    let bad: Vec<String> = text
        .lines()
        .map(|l| if l.starts_with("  :d (native") { "  :d (subst (monus) (proj 2 2) (const 1))".to_string() } else { l.to_string() })
        .collect();
    fs::write(dir.join("bad.tz"), bad.join("\n") + "\n").unwrap();
}

/// Fixture-producing steps, then everything else.
pub fn corpus() -> Vec<Vec<&'static str>> {
    let steps: &[&[&str]] = &[
        &["compile", "1/x"],
        &["compile", "--uniform", "x*y"],
        &["compile", "x+1"],
        &["eval", "1/x", "--var", "x=1/2", "--t", "9"],
        &["eval", "x", "--var", "x=0", "--t", "5"],
        &["eval", "exp(ln(2))", "--eps", "1/1000"],
        &["eval", "1/x", "--var", "x=1/2", "--t", "9", "--trace"],
        &["eval", "sqrt(x) + sin(y)", "--var", "x=2", "--var", "y=-1/3", "--t", "99", "--format", "decimal:6"],
        &["eval", "cos(x) * exp(x)", "--var", "x=0.25", "--eps", "1/100", "--format", "rational"],
        &["eval", "y", "--t", "3"],
        &["eval", "1/x", "--var", "x=0", "--t", "3", "--budget", "500"],
        &["eval", "(x", "--t", "3"],
        &["translate", "cond-to-tz", "recip.sexp", "recip.tz"],
        &["translate", "tz-to-cond", "recip.tz", "recip-back.sexp"],
        &["translate", "unif-to-tz", "mul.sexp", "mul.tz"],
        &["translate", "tz-to-unif", "mul.tz", "mul-back.sexp"],
        &["translate", "unif-to-cond", "mul.sexp", "mul-cond.sexp"],
        &["translate", "normalize", "recip.sexp", "recip-norm.sexp"],
        &["translate", "unif-to-tz", "opaque.sexp", "opaque.tz"],
        &["bound", "recip.sexp", "--point", "1/2"],
        &["bound", "inc.sexp", "--point", "1/2"],
        &["bound", "recip.sexp", "--point", "0", "--budget", "2000"],
        &["check", "recip.tz", "--point", "1/2", "--expect", "1/x", "--samples", "40"],
        &["check", "recip.tz", "--point", "-3", "--expect", "1/x", "--samples", "0"],
        &["check", "bad.tz", "--point", "1/2", "--expect", "1/x", "--samples", "40", "--seed", "7"],
        &["parse-base", "(subst (mul) (proj 2 1) (subst (succ) (proj 2 2)))"],
    ];
    steps.iter().map(|s| s.to_vec()).collect()
}

/// Runs the whole corpus in `dir`; returns every capture plus the final
/// contents of every file written.
pub fn run_corpus(dir: &Path) -> (Vec<Capture>, BTreeMap<String, Vec<u8>>) {
    fs::write(dir.join("opaque.sexp"), OPAQUE).unwrap();
    let mut captures = Vec::new();
    for args in corpus() {
        let c = run(dir, &args);
        match (args[0], args[1]) {
            ("compile", "1/x") => fs::write(dir.join("recip.sexp"), &c.stdout).unwrap(),
            ("compile", "--uniform") => fs::write(dir.join("mul.sexp"), &c.stdout).unwrap(),
            ("compile", "x+1") => fs::write(dir.join("inc.sexp"), &c.stdout).unwrap(),
            _ => {}
        }
        if (args[0], args[1]) == ("translate", "cond-to-tz") {
            sabotage(dir);
        }
        captures.push(c);
    }
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        files.insert(entry.file_name().to_string_lossy().into_owned(), fs::read(entry.path()).unwrap());
    }
    (captures, files)
}
