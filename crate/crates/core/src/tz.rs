//! Witnesses in the style of Tent and Ziegler: tuples of base functions
//! acting on rational approximations instead of names.

use std::fmt;

use num::{BigRational, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::base_dsl::{parse_base_sexp, BaseFunction, NativeRegistry};
use crate::error::{Error, Result};
use crate::names::{random_approx_in_ball, RationalApprox, RealName};
use crate::sexp::{parse_one, slots, take_slot, Sexp};
use crate::systems::{parse_system_sexp, System};
use crate::Nat;

/// The system a witness was translated from. Derived natives are rebuilt
/// from it when the witness is read back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub source: System,
    pub prefix: String,
}

/// `(d, f, g, h)`: approximations at index `d(t)` of arguments with
/// `|ξ_i| ≤ t+1` give an output approximation within `1/(t+1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TzUniformWitness {
    pub k: usize,
    pub d: BaseFunction,
    pub f: BaseFunction,
    pub g: BaseFunction,
    pub h: BaseFunction,
    pub origin: Option<Origin>,
}

/// `(d0, d, e, f, g, h)` for a conditionally computable function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TzConditionalWitness {
    pub k: usize,
    pub d0: BaseFunction,
    pub d: BaseFunction,
    pub e: BaseFunction,
    pub f: BaseFunction,
    pub g: BaseFunction,
    pub h: BaseFunction,
    pub origin: Option<Origin>,
}

fn check_arity(label: &str, f: &BaseFunction, arity: usize) -> Result<()> {
    if f.arity() != arity {
        return Err(Error::arity(label, arity, f.arity()));
    }
    Ok(())
}

impl TzUniformWitness {
    pub fn new(k: usize, d: BaseFunction, f: BaseFunction, g: BaseFunction, h: BaseFunction) -> Result<Self> {
        check_arity("witness d", &d, 1)?;
        for (label, c) in [("witness f", &f), ("witness g", &g), ("witness h", &h)] {
            check_arity(label, c, 3 * k + 1)?;
        }
        Ok(TzUniformWitness { k, d, f, g, h, origin: None })
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = Some(origin);
        self
    }
}

impl TzConditionalWitness {
    pub fn new(
        k: usize,
        d0: BaseFunction,
        d: BaseFunction,
        e: BaseFunction,
        f: BaseFunction,
        g: BaseFunction,
        h: BaseFunction,
    ) -> Result<Self> {
        check_arity("witness d0", &d0, 1)?;
        check_arity("witness d", &d, 2)?;
        check_arity("witness e", &e, 3 * k + 1)?;
        for (label, c) in [("witness f", &f), ("witness g", &g), ("witness h", &h)] {
            check_arity(label, c, 6 * k + 2)?;
        }
        Ok(TzConditionalWitness { k, d0, d, e, f, g, h, origin: None })
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = Some(origin);
        self
    }

    /// `e(p⁰…, s)`.
    pub fn accepts(&self, approx0: &[RationalApprox], s: &Nat) -> Result<bool> {
        let mut args = flatten(approx0);
        args.push(s.clone());
        Ok(self.e.eval(&args)?.is_zero())
    }

    /// `(f, g, h)(p⁰…, p…, s, t)`.
    pub fn output(&self, approx0: &[RationalApprox], approx: &[RationalApprox], s: &Nat, t: &Nat) -> Result<RationalApprox> {
        let mut args = flatten(approx0);
        args.extend(flatten(approx));
        args.push(s.clone());
        args.push(t.clone());
        Ok(RationalApprox {
            p: self.f.eval(&args)?,
            q: self.g.eval(&args)?,
            r: self.h.eval(&args)?,
        })
    }

    pub fn d0_at(&self, s: &Nat) -> Result<Nat> {
        self.d0.eval(std::slice::from_ref(s))
    }

    pub fn d_at(&self, s: &Nat, t: &Nat) -> Result<Nat> {
        self.d.eval(&[s.clone(), t.clone()])
    }
}

fn flatten(approx: &[RationalApprox]) -> Vec<Nat> {
    approx.iter().flat_map(|a| [a.p.clone(), a.q.clone(), a.r.clone()]).collect()
}

fn check_names(k: usize, names: &[RealName]) -> Result<()> {
    if names.len() != k {
        return Err(Error::arity("witness arguments", k, names.len()));
    }
    Ok(())
}

fn read_all(names: &[RealName], n: &Nat) -> Vec<RationalApprox> {
    names.iter().map(|x| x.approx(n)).collect()
}

/// `max_i(f_i(0), g_i(0))`, which bounds `|ξ_i| − 1` for every argument.
fn magnitude_bound(names: &[RealName]) -> Nat {
    names
        .iter()
        .map(|x| {
            let a = x.approx(&Nat::zero());
            a.p.max(a.q)
        })
        .max()
        .unwrap_or_default()
}

/// Evaluates a uniform witness on names at precision `t`.
pub fn eval_tz_uniform(w: &TzUniformWitness, names: &[RealName], t: &Nat) -> Result<RationalApprox> {
    check_names(w.k, names)?;
    let t1 = magnitude_bound(names).max(t.clone());
    let idx = w.d.eval(std::slice::from_ref(&t1))?;
    let mut args = flatten(&read_all(names, &idx));
    args.push(t1);
    Ok(RationalApprox {
        p: w.f.eval(&args)?,
        q: w.g.eval(&args)?,
        r: w.h.eval(&args)?,
    })
}

/// Scans `s′ = 0..=budget` for the first `s = max(f_i(0), g_i(0), s′)`
/// accepted by `e` on approximations read at `d0(s)`; returns that `s`.
pub fn find_tz_parameter(w: &TzConditionalWitness, names: &[RealName], budget: u64) -> Result<Nat> {
    check_names(w.k, names)?;
    let base = magnitude_bound(names);
    let last = base.clone().max(Nat::from(budget));
    let mut s = base;
    while s <= last {
        let approx0 = read_all(names, &w.d0_at(&s)?);
        if w.accepts(&approx0, &s)? {
            return Ok(s);
        }
        s += 1u32;
    }
    Err(Error::BudgetExhausted {
        budget,
        context: Some(format!("e never vanished for s up to {last}")),
    })
}

pub fn eval_tz_conditional(w: &TzConditionalWitness, names: &[RealName], t: &Nat, budget: u64) -> Result<RationalApprox> {
    let s = find_tz_parameter(w, names, budget)?;
    eval_tz_conditional_at(w, names, &s, t)
}

/// The output for a given (already accepted) `s`.
pub fn eval_tz_conditional_at(w: &TzConditionalWitness, names: &[RealName], s: &Nat, t: &Nat) -> Result<RationalApprox> {
    check_names(w.k, names)?;
    let approx0 = read_all(names, &w.d0_at(s)?);
    let approx = read_all(names, &w.d_at(s, t)?);
    w.output(&approx0, &approx, s, t)
}

// ---------------------------------------------------------------------------
// text form

fn write_origin(f: &mut fmt::Formatter<'_>, origin: &Option<Origin>) -> fmt::Result {
    if let Some(o) = origin {
        let source = o.source.to_string().replace('\n', "\n  ");
        write!(f, "\n  :source {source}\n  :prefix {}", o.prefix)?;
    }
    Ok(())
}

impl fmt::Display for TzUniformWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(tz-uniform :k {}", self.k)?;
        write_origin(f, &self.origin)?;
        write!(f, "\n  :d {}\n  :f {}\n  :g {}\n  :h {})", self.d, self.f, self.g, self.h)
    }
}

impl fmt::Display for TzConditionalWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(tz-conditional :k {}", self.k)?;
        write_origin(f, &self.origin)?;
        write!(
            f,
            "\n  :d0 {}\n  :d {}\n  :e {}\n  :f {}\n  :g {}\n  :h {})",
            self.d0, self.d, self.e, self.f, self.g, self.h
        )
    }
}

/// Either kind of witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Uniform(TzUniformWitness),
    Conditional(TzConditionalWitness),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Uniform(w) => w.fmt(f),
            Witness::Conditional(w) => w.fmt(f),
        }
    }
}

/// The `:source`/`:prefix` slots of a witness form, if present. The
/// source is parsed against `registry`.
pub fn parse_origin(sexp: &Sexp, registry: &NativeRegistry) -> Result<Option<Origin>> {
    let items = sexp.expect_list("witness")?;
    let slots = slots(&items[1..], sexp.pos())?;
    let source = slots.iter().find(|(l, _)| *l == "source");
    let prefix = slots.iter().find(|(l, _)| *l == "prefix");
    match (source, prefix) {
        (None, None) => Ok(None),
        (Some((_, src)), Some((_, pre))) => Ok(Some(Origin {
            source: parse_system_sexp(src, registry)?,
            prefix: pre.expect_atom("prefix")?.to_string(),
        })),
        _ => Err(Error::syntax(sexp.pos(), "`:source` and `:prefix` go together")),
    }
}

/// Parses a witness form. Natives it names must already be in `registry`.
pub fn parse_witness_sexp(sexp: &Sexp, registry: &NativeRegistry) -> Result<Witness> {
    let items = sexp.expect_list("witness")?;
    let pos = sexp.pos();
    let head = sexp.head().ok_or_else(|| Error::syntax(pos, "expected witness form"))?;
    let slots = slots(&items[1..], pos)?;
    let k = take_slot(&slots, "k", pos)?.expect_usize("k")?;
    let origin = parse_origin(sexp, registry)?;
    let comp = |label: &str, arity: usize| parse_base_sexp(take_slot(&slots, label, pos)?, registry, Some(arity));
    let w = match head {
        "tz-uniform" => {
            let n = 3 * k + 1;
            let mut w = TzUniformWitness::new(k, comp("d", 1)?, comp("f", n)?, comp("g", n)?, comp("h", n)?)?;
            w.origin = origin;
            Witness::Uniform(w)
        }
        "tz-conditional" => {
            let n = 6 * k + 2;
            let mut w = TzConditionalWitness::new(
                k,
                comp("d0", 1)?,
                comp("d", 2)?,
                comp("e", 3 * k + 1)?,
                comp("f", n)?,
                comp("g", n)?,
                comp("h", n)?,
            )?;
            w.origin = origin;
            Witness::Conditional(w)
        }
        other => return Err(Error::syntax(pos, format!("expected `tz-uniform` or `tz-conditional`, found `{other}`"))),
    };
    Ok(w)
}

/// Parses a hand-written witness (no derived natives).
pub fn parse_witness(text: &str) -> Result<Witness> {
    parse_witness_sexp(&parse_one(text)?, NativeRegistry::standard())
}

// ---------------------------------------------------------------------------
// adversarial checking

/// What the checked function's value is known to be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Exact(BigRational),
    /// `lo ≤ θ(ξ⃗) ≤ hi`.
    Enclosure(BigRational, BigRational),
}

enum Verdict {
    Within,
    Outside,
    Unknown,
}

impl Target {
    fn judge(&self, out: &BigRational, t: &Nat) -> Verdict {
        let tol = BigRational::new(1.into(), (t + 1u32).into());
        match self {
            Target::Exact(v) => {
                if (out - v).abs() < tol {
                    Verdict::Within
                } else {
                    Verdict::Outside
                }
            }
            Target::Enclosure(lo, hi) => {
                let far = (out - lo).abs().max((out - hi).abs());
                let near = if out < lo {
                    lo - out
                } else if out > hi {
                    out - hi
                } else {
                    BigRational::zero()
                };
                if far < tol {
                    Verdict::Within
                } else if near >= tol {
                    Verdict::Outside
                } else {
                    Verdict::Unknown
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// `e ≠ 0` for some `s ≥ s₀` and approximations at `d0(s)`.
    Acceptance,
    /// Output outside `1/(t+1)` although every premise holds.
    Precision,
    /// No candidate `s₀` was found within the scan limit.
    NoCandidate,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Acceptance => "acceptance",
            ViolationKind::Precision => "precision",
            ViolationKind::NoCandidate => "no-candidate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub s: Nat,
    pub t: Option<Nat>,
    pub approx0: Vec<RationalApprox>,
    pub approx: Vec<RationalApprox>,
    pub output: Option<RationalApprox>,
}

#[derive(Serialize)]
struct ViolationJson {
    kind: ViolationKind,
    s: String,
    t: Option<String>,
    approx0: Vec<String>,
    approx: Vec<String>,
    output: Option<String>,
}

impl Violation {
    fn json(&self) -> ViolationJson {
        let strs = |v: &[RationalApprox]| v.iter().map(|a| a.to_string()).collect();
        ViolationJson {
            kind: self.kind,
            s: self.s.to_string(),
            t: self.t.as_ref().map(|t| t.to_string()),
            approx0: strs(&self.approx0),
            approx: strs(&self.approx),
            output: self.output.as_ref().map(|o| o.to_string()),
        }
    }

    /// Re-runs the case; `true` when it still violates the contract.
    pub fn reproduces(&self, w: &TzConditionalWitness, target: &Target) -> Result<bool> {
        match self.kind {
            ViolationKind::Acceptance => Ok(!w.accepts(&self.approx0, &self.s)?),
            ViolationKind::Precision => {
                let t = self.t.clone().unwrap_or_default();
                let out = w.output(&self.approx0, &self.approx, &self.s, &t)?;
                Ok(matches!(target.judge(&out.value(), &t), Verdict::Outside))
            }
            ViolationKind::NoCandidate => Ok(true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckConfig {
    pub t_max: u64,
    pub samples: u64,
    pub seed: u64,
    /// Largest `s` tried while estimating `s₀`.
    pub s_limit: u64,
    /// Acceptance is sampled on `s₀..=s₀+s_window`.
    pub s_window: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { t_max: 50, samples: 200, seed: 0, s_limit: 256, s_window: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub point: Vec<BigRational>,
    pub config: CheckConfig,
    pub s0: Option<Nat>,
    pub acceptance_checks: u64,
    pub precision_checks: u64,
    pub inconclusive: u64,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// A replay file: the witness text, the point, the seed and every violation.
    pub fn replay_json(&self, witness: &TzConditionalWitness) -> String {
        let value = serde_json::json!({
            "witness": witness.to_string(),
            "point": self.point.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "seed": self.config.seed,
            "t_max": self.config.t_max,
            "samples": self.config.samples,
            "violations": self.violations.iter().map(Violation::json).collect::<Vec<_>>(),
        });
        serde_json::to_string_pretty(&value).expect("json values serialize")
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let point: Vec<String> = self.point.iter().map(|x| x.to_string()).collect();
        writeln!(f, "check at ({})", point.join(", "))?;
        let c = &self.config;
        writeln!(f, "samples={} seed={} t_max={}", c.samples, c.seed, c.t_max)?;
        match &self.s0 {
            Some(s0) => writeln!(f, "s0 candidate: {s0} (estimated; acceptance for s >= s0 is sampled, not proven)")?,
            None if c.samples == 0 => {}
            None => writeln!(f, "s0 candidate: none up to {}", c.s_limit)?,
        }
        if c.samples > 0 {
            writeln!(
                f,
                "acceptance checks: {}  precision checks: {}  inconclusive: {}",
                self.acceptance_checks, self.precision_checks, self.inconclusive
            )?;
        }
        for v in &self.violations {
            let list = |a: &[RationalApprox]| a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            write!(f, "violation {}: s={}", v.kind, v.s)?;
            if let Some(t) = &v.t {
                write!(f, " t={t}")?;
            }
            write!(f, " approx0=[{}]", list(&v.approx0))?;
            if !v.approx.is_empty() {
                write!(f, " approx=[{}]", list(&v.approx))?;
            }
            if let Some(o) = &v.output {
                write!(f, " output={o}")?;
            }
            writeln!(f)?;
        }
        write!(f, "{} violations", self.violations.len())
    }
}

fn sample_point(point: &[BigRational], n: &Nat, rng: &mut ChaCha8Rng) -> Vec<RationalApprox> {
    point.iter().map(|x| random_approx_in_ball(x, n, rng)).collect()
}

/// Samples premises of both witness conditions at `point` and reports
/// every sampled case whose conclusion fails.
pub fn check_tz_conditional_at_point(
    w: &TzConditionalWitness,
    point: &[BigRational],
    target: &Target,
    config: &CheckConfig,
) -> Result<CheckReport> {
    if point.len() != w.k {
        return Err(Error::arity("check point", w.k, point.len()));
    }
    let mut report = CheckReport {
        point: point.to_vec(),
        config: config.clone(),
        s0: None,
        acceptance_checks: 0,
        precision_checks: 0,
        inconclusive: 0,
        violations: Vec::new(),
    };
    if config.samples == 0 {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // |ξ_i| ≤ s + 1
    let s_min: u64 = point
        .iter()
        .map(|x| {
            let c = x.abs().ceil().to_integer();
            u64::try_from(c).unwrap_or(u64::MAX).saturating_sub(1)
        })
        .max()
        .unwrap_or(0);

    let probe = config.samples.min(16);
    let mut s0 = None;
    for s in s_min..=s_min.max(config.s_limit) {
        let s = Nat::from(s);
        let n = w.d0_at(&s)?;
        let mut ok = true;
        for _ in 0..probe {
            if !w.accepts(&sample_point(point, &n, &mut rng), &s)? {
                ok = false;
                break;
            }
        }
        if ok {
            s0 = Some(s);
            break;
        }
    }
    let Some(s0) = s0 else {
        report.violations.push(Violation {
            kind: ViolationKind::NoCandidate,
            s: Nat::from(config.s_limit),
            t: None,
            approx0: Vec::new(),
            approx: Vec::new(),
            output: None,
        });
        return Ok(report);
    };
    report.s0 = Some(s0.clone());

    for _ in 0..config.samples {
        // condition (1)
        let s = &s0 + rng.gen_range(0..=config.s_window);
        let approx0 = sample_point(point, &w.d0_at(&s)?, &mut rng);
        report.acceptance_checks += 1;
        if !w.accepts(&approx0, &s)? {
            report.violations.push(Violation {
                kind: ViolationKind::Acceptance,
                s,
                t: None,
                approx0,
                approx: Vec::new(),
                output: None,
            });
        }

        // condition (2), for any accepted s with |ξ| ≤ s+1
        let s_hi: u64 = (&s0 + config.s_window).try_into().unwrap_or(u64::MAX);
        let s = Nat::from(rng.gen_range(s_min..=s_hi.max(s_min)));
        let approx0 = sample_point(point, &w.d0_at(&s)?, &mut rng);
        if !w.accepts(&approx0, &s)? {
            continue;
        }
        let t = Nat::from(rng.gen_range(0..=config.t_max));
        let approx = sample_point(point, &w.d_at(&s, &t)?, &mut rng);
        let out = w.output(&approx0, &approx, &s, &t)?;
        report.precision_checks += 1;
        match target.judge(&out.value(), &t) {
            Verdict::Within => {}
            Verdict::Unknown => report.inconclusive += 1,
            Verdict::Outside => report.violations.push(Violation {
                kind: ViolationKind::Precision,
                s,
                t: Some(t),
                approx0,
                approx,
                output: Some(out),
            }),
        }
    }
    Ok(report)
}
