use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num::{BigInt, BigRational, One};

use condreal::base_dsl::parse_base_function;
use condreal::elementary::reference::enclose_expr;
use condreal::elementary::{parse_expression, Compiled};
use condreal::names::parse_rational;
use condreal::systems::DEFAULT_BUDGET;
use condreal::translations::{provenance_json, write_document};
use condreal::tz::Witness;
use condreal::{
    check_tz_conditional_at_point, compute_search_bound, load_document, normalize_system, operators_to_tz_conditional,
    operators_to_tz_uniform, tz_to_operators_conditional, tz_to_operators_uniform, CheckConfig, ConditionalSystem,
    Error, Nat, Object, RealName, System, Target,
};

mod format;

use format::{eps_to_t, render, Format};

#[derive(Parser, Debug)]
#[command(name = "condreal", version, about = "Exact real evaluation with conditional computing systems")]
struct Cli {
    /// Output precision index: results are within 1/(t+1).
    #[arg(long, global = true, conflicts_with = "eps")]
    t: Option<u64>,
    /// Output precision as a positive rational; uses the least t with 1/(t+1) <= eps.
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Largest parameter scanned when searching for s.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// `rational` or `decimal:D`; defaults to decimal under `--eps`.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Print the parameter and read indices of every subexpression.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an expression at rational arguments.
    Eval {
        #[arg(allow_hyphen_values = true)]
        expr: String,
        /// Binding NAME=RATIONAL; repeatable.
        #[arg(long = "var", value_name = "NAME=Q")]
        vars: Vec<String>,
    },
    /// Translate between systems and witnesses.
    Translate {
        direction: Direction,
        input: PathBuf,
        output: PathBuf,
    },
    /// Search bound over special names at a rational point.
    Bound {
        file: PathBuf,
        /// Comma-separated rationals.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Normalize the system through K first.
        #[arg(long)]
        normalize: bool,
    },
    /// Sample the premises of a conditional witness and report violations.
    Check {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Expression for the expected value; its variables take the point's
        /// coordinates in order of first appearance.
        #[arg(long)]
        expect: String,
        #[arg(long, default_value_t = 50)]
        t_max: u64,
        #[arg(long, default_value_t = 200)]
        samples: u64,
        /// Where to write the replay file when violations are found.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Parse a base function and print it with its arity.
    ParseBase { text: String },
    /// Print the conditional system compiled from an expression.
    Compile {
        expr: String,
        /// Print a uniform system; fails if some subexpression needs a parameter search.
        #[arg(long)]
        uniform: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Direction {
    CondToTz,
    TzToCond,
    UnifToTz,
    TzToUnif,
    UnifToCond,
    Normalize,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure { code, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::UnboundVariable(_) => 2,
            Error::BudgetExhausted { .. } => 3,
            Error::MissingMajorant(_) => 4,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Eval { expr, vars } => eval(cli, expr, vars),
        Command::Translate { direction, input, output } => translate(*direction, input, output),
        Command::Bound { file, point, normalize } => bound(cli, file, point, *normalize),
        Command::Check { file, point, expect, t_max, samples, replay } => {
            check(cli, file, point, expect, *t_max, *samples, replay.as_deref())
        }
        Command::ParseBase { text } => {
            let f = parse_base_function(text)?;
            println!("{f}");
            println!("arity={}", f.arity());
            Ok(())
        }
        Command::Compile { expr, uniform } => {
            let e = parse_expression(expr)?;
            let c = Compiled::new(&e, &e.variables())?;
            if *uniform {
                let u = c.system.as_uniform().ok_or_else(|| Failure::new(1, format!("`{expr}` is not uniform")))?;
                println!("{u}");
            } else {
                println!("{}", c.system);
            }
            Ok(())
        }
    }
}

fn precision(cli: &Cli) -> std::result::Result<Nat, Failure> {
    match (&cli.t, &cli.eps) {
        (Some(t), None) => Ok(Nat::from(*t)),
        (None, Some(eps)) => {
            let eps = parse_rational(eps)?;
            eps_to_t(&eps).ok_or_else(|| Failure::new(1, "--eps must be positive"))
        }
        _ => Err(Failure::new(1, "exactly one of --t and --eps is required")),
    }
}

fn parse_binding(text: &str) -> std::result::Result<(String, BigRational), Failure> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| Failure::new(1, format!("binding `{text}` is not NAME=RATIONAL")))?;
    Ok((name.trim().to_string(), parse_rational(value.trim())?))
}

fn eval(cli: &Cli, expr: &str, bindings: &[String]) -> Outcome {
    let t = precision(cli)?;
    let format = Format::parse(cli.format.as_deref(), &t, cli.eps.is_some()).map_err(|m| Failure::new(1, m))?;
    let e = parse_expression(expr)?;
    let bound: Vec<(String, BigRational)> = bindings.iter().map(|b| parse_binding(b)).collect::<Result<_, _>>()?;
    let vars = e.variables();
    let mut names = Vec::with_capacity(vars.len());
    for v in &vars {
        let (_, value) = bound
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .ok_or_else(|| Failure::new(2, format!("unbound variable `{v}`")))?;
        names.push(RealName::canonical(value));
    }
    let compiled = Compiled::new(&e, &vars)?;
    if cli.trace {
        match compiled.trace(&names, &t, cli.budget) {
            Ok(lines) => lines.iter().for_each(|l| println!("{l}")),
            Err(stuck) => {
                return Err(Failure::new(
                    3,
                    format!(
                        "budget exhausted at node={} ({}): no parameter in s=0..={}",
                        stuck.node, stuck.label, stuck.budget
                    ),
                ))
            }
        }
    }
    match compiled.eval(&names, &t, cli.budget) {
        Ok(out) => {
            println!("{}", render(&out.value(), &t, &format));
            Ok(())
        }
        Err(Error::BudgetExhausted { budget, .. }) => {
            let msg = match compiled.trace(&names, &t, budget) {
                Err(stuck) => format!(
                    "budget exhausted at node={} ({}): no parameter in s=0..={}",
                    stuck.node, stuck.label, budget
                ),
                Ok(_) => format!("budget exhausted: no parameter in s=0..={budget}"),
            };
            Err(Failure::new(3, msg))
        }
        Err(e) => Err(e.into()),
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

fn wrong_kind(expected: &str) -> Failure {
    Failure::new(1, format!("input is not a {expected}"))
}

fn translate(direction: Direction, input: &Path, output: &Path) -> Outcome {
    let doc = load_document(&read(input)?)?;
    let last = doc.last().expect("documents are non-empty").clone();
    let prelude = doc.prelude();
    let everything: Vec<String> = doc.objects.iter().map(Object::to_string).collect();
    // a parameter-free conditional system counts as uniform
    let last = match last {
        Object::System(System::Conditional(sys))
            if matches!(direction, Direction::UnifToTz | Direction::UnifToCond) =>
        {
            sys.as_uniform().map_or(Object::System(System::Conditional(sys)), |u| Object::System(System::Uniform(u)))
        }
        other => other,
    };
    let (forms, obj) = match (direction, last) {
        (Direction::CondToTz, Object::System(System::Conditional(sys))) => {
            let w = Object::Witness(Witness::Conditional(operators_to_tz_conditional(&sys, None)?.witness));
            (prelude, w)
        }
        (Direction::UnifToTz, Object::System(System::Uniform(sys))) => {
            let w = Object::Witness(Witness::Uniform(operators_to_tz_uniform(&sys, None)?.witness));
            (prelude, w)
        }
        (Direction::TzToCond, Object::Witness(Witness::Conditional(w))) => {
            (everything, Object::System(System::Conditional(tz_to_operators_conditional(&w)?)))
        }
        (Direction::TzToUnif, Object::Witness(Witness::Uniform(w))) => {
            (everything, Object::System(System::Uniform(tz_to_operators_uniform(&w)?)))
        }
        (Direction::UnifToCond, Object::System(System::Uniform(sys))) => {
            (prelude, Object::System(System::Conditional(ConditionalSystem::from_uniform(&sys))))
        }
        (Direction::Normalize, Object::System(System::Conditional(sys))) => {
            (prelude, Object::System(System::Conditional(normalize_system(&sys)?)))
        }
        (Direction::CondToTz | Direction::Normalize, _) => return Err(wrong_kind("conditional system")),
        (Direction::UnifToTz | Direction::UnifToCond, _) => return Err(wrong_kind("uniform system")),
        (Direction::TzToCond, _) => return Err(wrong_kind("conditional witness")),
        (Direction::TzToUnif, _) => return Err(wrong_kind("uniform witness")),
    };
    let mut forms = forms;
    forms.push(obj.to_string());
    write(output, &write_document(&forms))?;
    write(&sidecar(output), &(provenance_json(&obj) + "\n"))
}

fn parse_point(text: &str) -> std::result::Result<Vec<BigRational>, Failure> {
    text.split(',').map(|x| parse_rational(x.trim()).map_err(Failure::from)).collect()
}

fn conditional_of(obj: &Object) -> std::result::Result<ConditionalSystem, Failure> {
    match obj {
        Object::System(System::Conditional(s)) => Ok(s.clone()),
        Object::System(System::Uniform(s)) => Ok(ConditionalSystem::from_uniform(s)),
        Object::Witness(Witness::Conditional(w)) => Ok(tz_to_operators_conditional(w)?),
        Object::Witness(Witness::Uniform(_)) | Object::Native(_) => Err(wrong_kind("conditional system")),
    }
}

fn bound(cli: &Cli, file: &Path, point: &str, normalize: bool) -> Outcome {
    let doc = load_document(&read(file)?)?;
    let mut sys = conditional_of(doc.last().expect("documents are non-empty"))?;
    if normalize {
        sys = normalize_system(&sys)?;
    }
    let point = parse_point(point)?;
    let b = compute_search_bound(&sys, &point, cli.budget)?;
    println!("T = {}", b.t);
    println!("depth = {}", b.depth);
    println!("branches = {}", b.branches);
    println!("evaluations = {}", b.evaluations);
    Ok(())
}

fn expected_value(expect: &str, point: &[BigRational], t_max: u64) -> std::result::Result<Target, Failure> {
    let e = parse_expression(expect)?;
    let vars = e.variables();
    if vars.len() > point.len() {
        return Err(Failure::new(2, format!("`{expect}` has more variables than the point has coordinates")));
    }
    let env = |v: &str| vars.iter().position(|x| x == v).map(|i| point[i].clone());
    if let Some(v) = e.eval_rational(&env) {
        return Ok(Target::Exact(v));
    }
    let width = BigRational::new(BigInt::one(), BigInt::from(1000u32) * BigInt::from(t_max + 1));
    match enclose_expr(&e, &env, &width, 1 << 16)? {
        Some((lo, hi)) => Ok(Target::Enclosure(lo, hi)),
        None => Err(Failure::new(1, format!("`{expect}` has no value at the point"))),
    }
}

fn check(
    cli: &Cli,
    file: &Path,
    point: &str,
    expect: &str,
    t_max: u64,
    samples: u64,
    replay: Option<&Path>,
) -> Outcome {
    let doc = load_document(&read(file)?)?;
    let Some(Object::Witness(Witness::Conditional(w))) = doc.last() else {
        return Err(wrong_kind("conditional witness"));
    };
    let point = parse_point(point)?;
    let target = expected_value(expect, &point, t_max)?;
    let config = CheckConfig { t_max, samples, seed: cli.seed, ..CheckConfig::default() };
    let report = check_tz_conditional_at_point(w, &point, &target, &config)?;
    println!("{report}");
    if report.is_clean() {
        return Ok(());
    }
    let path = replay.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut s = file.as_os_str().to_owned();
        s.push(".replay.json");
        PathBuf::from(s)
    });
    write(&path, &(report.replay_json(w) + "\n"))?;
    Err(Failure::new(5, format!("{} violations; replay written to {}", report.violations.len(), path.display())))
}
