//! `walg`: batch front end for the free-field computations and checks.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage
//! or input errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use walg::coproduct::{
    binomial_identity_check, coassociativity_check, factorization_check, miura_compatibility_check,
    subregular_coproduct_check, SplitReport,
};
use walg::glstruct::{Cut, Pyramid};
use walg::miura::{
    classical_shadow, elementary_symmetric, principal_generators, rectangular_generators, screening_kernel_check,
    subregular_generators, SubregularFamily,
};
use walg::report::{CheckRecord, Report, Status};
use walg::suites::{self, Bounds, TITLES};
use walg::vertexcore::specialize_printed;
use walg::wakimoto::{affine_lift, structural_checks};
use walg::{FieldState, Rational, Scalar, ScalarError};

/// Bound on `N` for the algebraic commands; pyramid combinatorics is unbounded.
const DEFAULT_MAX_N: usize = 8;

#[derive(Parser)]
#[command(name = "walg", version, about = "Exact free-field computations for W-algebras of gl_N")]
struct Cli {
    /// Print one JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Evaluate scalars at this rational level (e.g. 3 or -1/2).
    #[arg(long, global = true, allow_hyphen_values = true)]
    level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rows, numbering, grading and nilpotent element of a pyramid.
    Pyramid {
        #[arg(long)]
        columns: String,
    },
    /// Cut a pyramid after a column and report the pieces and levels.
    Split {
        #[arg(long)]
        columns: String,
        #[arg(long)]
        after: usize,
    },
    /// Wakimoto structure checks and the affine lift.
    Wakimoto {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        columns: String,
        #[arg(long, value_enum, default_value = "all")]
        check: WakimotoCheck,
    },
    /// Quantum Miura generators.
    Miura {
        #[arg(long, value_enum)]
        mode: MiuraMode,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        n1: Option<usize>,
    },
    /// Screening kernel membership of the generators of a pyramid.
    Screen {
        #[arg(long)]
        columns: String,
        #[arg(long)]
        target: Option<String>,
    },
    /// Coproduct checks for a column cut.
    Coproduct {
        #[arg(long)]
        columns: String,
        #[arg(long)]
        after: usize,
        #[arg(long)]
        after2: Option<usize>,
        #[arg(long, value_enum)]
        check: CoproductCheck,
    },
    /// Binomial identity for a given n.
    Binom {
        #[arg(long)]
        n: usize,
    },
    /// Union of the acceptance suites.
    VerifyAll {
        #[arg(long = "max-N", default_value_t = 4)]
        max_n: usize,
        /// Restrict to these criteria (comma separated, 1 to 9).
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WakimotoCheck {
    All,
    Structure,
    Lift,
}

#[derive(Clone, Copy, ValueEnum)]
enum MiuraMode {
    Principal,
    Rectangular,
    Subregular,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoproductCheck {
    Factorization,
    Coassoc,
    Compat,
    Subregular,
}

/// Input and library errors; all map to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl From<walg::Error> for Usage {
    fn from(e: walg::Error) -> Self {
        Usage(e.to_string())
    }
}

impl From<ScalarError> for Usage {
    fn from(e: ScalarError) -> Self {
        Usage(e.to_string())
    }
}

type Res<T> = std::result::Result<T, Usage>;

struct Outcome {
    command: &'static str,
    inputs: Value,
    report: Report,
    data: Value,
}

fn max_n() -> Res<usize> {
    match std::env::var("WALG_MAX_N") {
        Ok(s) => s.trim().parse().map_err(|_| Usage(format!("WALG_MAX_N must be a positive integer, got {s:?}"))),
        Err(_) => Ok(DEFAULT_MAX_N),
    }
}

fn bounded(n: usize) -> Res<()> {
    let m = max_n()?;
    if n > m {
        return Err(Usage(format!("N = {n} exceeds the size bound {m} (set WALG_MAX_N to raise it)")));
    }
    Ok(())
}

fn parse_columns(s: &str) -> Res<Pyramid> {
    Ok(Pyramid::parse(s)?)
}

fn parse_bounded(s: &str) -> Res<Pyramid> {
    let p = parse_columns(s)?;
    bounded(p.n)?;
    Ok(p)
}

fn roots(v: &[(usize, usize)]) -> Vec<String> {
    v.iter().map(|(i, j)| format!("e[{i},{j}]")).collect()
}

fn pyramid_data(p: &Pyramid) -> Value {
    let g = p.grading();
    let mut f: Vec<(usize, usize)> = p.nilpotent_elem().keys().copied().collect();
    f.sort();
    let boxes: Vec<Value> =
        (1..=p.n).map(|i| json!({"box": i, "row": p.row_of(i), "col": p.col_of(i)})).collect();
    let classes: Vec<Value> = p
        .root_classes()
        .iter()
        .map(|c| json!({"root": c.alpha.to_string(), "members": c.members.iter().map(|r| r.to_string()).collect::<Vec<_>>()}))
        .collect();
    json!({
        "columns": p.columns,
        "rows": p.rows,
        "N": p.n,
        "boxes": boxes,
        "degrees": g.degrees,
        "pi0": g.pi0,
        "pi1": g.pi1,
        "nilpotent": roots(&f),
        "jordan_type": p.jordan_type(),
        "orbit_dimension": p.orbit_dimension(),
        "root_classes": classes,
    })
}

fn cmd_pyramid(columns: &str) -> Res<Outcome> {
    let p = parse_columns(columns)?;
    let mut report = Report::new();
    report.push(p.check_root_classes());
    for c in 1..p.columns.len() {
        report.push(p.induced_orbit_check(Cut::AfterColumn(c))?);
    }
    Ok(Outcome { command: "pyramid", inputs: json!({"columns": p.columns}), report, data: pyramid_data(&p) })
}

fn cmd_split(columns: &str, after: usize) -> Res<Outcome> {
    let p = parse_columns(columns)?;
    let (p1, p2, lm) = p.split(after)?;
    let mut report = Report::new();
    report.push(p.induced_orbit_check(Cut::AfterColumn(after))?);
    let [a, b, c] = lm.shifted();
    report.push(
        CheckRecord::from_bool("glstruct.split.levels", json!({"columns": p.columns, "after": after}), lm.consistent())
            .with_ledger("k+N", &a)
            .with_ledger("k1+N1", &b)
            .with_ledger("k2+N2", &c),
    );
    let data = json!({
        "first": {"columns": p1.columns, "rows": p1.rows, "N": p1.n},
        "second": {"columns": p2.columns, "rows": p2.rows, "N": p2.n},
        "levels": {"k": Scalar::k().to_string(), "k1": lm.k1.to_string(), "k2": lm.k2.to_string()},
        "boxes_before": p.boxes_before(after),
    });
    Ok(Outcome { command: "split", inputs: json!({"columns": p.columns, "after": after}), report, data })
}

fn cmd_wakimoto(n: usize, columns: &str, check: WakimotoCheck) -> Res<Outcome> {
    let p = parse_bounded(columns)?;
    if p.n != n {
        return Err(Usage(format!("--N {n} does not match the {} boxes of columns {:?}", p.n, p.columns)));
    }
    let mut report = Report::new();
    let mut data = Map::new();
    if matches!(check, WakimotoCheck::All | WakimotoCheck::Structure) {
        report.extend(structural_checks(&p)?);
    }
    if matches!(check, WakimotoCheck::All | WakimotoCheck::Lift) {
        let lift = affine_lift(&p)?;
        report.extend(lift.audit());
        let mut images = Map::new();
        for (i, j) in p.gl().basis() {
            images.insert(format!("e[{i},{j}]"), Value::String(lift.image(i, j)?.to_string()));
        }
        data.insert("images".into(), Value::Object(images));
        let consts: Map<String, Value> =
            lift.constants.iter().map(|(r, c)| (r.to_string(), Value::String(c.to_string()))).collect();
        data.insert("constants".into(), Value::Object(consts));
    }
    let which = match check {
        WakimotoCheck::All => "all",
        WakimotoCheck::Structure => "structure",
        WakimotoCheck::Lift => "lift",
    };
    Ok(Outcome {
        command: "wakimoto",
        inputs: json!({"N": n, "columns": p.columns, "check": which}),
        report,
        data: Value::Object(data),
    })
}

fn canonical(check: &str, inputs: Value, w: &FieldState) -> CheckRecord {
    CheckRecord::equality(check, inputs, &w.canonical_form(), w)
}

fn cmd_miura(mode: MiuraMode, n: usize, height: Option<usize>, width: Option<usize>, n1: Option<usize>) -> Res<Outcome> {
    bounded(n)?;
    let mut report = Report::new();
    let mut gens = Map::new();
    let inputs;
    match mode {
        MiuraMode::Principal => {
            if height.is_some() || width.is_some() || n1.is_some() {
                return Err(Usage("principal mode takes only --N".into()));
            }
            inputs = json!({"mode": "principal", "N": n});
            let f = principal_generators(n)?;
            for i in 0..=n {
                let w = f.w(i);
                let ins = json!({"N": n, "i": i});
                report.push(canonical("miura.principal.canonical", ins.clone(), &w));
                let sym = elementary_symmetric(&f.h, i)?;
                report.push(CheckRecord::equality("miura.principal.classical_shadow", ins, &classical_shadow(&w), &sym));
                gens.insert(format!("W{i}"), Value::String(w.to_string()));
            }
        }
        MiuraMode::Rectangular => {
            let (Some(h), Some(l)) = (height, width) else {
                return Err(Usage("rectangular mode needs --height and --width".into()));
            };
            if n1.is_some() {
                return Err(Usage("rectangular mode does not take --n1".into()));
            }
            if h * l != n {
                return Err(Usage(format!("--N {n} differs from height*width = {}", h * l)));
            }
            inputs = json!({"mode": "rectangular", "N": n, "height": h, "width": l});
            let f = rectangular_generators(h, l)?;
            for t in 0..=l {
                let m = f.w(t);
                for i in 1..=h {
                    for j in 1..=h {
                        let w = m.entry(i - 1, j - 1);
                        report.push(canonical("miura.rectangular.canonical", json!({"height": h, "width": l, "t": t, "i": i, "j": j}), w));
                        gens.insert(format!("W{t}[{i},{j}]"), Value::String(w.to_string()));
                    }
                }
            }
        }
        MiuraMode::Subregular => {
            let Some(m) = n1 else {
                return Err(Usage("subregular mode needs --n1".into()));
            };
            if height.is_some() || width.is_some() {
                return Err(Usage("subregular mode does not take --height/--width".into()));
            }
            inputs = json!({"mode": "subregular", "N": n, "n1": m});
            let f: SubregularFamily = subregular_generators(n, m)?;
            for (name, w) in f.named_generators() {
                report.push(canonical("miura.subregular.canonical", json!({"N": n, "n1": m, "generator": name}), &w));
                gens.insert(name.to_string(), Value::String(w.to_string()));
            }
        }
    }
    Ok(Outcome { command: "miura", inputs, report, data: json!({"generators": gens}) })
}

fn cmd_screen(columns: &str, target: Option<&str>) -> Res<Outcome> {
    let p = parse_bounded(columns)?;
    let report = screening_kernel_check(&p, target)?;
    Ok(Outcome { command: "screen", inputs: json!({"columns": p.columns, "target": target}), report, data: json!({}) })
}

fn split_data(s: &SplitReport) -> Value {
    let images: Map<String, Value> =
        s.images.iter().map(|i| (i.generator.clone(), Value::String(i.image.clone()))).collect();
    json!({"cuts": s.cuts, "levels": s.levels, "images": images})
}

fn cmd_coproduct(columns: &str, after: usize, after2: Option<usize>, check: CoproductCheck) -> Res<Outcome> {
    let p = parse_bounded(columns)?;
    let (name, split) = match check {
        CoproductCheck::Coassoc => {
            let Some(c2) = after2 else {
                return Err(Usage("coassoc needs --after2".into()));
            };
            ("coassoc", coassociativity_check(&p, after, c2)?)
        }
        _ if after2.is_some() => return Err(Usage("--after2 is only used with --check coassoc".into())),
        CoproductCheck::Factorization => ("factorization", factorization_check(&p, after)?),
        CoproductCheck::Compat => ("compat", miura_compatibility_check(&p, after)?),
        CoproductCheck::Subregular => {
            let expected = SubregularFamily::pyramid(p.n)?;
            if p.columns != expected.columns {
                return Err(Usage(format!("subregular check needs columns {:?}", expected.columns)));
            }
            if after == 0 || after >= p.columns.len() {
                return Err(Usage(format!("--after {after} is not an inner column of {:?}", p.columns)));
            }
            ("subregular", subregular_coproduct_check(p.n, p.boxes_before(after))?)
        }
    };
    let inputs = json!({"columns": p.columns, "after": after, "after2": after2, "check": name});
    let data = split_data(&split);
    Ok(Outcome { command: "coproduct", inputs, report: split.report, data })
}

fn cmd_binom(n: usize) -> Res<Outcome> {
    if n == 0 {
        return Err(Usage("--n must be at least 1".into()));
    }
    bounded(n)?;
    Ok(Outcome { command: "binom", inputs: json!({"n": n}), report: binomial_identity_check(n)?, data: json!({}) })
}

fn cmd_verify_all(max: usize, only: Option<&str>) -> Res<Outcome> {
    bounded(max)?;
    let criteria: Vec<usize> = match only {
        None => (1..=TITLES.len()).collect(),
        Some(s) => s
            .split(',')
            .map(|x| match x.trim().parse::<usize>() {
                Ok(c) if (1..=TITLES.len()).contains(&c) => Ok(c),
                _ => Err(Usage(format!("no criterion {x:?}"))),
            })
            .collect::<Res<_>>()?,
    };
    let bounds = Bounds { max_n: max, ..Bounds::default() };
    let mut report = Report::new();
    let mut summary = Vec::new();
    for c in &criteria {
        let r = suites::run(*c, bounds)?;
        summary.push(json!({
            "criterion": c,
            "title": TITLES[c - 1],
            "records": r.records.len(),
            "failed": r.failures().len(),
        }));
        report.extend(r);
    }
    Ok(Outcome {
        command: "verify-all",
        inputs: json!({"max_N": max, "criteria": criteria}),
        report: report.sorted(),
        data: json!({"criteria": summary}),
    })
}

/// Evaluates a scalar or printed expression at `k0`. Strings that are
/// neither are returned unchanged; poles are errors.
fn specialize_str(s: &str, k0: &Rational) -> Res<String> {
    if let Ok(x) = Scalar::parse(s) {
        return Ok(Scalar::from_rational(x.eval(k0)?).to_string());
    }
    if !s.contains('*') {
        return Ok(s.to_string());
    }
    match specialize_printed(s, k0) {
        Ok(t) => Ok(t),
        Err(walg::Error::Scalar(e @ ScalarError::PoleAtEvaluationPoint(_))) => Err(e.into()),
        Err(_) => Ok(s.to_string()),
    }
}

fn specialize_value(v: &mut Value, k0: &Rational) -> Res<()> {
    match v {
        Value::String(s) => *s = specialize_str(s, k0)?,
        Value::Array(a) => {
            for x in a {
                specialize_value(x, k0)?;
            }
        }
        Value::Object(m) => {
            for x in m.values_mut() {
                specialize_value(x, k0)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn specialize(out: &mut Outcome, k0: &Rational) -> Res<()> {
    for r in &mut out.report.records {
        for w in &mut r.witness {
            *w = specialize_str(w, k0)?;
        }
        for v in r.ledger.values_mut() {
            *v = specialize_str(v, k0)?;
        }
    }
    specialize_value(&mut out.data, k0)
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::NotApplicable => "N/A ",
    }
}

fn render_human(out: &Outcome) -> String {
    let mut o = String::new();
    if let Value::Object(m) = &out.data {
        for (k, v) in m {
            match v {
                Value::Object(inner) if inner.values().all(Value::is_string) => {
                    let _ = writeln!(o, "{k}:");
                    for (name, x) in inner {
                        let _ = writeln!(o, "  {name} = {}", x.as_str().unwrap_or_default());
                    }
                }
                Value::String(s) => {
                    let _ = writeln!(o, "{k}: {s}");
                }
                other => {
                    let _ = writeln!(o, "{k}: {other}");
                }
            }
        }
    }
    for r in &out.report.records {
        let _ = writeln!(o, "{} {} {}", status_word(r.status), r.check, r.inputs);
        for w in &r.witness {
            let _ = writeln!(o, "    witness: {w}");
        }
        if r.status == Status::Fail {
            for (k, v) in &r.ledger {
                let _ = writeln!(o, "    {k} = {v}");
            }
        }
    }
    let failed = out.report.failures().len();
    let total = out.report.records.len();
    let _ = writeln!(o, "{}: {} of {total} checks passed", out.command, total - failed);
    o
}

fn run(cli: &Cli) -> Res<Outcome> {
    let k0 = match &cli.level {
        Some(s) => Some(Rational::from_str(s.trim()).map_err(|_| Usage(format!("--level {s:?} is not a rational number")))?),
        None => None,
    };
    let mut out = match &cli.command {
        Command::Pyramid { columns } => cmd_pyramid(columns),
        Command::Split { columns, after } => cmd_split(columns, *after),
        Command::Wakimoto { n, columns, check } => cmd_wakimoto(*n, columns, *check),
        Command::Miura { mode, n, height, width, n1 } => cmd_miura(*mode, *n, *height, *width, *n1),
        Command::Screen { columns, target } => cmd_screen(columns, target.as_deref()),
        Command::Coproduct { columns, after, after2, check } => cmd_coproduct(columns, *after, *after2, *check),
        Command::Binom { n } => cmd_binom(*n),
        Command::VerifyAll { max_n, only } => cmd_verify_all(*max_n, only.as_deref()),
    }?;
    out.report = std::mem::take(&mut out.report).sorted();
    if let Some(k0) = &k0 {
        specialize(&mut out, k0)?;
        if let Value::Object(m) = &mut out.inputs {
            m.insert("level".into(), Value::String(Scalar::from_rational(k0.clone()).to_string()));
        }
    }
    Ok(out)
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(o) => o,
        Err(Usage(msg)) => {
            eprintln!("walg: {msg}");
            return ExitCode::from(2);
        }
    };
    let pass = out.report.all_pass();
    if cli.json {
        let env = json!({
            "command": out.command,
            "inputs": out.inputs,
            "status": if pass { "pass" } else { "fail" },
            "records": out.report.records,
            "data": out.data,
        });
        emit(&(serde_json::to_string_pretty(&env).expect("reports serialize") + "\n"));
    } else {
        emit(&render_human(&out));
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
