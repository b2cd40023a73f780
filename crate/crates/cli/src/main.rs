use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use estimation::ast::{Context, Expr, Rational, Symbol};
use estimation::oracle::{
    grid_eval, load_model_json, oracle_eval, parse_rational, LoadedModel, Model, OracleError,
    PropertyReport,
};
use estimation::parser::{parse_expr, parse_prop, print_expr};
use estimation::rewrite::{
    derive_expectation_theorem, derive_negation, derive_product_rule, derive_sum,
    to_probability_form, DerivationTrace, Engine, RuleKind, DEFAULT_FUEL,
};
use estimation::suite::{check_trace_states, run_check, CheckConfig};

const EXIT_PARSE: u8 = 1;
const EXIT_ENGINE: u8 = 2;
const EXIT_ZERO_WEIGHT: u8 = 3;
const EXIT_PROPERTY: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "estim", version, about = "Symbolic rewriting and exact checking for est(x | I)")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Replace one rule with a deliberately unsound variant.
    #[arg(long, global = true, hide = true, value_name = "RULE")]
    inject_fault: Option<RuleKind>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalize the expression in FILE.
    Normalize {
        file: PathBuf,
        /// Print every rewrite step.
        #[arg(long)]
        trace: bool,
        /// Also render the result in probability notation.
        #[arg(long)]
        prob: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Replay a scripted derivation.
    Derive {
        name: Derivation,
        /// Comma-separated values of x, required for `expectation`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        domain: Vec<String>,
        /// Oracle-check every intermediate state against this model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// First proposition.
        #[arg(long, default_value = "A")]
        a: String,
        /// Second proposition.
        #[arg(long, default_value = "B")]
        b: String,
        #[arg(long)]
        prob: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Evaluate the expression in FILE against a model file.
    Eval {
        file: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the property suite.
    Check {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Derivation {
    Negation,
    Sum,
    Product,
    Expectation,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type Outcome = Result<(String, u8), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut engine = Engine::new();
    if let Some(kind) = cli.inject_fault {
        engine = engine.with_fault(kind);
    }
    let result = match cli.command {
        Command::Normalize {
            file,
            trace,
            prob,
            format,
            fuel,
        } => cmd_normalize(engine, &file, trace, prob, format, fuel),
        Command::Derive {
            name,
            domain,
            model,
            a,
            b,
            prob,
            format,
        } => cmd_derive(engine, name, &domain, model.as_deref(), &a, &b, prob, format),
        Command::Eval { file, model, format } => cmd_eval(&file, &model, format),
        Command::Check {
            model,
            trials,
            seed,
            format,
        } => cmd_check(engine, model.as_deref(), trials, seed, format),
    };
    match result {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_PARSE, format!("error: cannot read {}: {e}", path.display())))
}

fn read_expr(path: &Path) -> Result<Expr, Failure> {
    let text = read(path)?;
    parse_expr(&text).map_err(|e| fail(EXIT_PARSE, e.render(&text)))
}

fn read_model(path: &Path) -> Result<LoadedModel, Failure> {
    let text = read(path)?;
    load_model_json(&text)
        .map_err(|e| fail(EXIT_PARSE, format!("error: {}: {e}", path.display())))
}

fn read_discrete(path: &Path) -> Result<Model, Failure> {
    read_model(path)?.discrete.ok_or_else(|| {
        fail(
            EXIT_PARSE,
            format!("error: {} holds only a grid; a discrete table is required", path.display()),
        )
    })
}

fn json_out(v: Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(&v).expect("json values serialize"))
}

fn decimal(v: &Rational) -> String {
    match v.to_f64() {
        Some(f) => format!("{f}"),
        None => "nan".to_string(),
    }
}

fn cmd_normalize(engine: Engine, file: &Path, trace: bool, prob: bool, format: Format, fuel: usize) -> Outcome {
    if fuel == 0 {
        return Err(fail(EXIT_USAGE, "error: --fuel must be positive"));
    }
    let e = read_expr(file)?;
    let (out, steps) = engine
        .with_fuel(fuel)
        .normalize(&e)
        .map_err(|err| fail(EXIT_ENGINE, format!("error: {err}")))?;
    let text = match format {
        Format::Json => {
            let mut v = steps.to_json();
            if prob {
                v["probability"] = json!(to_probability_form(&out));
            }
            json_out(v)
        }
        Format::Text => {
            let mut s = String::new();
            if trace {
                s.push_str(&steps.render_text());
            }
            writeln!(s, "{}", print_expr(&out)).unwrap();
            if prob {
                writeln!(s, "{}", to_probability_form(&out)).unwrap();
            }
            s
        }
    };
    Ok((text, 0))
}

#[allow(clippy::too_many_arguments)]
fn cmd_derive(
    engine: Engine,
    name: Derivation,
    domain: &[String],
    model: Option<&Path>,
    a: &str,
    b: &str,
    prob: bool,
    format: Format,
) -> Outcome {
    let prop = |s: &str| parse_prop(s).map_err(|e| fail(EXIT_PARSE, e.render(s)));
    let (pa, pb) = (prop(a)?, prop(b)?);
    let ctx = Context::new("I");
    let engine_err = |e| fail(EXIT_ENGINE, format!("error: {e}"));

    let traces: Vec<(&str, DerivationTrace)> = match name {
        Derivation::Negation => vec![("negation", derive_negation(&engine, &pa, &ctx).map_err(engine_err)?)],
        Derivation::Sum => vec![("sum", derive_sum(&engine, &pa, &pb, &ctx).map_err(engine_err)?)],
        Derivation::Product => vec![(
            "product",
            derive_product_rule(&engine, &pa, &pb, &ctx).map_err(engine_err)?,
        )],
        Derivation::Expectation => {
            if domain.is_empty() {
                return Err(fail(EXIT_USAGE, "error: `derive expectation` requires --domain"));
            }
            let values = domain
                .iter()
                .map(|d| {
                    parse_rational(d)
                        .ok_or_else(|| fail(EXIT_USAGE, format!("error: invalid domain value `{d}`")))
                })
                .collect::<Result<Vec<Rational>, _>>()?;
            let d = derive_expectation_theorem(&engine, &Symbol::new("x"), &values, &ctx)
                .map_err(engine_err)?;
            vec![("expansion", d.expansion), ("normalization", d.normalization)]
        }
    };

    let mut reports = Vec::new();
    if let Some(path) = model {
        let m = read_discrete(path)?;
        for (label, t) in &traces {
            for state in t.states() {
                if let Err(OracleError::UnboundSymbol(s)) = oracle_eval(state, &m) {
                    return Err(fail(
                        EXIT_PARSE,
                        format!("error: {} does not declare `{s}`", path.display()),
                    ));
                }
            }
            let mut rep = PropertyReport::new(&format!("{label} states"));
            check_trace_states(&mut rep, t, std::slice::from_ref(&m));
            reports.push(rep);
        }
    }
    let ok = reports.iter().all(PropertyReport::passed);

    let text = match format {
        Format::Json => {
            let mut v = json!({
                "derivation": format!("{name:?}").to_lowercase(),
                "traces": traces.iter().map(|(label, t)| {
                    let mut j = t.to_json();
                    j["name"] = json!(label);
                    if prob {
                        j["probability"] = json!(to_probability_form(t.final_expr()));
                    }
                    j
                }).collect::<Vec<_>>(),
            });
            if model.is_some() {
                v["oracle"] = json!(reports.iter().map(|r| json!({
                    "name": r.name,
                    "passed": r.passed(),
                    "checked": r.checked,
                    "skipped": r.skipped,
                    "failed": r.failed,
                    "counterexample": r.counterexample,
                })).collect::<Vec<_>>());
            }
            json_out(v)
        }
        Format::Text => {
            let mut s = String::new();
            for (label, t) in &traces {
                if traces.len() > 1 {
                    writeln!(s, "{label}:").unwrap();
                }
                s.push_str(&t.render_text());
                writeln!(s, "{} = {}", print_expr(&t.initial), print_expr(t.final_expr())).unwrap();
                if prob {
                    writeln!(
                        s,
                        "{} = {}",
                        to_probability_form(&t.initial),
                        to_probability_form(t.final_expr())
                    )
                    .unwrap();
                }
            }
            for r in &reports {
                writeln!(
                    s,
                    "oracle {}: {} {} checked, {} skipped, {} failed",
                    r.name,
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.checked,
                    r.skipped,
                    r.failed
                )
                .unwrap();
                if let Some(c) = &r.counterexample {
                    writeln!(s, "  counterexample: {c}").unwrap();
                }
            }
            s
        }
    };
    if ok {
        Ok((text, 0))
    } else {
        print!("{text}");
        Err(fail(EXIT_ENGINE, "error: an intermediate state disagrees with the oracle"))
    }
}

fn cmd_eval(file: &Path, model: &Path, format: Format) -> Outcome {
    let e = read_expr(file)?;
    let loaded = read_model(model)?;
    let Some(m) = loaded.discrete else {
        let grid = loaded.grid.expect("loader returns a discrete table or a grid");
        if !is_grid_query(&e) {
            return Err(fail(
                EXIT_PARSE,
                "error: a grid model evaluates only est(x | I) for its single variable",
            ));
        }
        let r = grid_eval(&grid).map_err(|err| fail(EXIT_PARSE, format!("error: {err}")))?;
        let text = match format {
            Format::Json => json_out(json!({"estimate": r.estimate, "normalization": r.normalization})),
            Format::Text => format!("{}\nnormalization {}\n", r.estimate, r.normalization),
        };
        return Ok((text, 0));
    };
    let v = oracle_eval(&e, &m).map_err(|err| match err {
        OracleError::ZeroWeightConditioning { context } => fail(
            EXIT_ZERO_WEIGHT,
            format!("error: conditioning event has zero weight: {context}"),
        ),
        OracleError::UnboundSymbol(s) => fail(
            EXIT_PARSE,
            format!("error: `{s}` is not declared in {}", model.display()),
        ),
    })?;
    let text = match format {
        Format::Json => json_out(json!({"value": v.to_string(), "decimal": v.to_f64()})),
        Format::Text => format!("{v}\n≈ {}\n", decimal(&v)),
    };
    Ok((text, 0))
}

fn is_grid_query(e: &Expr) -> bool {
    match e {
        Expr::Estim(body, ctx) => {
            matches!(body.as_ref(), Expr::Unknown(_)) && ctx.fixed_values().is_empty()
        }
        _ => false,
    }
}

fn cmd_check(engine: Engine, model: Option<&Path>, trials: usize, seed: u64, format: Format) -> Outcome {
    if trials == 0 {
        return Err(fail(EXIT_USAGE, "error: --trials must be positive"));
    }
    let model = model.map(read_discrete).transpose()?;
    let report = run_check(&CheckConfig {
        trials,
        seed,
        model,
        engine,
    });
    let text = match format {
        Format::Json => json_out(report.to_json()),
        Format::Text => report.render_text(),
    };
    Ok((text, if report.passed() { 0 } else { EXIT_PROPERTY }))
}
