//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any criterion fails or overruns its time budget.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use serde_json::Value;

use estimation::ast::{
    canonicalize, encode_prop, eval_ground, int, Context, Expr, Prop, Rational, Subst, Symbol,
};
use estimation::gen::{self, Vocabulary};
use estimation::oracle::{
    check_requirements, expectation_decomposition, grid_eval, oracle_eval,
    verify_rules_numerically, GridModel, OracleError,
};
use estimation::parser::{parse_expr, print_expr};
use estimation::rewrite::RuleKind;
use estimation::suite::expectation_fixtures;

const SEED: u64 = 20_240_917;

type Verdict = Result<String, String>;
type Criterion = (u32, &'static str, Option<Duration>, fn() -> Verdict);

fn estim(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_estim"))
        .args(args)
        .output()
        .expect("estim runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bits(a: bool, b: bool) -> Subst {
    Subst::default().atom("A", a).atom("B", b)
}

fn truth_tables() -> Verdict {
    let (a, b) = (Prop::atom("A"), Prop::atom("B"));
    let or = Prop::or(a.clone(), b.clone());
    let and = Prop::and(a.clone(), b.clone());
    // (A, B, A or B, A and B), row order as printed in the truth table.
    let logic = [
        (false, false, false, false),
        (false, true, true, false),
        (true, false, true, false),
        (true, true, true, true),
    ];
    // (n(A), n(B), n(A)+n(B)-n(A)n(B), n(A)n(B))
    let arith = [(0, 0, 0, 0), (0, 1, 1, 0), (1, 0, 1, 0), (1, 1, 1, 1)];
    for (&(va, vb, vor, vand), &(na, nb, nsum, nprod)) in logic.iter().zip(&arith) {
        let s = bits(va, vb);
        let n = |p: &Prop| eval_ground(&Expr::n(p.clone()), &s).unwrap();
        let enc = |p: &Prop| eval_ground(&encode_prop(p), &s).unwrap();
        ensure(n(&or) == int(vor as i64) && n(&and) == int(vand as i64), || {
            format!("truth values differ at A={va}, B={vb}")
        })?;
        ensure(n(&a) == int(na) && n(&b) == int(nb), || format!("n(A), n(B) differ at row {na}{nb}"))?;
        ensure(enc(&or) == int(nsum) && enc(&and) == int(nprod), || {
            format!("encoding differs at n(A)={na}, n(B)={nb}")
        })?;
    }
    let not = Prop::not(a.clone());
    for va in [false, true] {
        let s = bits(va, false);
        let got = eval_ground(&encode_prop(&not), &s).unwrap();
        ensure(got == int(1 - va as i64), || format!("n(not A) wrong at A={va}"))?;
    }
    Ok("4 rows for and/or, 2 rows for not".into())
}

fn derivation_replay() -> Verdict {
    let (code, out, err) = estim(&["derive", "product", "--format", "json"]);
    ensure(code == 0, || format!("derive product exited {code}: {err}"))?;
    let v: Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let trace = &v["traces"][0];
    let parse = |s: &Value| parse_expr(s.as_str().unwrap_or_default()).map_err(|e| e.to_string());

    let i = Context::new("I");
    let want_initial = Expr::est(Expr::mul(vec![Expr::bit("A"), Expr::bit("B")]), i.clone());
    let want_final = Expr::mul(vec![
        Expr::est(Expr::bit("A"), i.clone()),
        Expr::est(Expr::bit("B"), i.clone().assert(Prop::atom("A"))),
    ]);
    ensure(parse(&trace["initial"])? == canonicalize(&want_initial), || {
        format!("initial is {}", trace["initial"])
    })?;
    ensure(parse(&trace["final"])? == canonicalize(&want_final), || {
        format!("final is {}", trace["final"])
    })?;

    let steps = trace["steps"].as_array().ok_or("no steps")?;
    ensure(steps.len() == 4, || format!("{} steps", steps.len()))?;
    let anchors = [
        "requirement 3",
        "scalar extraction",
        "two-valued substitution",
        "constant extraction",
    ];
    let mut states = vec![parse(&trace["initial"])?];
    for (k, (step, anchor)) in steps.iter().zip(anchors).enumerate() {
        let text = step["anchor"].as_str().unwrap_or_default();
        ensure(text.starts_with(anchor), || format!("step {} anchored to `{text}`", k + 1))?;
        ensure(parse(&step["before"])? == *states.last().unwrap(), || {
            format!("step {} does not continue the previous state", k + 1)
        })?;
        states.push(parse(&step["after"])?);
    }

    let mut r = gen::rng(SEED);
    let (mut compared, mut skipped) = (0, 0);
    for _ in 0..100 {
        let m = gen::random_two_bit_model(&mut r);
        let p_a = oracle_eval(&Expr::est(Expr::bit("A"), i.clone()), &m).unwrap();
        let first = oracle_eval(&states[0], &m).unwrap();
        for (k, s) in states.iter().enumerate().skip(1) {
            match oracle_eval(s, &m) {
                Ok(v) => {
                    ensure(v == first, || format!("state {k} differs: {v} vs {first}"))?;
                    compared += 1;
                }
                Err(OracleError::ZeroWeightConditioning { .. }) if p_a.is_zero() => skipped += 1,
                Err(e) => return Err(format!("state {k}: {e}")),
            }
        }
    }
    Ok(format!("4 anchored steps, {compared} states equal, {skipped} skipped (P(A) = 0)"))
}

fn probability_rules() -> Verdict {
    let mut r = gen::rng(SEED + 3);
    let i = Context::new("I");
    let (mut checked, mut skipped) = (0, 0);
    for _ in 0..1000 {
        let m = gen::random_two_bit_model(&mut r);
        let rep = verify_rules_numerically(&m, "A", "B");
        for p in [&rep.negation, &rep.sum, &rep.product] {
            ensure(p.passed(), || format!("{}: {:?}", p.name, p.counterexample))?;
        }
        let p_a = oracle_eval(&Expr::est(Expr::bit("A"), i.clone()), &m).unwrap();
        ensure(rep.note.is_some() == p_a.is_zero(), || {
            format!("product rule skipped with P(A) = {p_a}")
        })?;
        checked += rep.negation.checked + rep.sum.checked + rep.product.checked;
        skipped += rep.product.skipped;
    }
    Ok(format!("{checked} identities exact, product skipped on {skipped} models"))
}

fn requirements() -> Verdict {
    let mut r = gen::rng(SEED + 4);
    let mut totals = [0usize; 4];
    let mut skipped = 0;
    for t in 0..1000u64 {
        let m = gen::random_mixed_model(&mut r);
        let rep = check_requirements(&m, 1, 5, SEED + t);
        ensure(rep.properties.len() == 4, || "expected four requirement reports".into())?;
        for (k, p) in rep.properties.iter().enumerate() {
            ensure(p.passed(), || format!("{}: {:?}", p.name, p.counterexample))?;
            totals[k] += p.checked;
            skipped += p.skipped;
        }
    }
    ensure(totals.iter().all(|&n| n >= 1000), || format!("too few checks: {totals:?}"))?;
    Ok(format!("checks per requirement {totals:?}, {skipped} zero-weight cases skipped"))
}

fn expectation_theorem() -> Verdict {
    let fixtures = expectation_fixtures();
    let x = Symbol::new("x");
    let i = Context::new("I");
    let sizes: Vec<usize> = fixtures.iter().map(|m| m.domain(&x).unwrap().len()).collect();
    ensure((2..=8).all(|n| sizes.contains(&n)), || format!("sizes {sizes:?}"))?;
    ensure(fixtures.iter().any(|m| m.support().count() == 1), || "no point mass".into())?;
    ensure(
        fixtures.iter().any(|m| m.support().count() < m.all_weights().len()),
        || "no zero-weight point".into(),
    )?;
    for m in &fixtures {
        let d = expectation_decomposition(m, &x).map_err(|e| e.to_string())?;
        ensure(d.holds(), || format!("decomposition fails on {m:?}"))?;
        let domain = m.domain(&x).unwrap().to_vec();
        let mut total = Rational::zero();
        let mut mean = Rational::zero();
        for v in &domain {
            let p = oracle_eval(&Expr::est(Expr::delta(Expr::Const(v.clone()), Expr::unknown("x")), i.clone()), m)
                .map_err(|e| e.to_string())?;
            ensure(p >= Rational::zero(), || format!("p({v}) = {p}"))?;
            total += &p;
            mean += p * v;
        }
        ensure(total.is_one(), || format!("probabilities sum to {total}"))?;
        let est = oracle_eval(&Expr::est(Expr::unknown("x"), i.clone()), m).map_err(|e| e.to_string())?;
        ensure(mean == est, || format!("sum x_i p_i = {mean}, est(x | I) = {est}"))?;
    }
    Ok(format!("{} fixtures exact", fixtures.len()))
}

fn continuous_grid() -> Verdict {
    let uniform = GridModel::from_density(0.0, 1.0, 1000, |_| 1.0).map_err(|e| e.to_string())?;
    let u = grid_eval(&uniform).map_err(|e| e.to_string())?;
    ensure((u.estimate - 0.5).abs() <= 1e-6, || format!("uniform estimate {}", u.estimate))?;
    ensure((u.normalization - 1.0).abs() <= 1e-6, || format!("normalization {}", u.normalization))?;
    let tri = GridModel::from_density(0.0, 1.0, 1000, |x| 2.0 * x).map_err(|e| e.to_string())?;
    let t = grid_eval(&tri).map_err(|e| e.to_string())?;
    ensure((t.estimate - 2.0 / 3.0).abs() <= 1e-3, || format!("triangular estimate {}", t.estimate))?;
    Ok(format!("uniform {:.9}, triangular {:.9}", u.estimate, t.estimate))
}

fn mutation() -> Verdict {
    let (code, out, _) = estim(&["check", "--trials", "200"]);
    ensure(code == 0, || format!("unmodified engine fails the check:\n{out}"))?;
    for kind in RuleKind::ALL {
        let (code, out, err) = estim(&["check", "--trials", "200", "--inject-fault", kind.name()]);
        ensure(code == 4, || format!("fault in {kind} exited {code}: {err}"))?;
        ensure(out.contains("FAIL") && out.contains("counterexample"), || {
            format!("fault in {kind} printed no counterexample")
        })?;
    }
    Ok(format!("all {} corrupted rules rejected with exit 4", RuleKind::ALL.len()))
}

fn round_trip() -> Verdict {
    let vocab = Vocabulary::standard();
    let mut r = gen::rng(SEED + 8);
    let mut deepest = 0;
    for _ in 0..1000 {
        let e = gen::random_expr(&mut r, &vocab, 6);
        deepest = deepest.max(e.depth());
        let text = print_expr(&e);
        let back = parse_expr(&text).map_err(|err| format!("{text}: {err}"))?;
        ensure(back == canonicalize(&e), || format!("round trip changed {text}"))?;
    }
    ensure(deepest <= 6, || format!("generated depth {deepest}"))?;
    Ok(format!("1000 expressions, max depth {deepest}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "truth tables", Some(Duration::from_millis(1)), truth_tables),
        (2, "product derivation replay", Some(Duration::from_secs(1)), derivation_replay),
        (3, "probability rules", Some(Duration::from_secs(10)), probability_rules),
        (4, "requirements 0 to 3", Some(Duration::from_secs(30)), requirements),
        (5, "expectation theorem", Some(Duration::from_secs(1)), expectation_theorem),
        (6, "continuous grid", Some(Duration::from_secs(1)), continuous_grid),
        (7, "soundness under mutation", None, mutation),
        (8, "parser round trip", Some(Duration::from_secs(5)), round_trip),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let verdict = run();
        let took = start.elapsed();
        let over = limit.is_some_and(|l| took > l);
        let ok = verdict.is_ok() && !over;
        if !ok {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" / {l:?}"));
        let detail = match (&verdict, over) {
            (Ok(d), false) => d.clone(),
            (Ok(d), true) => format!("{d}; over time budget"),
            (Err(e), _) => e.clone(),
        };
        println!(
            "criterion {id} {}: {name} ({took:.2?}{budget}) {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed == 0 {
        println!("acceptance: all 8 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 8 criteria fail");
        ExitCode::FAILURE
    }
}
