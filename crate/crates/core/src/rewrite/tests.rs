use super::*;
use crate::ast::{int, Context, Prop};
use crate::parser::{parse_expr, print_expr};

fn e(text: &str) -> Expr {
    parse_expr(text).unwrap()
}

fn once(rule: Rule, text: &str) -> String {
    let engine = Engine::new();
    let out = engine.rewrite_at(&rule, &e(text), &[]).unwrap().expect("rule fires");
    print_expr(&out)
}

fn norm(text: &str) -> (String, usize) {
    let (out, trace) = Engine::new().normalize(&e(text)).unwrap();
    (print_expr(&out), trace.len())
}

#[test]
fn known_eval_examples() {
    assert_eq!(once(Rule::KnownEval, "est(x*x | x=3, I)"), "9");
    assert_eq!(once(Rule::KnownEval, "est(alpha | alpha=5/2, I)"), "5/2");
    assert_eq!(once(Rule::KnownEval, "est(delta(x, 2) | x=2, I)"), "1");
    assert!(Engine::new().apply(&Rule::KnownEval, &e("est(x | I)")).is_none());
}

#[test]
fn linear_sum_examples() {
    assert_eq!(once(Rule::LinearSum, "est(x + y | I)"), "est(x | I) + est(y | I)");
    assert_eq!(once(Rule::LinearSum, "est(x + 2 | I)"), "2 + est(x | I)");
    assert_eq!(
        once(Rule::LinearSum, "est(x + y + z | I)"),
        "est(x | I) + est(y | I) + est(z | I)"
    );
}

#[test]
fn scalar_out_examples() {
    assert_eq!(once(Rule::ScalarOut, "est(2*x*y | I)"), "2 * est(x * y | I)");
    assert_eq!(
        once(Rule::ScalarOut, "est(alpha*x | alpha=3, I)"),
        "3 * est(x | alpha=3, I)"
    );
    assert_eq!(
        once(Rule::ScalarOut, "est(est(b | a=1, I) * a | I)"),
        "est(a | I) * est(b | a=1, I)"
    );
}

#[test]
fn tower_examples() {
    assert_eq!(once(Rule::Tower, "est(est(y | x, I) | I)"), "est(y | I)");
    assert_eq!(once(Rule::Tower, "est(est(a*b | a, I) | I)"), "est(a * b | I)");
    assert_eq!(once(Rule::Tower, "est(est(y | I) | I)"), "est(y | I)");
    assert!(Engine::new()
        .apply(&Rule::Tower, &e("est(est(y | x, J) | I)"))
        .is_none());
}

#[test]
fn two_valued_examples() {
    let engine = Engine::new().declare_two_valued("a");
    let got = engine
        .rewrite_at(&Rule::TwoValued, &e("a * est(b | a, I)"), &[])
        .unwrap()
        .unwrap();
    assert_eq!(print_expr(&got), "a * est(b | a=1, I)");
    let got = engine.rewrite_at(&Rule::TwoValued, &e("a * a"), &[]).unwrap().unwrap();
    assert_eq!(print_expr(&got), "a");

    let plain = Engine::new();
    assert!(plain.rewrite_at(&Rule::TwoValued, &e("a * a"), &[]).unwrap().is_none());
    assert!(matches!(
        plain.two_valued_on(&e("a * a"), &[], &Symbol::new("a")),
        Err(EngineError::Domain(_))
    ));
    let got = engine
        .two_valued_on(&e("a * est(b | a, I)"), &[], &Symbol::new("a"))
        .unwrap()
        .unwrap();
    assert_eq!(print_expr(&got), "a * est(b | a=1, I)");
}

#[test]
fn encoding_rules() {
    assert_eq!(
        once(Rule::PropEncode, "n(A or B)"),
        "n(A) + n(B) - n(A) * n(B)"
    );
    assert_eq!(once(Rule::DeltaAsProp, "delta(x, 2)"), "n(x=2)");
    assert_eq!(once(Rule::PropAsDelta, "n(x=2)"), "delta(2, x)");
    let engine = Engine::new();
    let first = engine
        .rewrite_at(&Rule::PropEncode, &e("n(not not A)"), &[])
        .unwrap()
        .unwrap();
    let path = first
        .positions()
        .into_iter()
        .find(|p| matches!(first.at(p), Some(Expr::PropEnc(Prop::Not(_)))))
        .unwrap();
    let second = engine.rewrite_at(&Rule::PropEncode, &first, &path).unwrap().unwrap();
    assert_eq!(second, Expr::bit("A"));
}

#[test]
fn normalize_examples() {
    assert_eq!(norm("est(n(not A) | I)"), ("1 - est(n(A) | I)".to_string(), 2));
    assert_eq!(
        norm("est(n(A or B) | I)").0,
        "est(n(A) | I) + est(n(B) | I) - est(n(A) * n(B) | I)"
    );
    assert_eq!(norm("5"), ("5".to_string(), 0));
}

#[test]
fn normalize_traces_replay() {
    let engine = Engine::new();
    for text in [
        "est(n(A or not B) | I) * 2 + est(est(y | x, I) | I)",
        "est(x*x + 3 | x=2, I) + est(n(A and (B or A)) | C, I)",
    ] {
        let (out, trace) = engine.normalize(&e(text)).unwrap();
        assert_eq!(trace.replay(&engine).unwrap(), out);
        assert_eq!(trace.final_expr(), &out);
    }
}

#[test]
fn fuel_is_enforced() {
    let engine = Engine::new().with_fuel(1);
    assert_eq!(
        engine.normalize(&e("est(n(not A) | I)")),
        Err(EngineError::FuelExhausted { fuel: 1 })
    );
}

#[test]
fn product_rule_derivation() {
    let engine = Engine::new();
    let trace =
        derive_product_rule(&engine, &Prop::atom("A"), &Prop::atom("B"), &Context::new("I")).unwrap();
    assert_eq!(print_expr(&trace.initial), "est(n(A) * n(B) | I)");
    assert_eq!(
        print_expr(trace.final_expr()),
        "est(n(A) | I) * est(n(B) | A, I)"
    );
    assert_eq!(
        trace.rule_names(),
        ["tower_expand", "scalar_out", "two_valued", "scalar_out"]
    );
    assert_eq!(
        print_expr(&trace.steps[2].before),
        "est(n(A) * est(n(B) | n(A), I) | I)"
    );
    trace.replay(&engine).unwrap();
    assert_eq!(to_probability_form(trace.final_expr()), "P(A|I)P(B|A,I)");
}

#[test]
fn product_rule_with_compound_condition() {
    let a = Prop::or(Prop::atom("A"), Prop::atom("C"));
    let trace = derive_product_rule(&Engine::new(), &a, &Prop::atom("B"), &Context::new("I")).unwrap();
    assert_eq!(trace.len(), 4);
    assert_eq!(
        print_expr(trace.final_expr()),
        "est(n(B) | (A or C), I) * est(n(A or C) | I)"
    );
}

#[test]
fn negation_and_sum_derivations() {
    let engine = Engine::new();
    let ctx = Context::new("I");
    let t = derive_negation(&engine, &Prop::atom("A"), &ctx).unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!(to_probability_form(t.final_expr()), "1 − P(A|I)");
    let t = derive_sum(&engine, &Prop::atom("A"), &Prop::atom("B"), &ctx).unwrap();
    assert_eq!(
        to_probability_form(t.final_expr()),
        "P(A|I) + P(B|I) − P(A ∧ B|I)"
    );
}

#[test]
fn expectation_derivation() {
    let engine = Engine::new();
    let ctx = Context::new("I");
    let x = Symbol::new("x");
    let d = derive_expectation_theorem(&engine, &x, &[int(1), int(2), int(3)], &ctx).unwrap();
    assert_eq!(
        print_expr(d.expansion.final_expr()),
        "est(delta(1, x) | I) + 2 * est(delta(2, x) | I) + 3 * est(delta(3, x) | I)"
    );
    assert_eq!(d.normalization.final_expr(), &Expr::one());
    assert_eq!(
        d.normalization.rule_names(),
        ["linear_merge", "delta_partition", "known_eval"]
    );
    d.expansion.replay(&engine).unwrap();
    d.normalization.replay(&engine).unwrap();

    let d = derive_expectation_theorem(&engine, &x, &[int(0), int(1)], &ctx).unwrap();
    assert_eq!(print_expr(d.expansion.final_expr()), "est(delta(1, x) | I)");

    assert!(matches!(
        derive_expectation_theorem(&engine, &x, &[], &ctx),
        Err(EngineError::Domain(_))
    ));
    assert!(matches!(
        derive_expectation_theorem(&engine, &x, &[int(1), int(1)], &ctx),
        Err(EngineError::Domain(_))
    ));
}

#[test]
fn trace_text_and_json() {
    let engine = Engine::new();
    let (_, trace) = engine.normalize(&e("est(n(not A) | I)")).unwrap();
    let text = trace.render_text();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("step 1: [prop_encode @ 0] est(n(not A) | I) ⇒ est(1 - n(A) | I)"));
    let json = trace.to_json();
    assert_eq!(json["steps"][1]["rule"], "linear_sum");
    assert_eq!(json["final"], "1 - est(n(A) | I)");
}

#[test]
fn rule_kinds_parse_by_name() {
    for k in RuleKind::ALL {
        assert_eq!(k.name().parse::<RuleKind>().unwrap(), k);
    }
    assert!("nope".parse::<RuleKind>().is_err());
}
