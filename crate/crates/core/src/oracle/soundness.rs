//! Rule soundness harness: every firing of a rule must preserve the oracle
//! value of the whole expression.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::requirements::{describe_case, PropertyReport};
use super::{model_to_json, oracle_eval, Model, OracleError};
use crate::ast::{canonicalize, format_path, int, Context, Expr, Param, Prop, Rational, Symbol};
use crate::gen::{self, Vocabulary};
use crate::parser::print_expr;
use crate::rewrite::{Engine, Rule, RuleKind};

/// Models the harness draws from: every quarter-weight two-bit model, and
/// random models mixing small variables, a {0, 1} variable, and atoms.
pub fn model_pool(count: usize, seed: u64) -> Vec<Model> {
    let mut r = gen::rng(seed);
    let mut pool = gen::quarter_two_bit_models();
    for k in 0..count {
        let mut variables = vec![(Symbol::new("x"), vec![int(0), int(1), int(3)])];
        if k % 2 == 0 {
            variables.push((Symbol::new("a"), vec![int(0), int(1)]));
        } else {
            variables.push((Symbol::new("y"), vec![int(-1), int(2)]));
        }
        let atoms = vec![Symbol::new("A"), Symbol::new("B")];
        pool.push(gen::random_model(&mut r, variables, atoms, 12, 0.2));
    }
    pool
}

fn rule_for(kind: RuleKind, r: &mut impl Rng, m: &Model, vocab: &Vocabulary) -> Rule {
    let var = || m.variables().first().map(|(v, d)| (v.clone(), d.clone()));
    match kind {
        RuleKind::KnownEval => Rule::KnownEval,
        RuleKind::PropEncode => Rule::PropEncode,
        RuleKind::DeltaAsProp => Rule::DeltaAsProp,
        RuleKind::PropAsDelta => Rule::PropAsDelta,
        RuleKind::LinearSum => Rule::LinearSum,
        RuleKind::LinearMerge => Rule::LinearMerge,
        RuleKind::ScalarOut => Rule::ScalarOut,
        RuleKind::Tower => Rule::Tower,
        RuleKind::TwoValued => Rule::TwoValued,
        RuleKind::TowerExpand => Rule::TowerExpand {
            param: random_param(r, m, vocab),
        },
        RuleKind::CompletenessExpand => match var() {
            Some((var, domain)) => Rule::CompletenessExpand { var, domain },
            None => Rule::KnownEval,
        },
        RuleKind::DeltaPartition => match var() {
            Some((var, domain)) => Rule::DeltaPartition { var, domain },
            None => Rule::KnownEval,
        },
    }
}

fn random_param(r: &mut impl Rng, m: &Model, vocab: &Vocabulary) -> Param {
    if !m.variables().is_empty() && r.random_bool(0.3) {
        Param::Unknown(m.variables().choose(r).unwrap().0.clone())
    } else {
        Param::Prop({ let d = r.random_range(0..=1); gen::random_prop(r, vocab, d) })
    }
}

/// A context without params, so that expressions built on it are closed.
fn closed_context(r: &mut impl Rng, m: &Model, vocab: &Vocabulary) -> Context {
    let mut ctx = Context::new("I");
    if let Some((v, d)) = m.variables().choose(r) {
        if r.random_bool(0.3) {
            ctx.insert_assignment(v.clone(), d.choose(r).unwrap().clone())
                .expect("fresh context");
        }
    }
    if !vocab.atoms.is_empty() && r.random_bool(0.3) {
        ctx = ctx.assert(gen::random_prop(r, vocab, 1));
    }
    ctx
}

fn coeff(r: &mut impl Rng) -> Expr {
    let n = *[-3, -2, 2, 3, 5].choose(r).unwrap();
    Expr::Const(Rational::new(n.into(), r.random_range(1..=2).into()))
}

/// Closed expressions shaped so that `kind` has somewhere to fire.
fn templates(kind: RuleKind, r: &mut impl Rng, m: &Model, vocab: &Vocabulary) -> Vec<Expr> {
    let f = gen::random_body(r, vocab, 3);
    let g = gen::random_body(r, vocab, 3);
    let ctx = closed_context(r, m, vocab);
    let est = |body: Expr, c: &Context| Expr::est(body, c.clone());
    let var = m.variables().first().map(|(v, d)| (v.clone(), d.clone()));
    let x = var.as_ref().map(|(v, _)| Expr::Unknown(v.clone()));
    let point = var.as_ref().map(|(_, d)| Expr::Const(d.choose(r).unwrap().clone()));
    let prop = if vocab.atoms.is_empty() {
        None
    } else {
        Some(gen::random_prop(r, vocab, 2))
    };
    let mut out = vec![gen::random_expr(r, vocab, 4)];
    out[0] = est(out[0].clone(), &ctx);

    match kind {
        RuleKind::KnownEval => {
            let mut total = Context::new("I");
            if let Some(o) = m.support().map(|(o, _)| o).collect::<Vec<_>>().choose(r) {
                for ((v, _), val) in m.variables().iter().zip(&o.values) {
                    total.insert_assignment(v.clone(), val.clone()).expect("distinct");
                }
                for (a, t) in m.atoms().iter().zip(&o.truths) {
                    let lit = Prop::Atom(a.clone());
                    total = total.assert(if *t { lit } else { Prop::not(lit) });
                }
            }
            out.push(est(f.clone(), &total));
            out.push(Expr::add(vec![est(g.clone(), &ctx), est(coeff(r), &ctx)]));
        }
        RuleKind::PropEncode => {
            if let Some(p) = &prop {
                out.push(est(Expr::mul(vec![Expr::n(p.clone()), f.clone()]), &ctx));
                out.push(est(Expr::n(Prop::not(p.clone())), &ctx));
                let q = gen::random_prop(r, vocab, 1);
                out.push(est(Expr::n(Prop::or(p.clone(), q.clone())), &ctx));
                out.push(est(Expr::n(Prop::and(p.clone(), q)), &ctx));
            }
        }
        RuleKind::DeltaAsProp | RuleKind::PropAsDelta | RuleKind::CompletenessExpand => {
            if let (Some(x), Some(c)) = (&x, &point) {
                let Expr::Const(cv) = c else { unreachable!() };
                let Expr::Unknown(xs) = x else { unreachable!() };
                out.push(est(Expr::mul(vec![Expr::delta(c.clone(), x.clone()), f.clone()]), &ctx));
                out.push(est(
                    Expr::add(vec![Expr::n(Prop::Equals(xs.clone(), cv.clone())), f.clone()]),
                    &ctx,
                ));
                out.push(est(Expr::mul(vec![x.clone(), f.clone()]), &ctx));
                out.push(est(Expr::add(vec![x.clone(), g.clone()]), &ctx));
            }
        }
        RuleKind::LinearSum => {
            out.push(est(
                Expr::add(vec![
                    Expr::mul(vec![coeff(r), f.clone()]),
                    Expr::mul(vec![coeff(r), g.clone()]),
                    coeff(r),
                ]),
                &ctx,
            ));
        }
        RuleKind::LinearMerge => {
            out.push(Expr::add(vec![
                Expr::mul(vec![coeff(r), est(f.clone(), &ctx)]),
                Expr::mul(vec![coeff(r), est(g.clone(), &ctx)]),
            ]));
        }
        RuleKind::ScalarOut => {
            out.push(est(Expr::mul(vec![coeff(r), f.clone()]), &ctx));
            out.push(est(Expr::mul(vec![est(g.clone(), &ctx), f.clone()]), &ctx));
            if let (Some((xs, d)), Some(x)) = (&var, &x) {
                let mut fixed = ctx.clone();
                if fixed.assignments().contains_key(xs) {
                    fixed = Context::new("I");
                }
                let v = d.iter().find(|v| **v != int(0) && **v != int(1)).unwrap_or(&d[0]);
                fixed.insert_assignment(xs.clone(), v.clone()).expect("fresh");
                out.push(est(Expr::mul(vec![x.clone(), f.clone()]), &fixed));
            }
        }
        RuleKind::Tower => {
            let mut inner = ctx.clone();
            if inner.insert_param(random_param(r, m, vocab)).is_ok() {
                out.push(est(est(f.clone(), &inner), &ctx));
            }
        }
        RuleKind::TowerExpand => {
            out.push(est(f.clone(), &ctx));
            out.push(est(Expr::mul(vec![f.clone(), g.clone()]), &ctx));
        }
        RuleKind::TwoValued => {
            if let Some(p) = &prop {
                if let Ok(inner) = ctx.clone().param_prop(p.clone()) {
                    out.push(est(Expr::mul(vec![Expr::n(p.clone()), est(f.clone(), &inner)]), &ctx));
                }
                out.push(est(
                    Expr::mul(vec![Expr::n(p.clone()), Expr::n(Prop::or(p.clone(), gen::random_prop(r, vocab, 1))), f.clone()]),
                    &ctx,
                ));
            }
            if let (Some(x), Some(c)) = (&x, &point) {
                out.push(est(Expr::mul(vec![Expr::delta(c.clone(), x.clone()), x.clone(), f.clone()]), &ctx));
            }
            if m.var_index(&Symbol::new("a")).is_some() {
                let a = Expr::unknown("a");
                if let Ok(inner) = Context::new("I").param_unknown("a") {
                    out.push(est(
                        Expr::mul(vec![a.clone(), est(f.clone(), &inner)]),
                        &Context::new("I"),
                    ));
                }
                out.push(est(Expr::mul(vec![a.clone(), a.clone(), f.clone()]), &ctx));
            }
        }
        RuleKind::DeltaPartition => {
            if let Some((xs, d)) = &var {
                let all: Vec<Expr> = d
                    .iter()
                    .map(|v| Expr::delta(Expr::Const(v.clone()), Expr::Unknown(xs.clone())))
                    .collect();
                out.push(est(Expr::mul(vec![Expr::add(all.clone()), f.clone()]), &ctx));
                out.push(est(Expr::add(all), &ctx));
            }
        }
    }
    out.into_iter().map(|e| canonicalize(&e)).collect()
}

/// Checks one firing. Cases whose input cannot be evaluated are skipped;
/// an output that cannot be evaluated when the input could is a failure.
fn check_firing(report: &mut PropertyReport, m: &Model, rule: &Rule, before: &Expr, path: &[usize], after: &Expr) {
    let lhs = match oracle_eval(before, m) {
        Ok(v) => v,
        Err(_) => {
            report.skip();
            return;
        }
    };
    let what = || {
        format!(
            "{} @ {}: {} ⇒ {}",
            rule.name(),
            format_path(path),
            print_expr(before),
            print_expr(after)
        )
    };
    match oracle_eval(after, m) {
        Ok(rhs) if rhs == lhs => report.pass(),
        Ok(rhs) => report.fail(before.node_count(), || describe_case(m, &what(), &lhs, &rhs)),
        Err(OracleError::ZeroWeightConditioning { .. }) => report.skip(),
        Err(e) => report.fail(before.node_count(), || {
            format!("{}\n  left = {lhs}, right fails: {e}\n  model = {}", what(), model_to_json(m))
        }),
    }
}

/// Soundness of every rule, each over `trials` rounds of fresh templates
/// and random expressions on models from the pool.
pub fn check_rule_soundness(engine: &Engine, models: &[Model], trials: usize, seed: u64) -> Vec<PropertyReport> {
    let mut reports = Vec::new();
    for (k, kind) in RuleKind::ALL.into_iter().enumerate() {
        let mut report = PropertyReport::new(&format!("rule soundness: {}", kind.name()));
        let mut r = gen::rng(seed.wrapping_add(k as u64 * 7919));
        for t in 0..trials {
            let m = &models[t % models.len()];
            let vocab = Vocabulary::of_model(m);
            let local = engine.clone().declare_from_model(m);
            let rule = rule_for(kind, &mut r, m, &vocab);
            if rule.kind() != kind {
                continue;
            }
            for e in templates(kind, &mut r, m, &vocab) {
                for path in e.positions() {
                    if let Ok(Some(after)) = local.rewrite_at(&rule, &e, &path) {
                        check_firing(&mut report, m, &rule, &e, &path, &after);
                    }
                }
            }
        }
        reports.push(report);
    }
    reports
}

/// Requirement 1 at the encoding level: normalizing `est(n(P) | I)` yields
/// a value in [0, 1] under every model.
pub fn check_probability_range(engine: &Engine, models: &[Model], props: usize, seed: u64) -> PropertyReport {
    let mut report = PropertyReport::new("normalized probabilities lie in [0, 1]");
    let mut r = gen::rng(seed);
    let vocab = Vocabulary {
        variables: Vec::new(),
        atoms: vec![Symbol::new("A"), Symbol::new("B")],
    };
    for _ in 0..props {
        let p = gen::random_prop(&mut r, &vocab, 3);
        let e = Expr::est(Expr::n(p), Context::new("I"));
        let normal = match engine.normalize(&e) {
            Ok((n, _)) => n,
            Err(err) => {
                report.fail(e.node_count(), || format!("{}: {err}", print_expr(&e)));
                continue;
            }
        };
        for m in models.iter().filter(|m| m.variables().is_empty()) {
            match oracle_eval(&normal, m) {
                Ok(v) if v >= int(0) && v <= int(1) => report.pass(),
                Ok(v) => report.fail(e.node_count(), || {
                    format!(
                        "{} normalizes to {} = {v}\n  model = {}",
                        print_expr(&e),
                        print_expr(&normal),
                        model_to_json(m)
                    )
                }),
                Err(_) => report.skip(),
            }
        }
    }
    report
}
