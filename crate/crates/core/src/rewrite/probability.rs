use num_traits::{One, Signed};

use crate::ast::{Context, Expr, Param, Prop};
use crate::parser::print_expr;

/// Renders an expression with `est(n(P) | ctx)` written as `P(P|ctx)`.
///
/// Estimations of products of indicators read as conjunctions and deltas as
/// equalities; any other estimation is shown as `{body}_{ctx}`.
pub fn to_probability_form(e: &Expr) -> String {
    let mut out = String::new();
    sum(&mut out, e);
    out
}

fn sum(out: &mut String, e: &Expr) {
    let Expr::Add(terms) = e else {
        term(out, e);
        return;
    };
    for (i, t) in terms.iter().enumerate() {
        match (i, flip(t)) {
            (0, Some(pos)) => {
                out.push('−');
                term(out, &pos);
            }
            (0, None) => term(out, t),
            (_, Some(pos)) => {
                out.push_str(" − ");
                term(out, &pos);
            }
            (_, None) => {
                out.push_str(" + ");
                term(out, t);
            }
        }
    }
}

/// The term with a negative coefficient made positive.
fn flip(t: &Expr) -> Option<Expr> {
    match t {
        Expr::Const(c) if c.is_negative() => Some(Expr::Const(-c)),
        Expr::Mul(xs) => match xs.first() {
            Some(Expr::Const(c)) if c.is_negative() => {
                let mut rest = xs.clone();
                rest[0] = Expr::Const(-c);
                if rest[0] == Expr::one() {
                    rest.remove(0);
                }
                Some(if rest.len() == 1 {
                    rest.pop().unwrap()
                } else {
                    Expr::Mul(rest)
                })
            }
            _ => None,
        },
        _ => None,
    }
}

fn term(out: &mut String, t: &Expr) {
    let Expr::Mul(factors) = t else {
        factor(out, t);
        return;
    };
    let mut prev_prob = false;
    for (i, f) in factors.iter().enumerate() {
        let is_prob = probability(f).is_some();
        if i > 0 && !(prev_prob && is_prob) {
            out.push('·');
        }
        factor(out, f);
        prev_prob = is_prob;
    }
}

fn factor(out: &mut String, f: &Expr) {
    match f {
        Expr::Add(_) | Expr::Mul(_) => {
            out.push('(');
            sum(out, f);
            out.push(')');
        }
        Expr::Estim(body, ctx) => match probability(f) {
            Some(p) => out.push_str(&p),
            None => {
                out.push('{');
                sum(out, body);
                out.push_str("}_{");
                out.push_str(&context(ctx));
                out.push('}');
            }
        },
        Expr::Const(c) if c.is_one() => out.push('1'),
        _ => out.push_str(&print_expr(f)),
    }
}

/// `P(...)` text for an estimation of an indicator, if it is one.
fn probability(e: &Expr) -> Option<String> {
    let Expr::Estim(body, ctx) = e else {
        return None;
    };
    let event = event(body)?;
    Some(format!("P({}|{})", prop(&event, 0), context(ctx)))
}

fn event(body: &Expr) -> Option<Prop> {
    match body {
        Expr::PropEnc(p) => Some(p.clone()),
        Expr::KDelta(a, b) => match (a.as_ref(), b.as_ref()) {
            (Expr::Unknown(u), Expr::Const(c)) | (Expr::Const(c), Expr::Unknown(u)) => {
                Some(Prop::Equals(u.clone(), c.clone()))
            }
            _ => None,
        },
        Expr::Mul(xs) => {
            let mut parts = xs.iter().map(event);
            let first = parts.next()??;
            parts.try_fold(first, |acc, p| Some(Prop::and(acc, p?)))
        }
        _ => None,
    }
}

fn prec(p: &Prop) -> u8 {
    match p {
        Prop::Or(..) => 0,
        Prop::And(..) => 1,
        Prop::Not(_) => 2,
        Prop::Atom(_) | Prop::Equals(..) => 3,
    }
}

fn prop(p: &Prop, min: u8) -> String {
    let text = match p {
        Prop::Atom(a) => a.to_string(),
        Prop::Equals(u, v) => format!("{u}={v}"),
        Prop::Not(q) => format!("¬{}", prop(q, 2)),
        Prop::And(a, b) => format!("{} ∧ {}", prop(a, 1), prop(b, 2)),
        Prop::Or(a, b) => format!("{} ∨ {}", prop(a, 0), prop(b, 1)),
    };
    if prec(p) < min {
        format!("({text})")
    } else {
        text
    }
}

fn context(ctx: &Context) -> String {
    let mut items: Vec<String> = Vec::new();
    for (u, v) in ctx.assignments() {
        items.push(format!("{u}={v}"));
    }
    for p in ctx.params() {
        items.push(match p {
            Param::Unknown(u) => u.to_string(),
            Param::Prop(q) => format!("n({})", prop(q, 0)),
        });
    }
    for p in ctx.asserted() {
        items.push(prop(p, 2));
    }
    items.push(ctx.background().to_string());
    items.join(",")
}
