use std::fmt::{self, Write};

use num_traits::One;

use super::is_negative;
use crate::ast::{Context, Expr, Param, Prop};

/// Renders an expression in the input syntax. Parsing the output yields the
/// canonical form of the input.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_sum(&mut out, e, Style::Keyword);
    out
}

/// Renders estimation nodes as `{body}_{ctx}` instead of `est(body | ctx)`.
/// For display only; the parser does not read this form.
pub fn print_braces(e: &Expr) -> String {
    let mut out = String::new();
    write_sum(&mut out, e, Style::Braces);
    out
}

pub fn print_prop(p: &Prop) -> String {
    let mut out = String::new();
    write_prop(&mut out, p, 0);
    out
}

pub fn print_context(ctx: &Context) -> String {
    let mut items: Vec<String> = Vec::new();
    for (u, v) in ctx.assignments() {
        items.push(format!("{u}={v}"));
    }
    for p in ctx.params() {
        items.push(match p {
            Param::Unknown(u) => u.to_string(),
            Param::Prop(p) => format!("n({})", print_prop(p)),
        });
    }
    for p in ctx.asserted() {
        let mut s = String::new();
        match p {
            Prop::Atom(a) if a.is_proposition_style() => s.push_str(a.as_str()),
            Prop::Not(_) => write_prop(&mut s, p, 2),
            _ => {
                s.push('(');
                write_prop(&mut s, p, 0);
                s.push(')');
            }
        }
        items.push(s);
    }
    items.push(ctx.background().to_string());
    items.join(", ")
}

#[derive(Clone, Copy)]
enum Style {
    Keyword,
    Braces,
}

/// If `term` carries a negative leading coefficient, returns the term with
/// the sign flipped so it can be printed after ` - `.
fn negated(term: &Expr) -> Option<Expr> {
    match term {
        Expr::Const(c) if is_negative(c) => Some(Expr::Const(-c.clone())),
        Expr::Mul(xs) => match xs.first() {
            Some(Expr::Const(c)) if is_negative(c) => {
                let flipped = -c.clone();
                let rest: Vec<Expr> = xs[1..].to_vec();
                Some(if flipped.is_one() {
                    if rest.len() == 1 {
                        rest.into_iter().next().unwrap()
                    } else {
                        Expr::Mul(rest)
                    }
                } else {
                    let mut v = vec![Expr::Const(flipped)];
                    v.extend(rest);
                    Expr::Mul(v)
                })
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_sum(out: &mut String, e: &Expr, style: Style) {
    let Expr::Add(terms) = e else {
        write_product(out, e, style);
        return;
    };
    for (i, t) in terms.iter().enumerate() {
        if i == 0 {
            write_term(out, t, style);
        } else if let Some(pos) = negated(t) {
            out.push_str(" - ");
            write_term(out, &pos, style);
        } else {
            out.push_str(" + ");
            write_term(out, t, style);
        }
    }
}

fn write_term(out: &mut String, t: &Expr, style: Style) {
    if matches!(t, Expr::Add(_)) {
        out.push('(');
        write_sum(out, t, style);
        out.push(')');
    } else {
        write_product(out, t, style);
    }
}

fn write_product(out: &mut String, e: &Expr, style: Style) {
    let Expr::Mul(factors) = e else {
        write_atom(out, e, style);
        return;
    };
    for (i, f) in factors.iter().enumerate() {
        if i > 0 {
            out.push_str(" * ");
        }
        if matches!(f, Expr::Add(_) | Expr::Mul(_)) {
            out.push('(');
            write_sum(out, f, style);
            out.push(')');
        } else {
            write_atom(out, f, style);
        }
    }
}

fn write_atom(out: &mut String, e: &Expr, style: Style) {
    match e {
        Expr::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Expr::Unknown(u) => out.push_str(u.as_str()),
        Expr::PropEnc(p) => {
            out.push_str("n(");
            write_prop(out, p, 0);
            out.push(')');
        }
        Expr::KDelta(a, b) => {
            out.push_str("delta(");
            write_sum(out, a, style);
            out.push_str(", ");
            write_sum(out, b, style);
            out.push(')');
        }
        Expr::Estim(body, ctx) => match style {
            Style::Keyword => {
                out.push_str("est(");
                write_sum(out, body, style);
                out.push_str(" | ");
                out.push_str(&print_context(ctx));
                out.push(')');
            }
            Style::Braces => {
                out.push('{');
                write_sum(out, body, style);
                out.push_str("}_{");
                out.push_str(&print_context(ctx));
                out.push('}');
            }
        },
        Expr::Add(_) | Expr::Mul(_) => {
            out.push('(');
            write_sum(out, e, style);
            out.push(')');
        }
    }
}

fn prop_prec(p: &Prop) -> u8 {
    match p {
        Prop::Or(..) => 0,
        Prop::And(..) => 1,
        Prop::Not(_) => 2,
        Prop::Atom(_) | Prop::Equals(..) => 3,
    }
}

fn write_prop(out: &mut String, p: &Prop, min: u8) {
    let wrap = prop_prec(p) < min;
    if wrap {
        out.push('(');
    }
    match p {
        Prop::Atom(a) => out.push_str(a.as_str()),
        Prop::Equals(u, v) => {
            let _ = write!(out, "{u}={v}");
        }
        Prop::Not(q) => {
            out.push_str("not ");
            write_prop(out, q, 2);
        }
        Prop::And(a, b) => {
            write_prop(out, a, 1);
            out.push_str(" and ");
            write_prop(out, b, 2);
        }
        Prop::Or(a, b) => {
            write_prop(out, a, 0);
            out.push_str(" or ");
            write_prop(out, b, 1);
        }
    }
    if wrap {
        out.push(')');
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_prop(self))
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_context(self))
    }
}
