use std::collections::BTreeSet;

use num_traits::One;

use super::{Engine, Rule, RuleKind};
use crate::ast::{encode_top, split_coeff, substitute, Expr, Param, Prop, Rational, Subst, Symbol};

pub(super) fn apply(engine: &Engine, rule: &Rule, e: &Expr) -> Option<Expr> {
    let broken = engine.fault == Some(rule.kind());
    match rule {
        Rule::KnownEval => known_eval(e, broken),
        Rule::PropEncode => prop_encode(e, broken),
        Rule::DeltaAsProp => delta_as_prop(e, broken),
        Rule::PropAsDelta => prop_as_delta(e, broken),
        Rule::LinearSum => linear_sum(e, broken),
        Rule::LinearMerge => linear_merge(e, broken),
        Rule::ScalarOut => scalar_out(e, broken),
        Rule::Tower => tower(e, broken),
        Rule::TowerExpand { param } => tower_expand(e, param, broken),
        Rule::TwoValued => two_valued_with(engine, e, None),
        Rule::CompletenessExpand { var, domain } => completeness_expand(e, var, domain, broken),
        Rule::DeltaPartition { var, domain } => delta_partition(e, var, domain, broken),
    }
}

fn plus_one(e: Expr) -> Expr {
    Expr::add(vec![e, Expr::one()])
}

/// est(f | ctx) with f determined by ctx becomes f with the fixed values
/// substituted.
fn known_eval(e: &Expr, broken: bool) -> Option<Expr> {
    let Expr::Estim(body, ctx) = e else {
        return None;
    };
    if !ctx.knows(body) {
        return None;
    }
    let out = substitute(body, &ctx.fixed_values());
    Some(if broken { plus_one(out) } else { out })
}

/// Expands the outermost connective of a compound `n(p)`.
fn prop_encode(e: &Expr, broken: bool) -> Option<Expr> {
    let Expr::PropEnc(p) = e else {
        return None;
    };
    if !broken {
        return encode_top(p);
    }
    Some(match p {
        Prop::Atom(_) | Prop::Equals(..) => return None,
        Prop::Not(q) => Expr::n((**q).clone()),
        Prop::And(a, _) => Expr::n((**a).clone()),
        Prop::Or(a, b) => Expr::add(vec![Expr::n((**a).clone()), Expr::n((**b).clone())]),
    })
}

fn delta_parts(e: &Expr) -> Option<(Symbol, Rational)> {
    let Expr::KDelta(a, b) = e else {
        return None;
    };
    match (a.as_ref(), b.as_ref()) {
        (Expr::Unknown(u), Expr::Const(c)) | (Expr::Const(c), Expr::Unknown(u)) => {
            Some((u.clone(), c.clone()))
        }
        _ => None,
    }
}

fn delta_as_prop(e: &Expr, broken: bool) -> Option<Expr> {
    let (u, c) = delta_parts(e)?;
    let p = Prop::Equals(u, c);
    Some(Expr::n(if broken { Prop::not(p) } else { p }))
}

fn prop_as_delta(e: &Expr, broken: bool) -> Option<Expr> {
    let Expr::PropEnc(Prop::Equals(u, c)) = e else {
        return None;
    };
    let c = if broken { c + Rational::one() } else { c.clone() };
    Some(Expr::delta(Expr::Const(c), Expr::Unknown(u.clone())))
}

/// est(c0 + sum c_i t_i | ctx) becomes c0 + sum c_i est(t_i | ctx).
fn linear_sum(e: &Expr, broken: bool) -> Option<Expr> {
    let Expr::Estim(body, ctx) = e else {
        return None;
    };
    let Expr::Add(terms) = body.as_ref() else {
        return None;
    };
    let mut out: Vec<Expr> = terms
        .iter()
        .map(|t| match t {
            Expr::Const(_) => t.clone(),
            _ => {
                let (c, rest) = split_coeff(t.clone());
                Expr::mul(vec![Expr::Const(c), Expr::est(rest, ctx.clone())])
            }
        })
        .collect();
    if broken {
        out.pop();
    }
    Some(Expr::add(out))
}

/// sum c_i est(t_i | ctx) over one shared context becomes
/// est(sum c_i t_i | ctx).
fn linear_merge(e: &Expr, broken: bool) -> Option<Expr> {
    let Expr::Add(terms) = e else {
        return None;
    };
    let mut ctx = None;
    let mut inner = Vec::with_capacity(terms.len());
    for t in terms {
        let (c, rest) = split_coeff(t.clone());
        let Expr::Estim(body, tctx) = rest else {
            return None;
        };
        match &ctx {
            None => ctx = Some(tctx),
            Some(shared) if *shared == tctx => {}
            Some(_) => return None,
        }
        inner.push(if broken {
            *body
        } else {
            Expr::mul(vec![Expr::Const(c), *body])
        });
    }
    Some(Expr::est(Expr::add(inner), ctx?))
}

/// est(k * r | ctx) with k known under ctx becomes k * est(r | ctx).
fn scalar_out(e: &Expr, broken: bool) -> Option<Expr> {
    let Expr::Estim(body, ctx) = e else {
        return None;
    };
    let Expr::Mul(factors) = body.as_ref() else {
        return None;
    };
    let (known, rest): (Vec<&Expr>, Vec<&Expr>) = factors.iter().partition(|f| ctx.knows(f));
    if known.is_empty() || rest.is_empty() {
        return None;
    }
    let fixed = ctx.fixed_values();
    let mut out: Vec<Expr> = known.iter().map(|f| substitute(f, &fixed)).collect();
    let inner: Vec<Expr> = if broken {
        factors.clone()
    } else {
        rest.into_iter().cloned().collect()
    };
    out.push(Expr::est(Expr::mul(inner), ctx.clone()));
    Some(Expr::mul(out))
}

/// est(est(y | params, ctx) | ctx) becomes est(y | ctx).
fn tower(e: &Expr, broken: bool) -> Option<Expr> {
    let Expr::Estim(body, outer) = e else {
        return None;
    };
    let Expr::Estim(y, inner) = body.as_ref() else {
        return None;
    };
    if !inner.extends_with_params(outer) {
        return None;
    }
    Some(if broken {
        (**body).clone()
    } else {
        Expr::est((**y).clone(), outer.clone())
    })
}

/// est(y | ctx) becomes est(est(y | param, ctx) | ctx).
fn tower_expand(e: &Expr, param: &Param, broken: bool) -> Option<Expr> {
    let Expr::Estim(y, outer) = e else {
        return None;
    };
    if outer.params().contains(param) {
        return None;
    }
    let mut inner = outer.clone();
    match (param, broken) {
        (Param::Prop(p), true) => inner = inner.assert(p.clone()),
        (Param::Unknown(_), true) => {
            inner = outer.bare();
            for q in outer.params() {
                inner.insert_param(q.clone()).ok()?;
            }
            inner.insert_param(param.clone()).ok()?;
        }
        (_, false) => inner.insert_param(param.clone()).ok()?,
    }
    Some(Expr::est(Expr::est((**y).clone(), inner), outer.clone()))
}

/// What a two-valued factor being 1 pins down, or `None` when the factor is
/// not certified two-valued.
fn certify(engine: &Engine, factor: &Expr, broken: bool) -> Option<Subst> {
    let truth = !broken;
    match factor {
        Expr::PropEnc(p) => {
            let mut s = Subst::default().prop(p.clone(), truth);
            match p {
                Prop::Atom(a) => {
                    s.atoms.insert(a.clone(), truth);
                }
                Prop::Equals(u, c) if truth => {
                    s.unknowns.insert(u.clone(), c.clone());
                }
                _ => {}
            }
            Some(s)
        }
        Expr::KDelta(..) => {
            let (u, c) = delta_parts(factor)?;
            let c = if broken { c + Rational::one() } else { c };
            Some(Subst {
                unknowns: [(u, c)].into(),
                ..Subst::default()
            })
        }
        Expr::Unknown(u) if engine.is_two_valued(u) => {
            let v = if broken { Rational::from_integer(0.into()) } else { Rational::one() };
            Some(Subst {
                unknowns: [(u.clone(), v)].into(),
                ..Subst::default()
            })
        }
        _ => None,
    }
}

/// In a product a * F, with `a` in {0, 1}, F may assume a = 1. `only`
/// restricts the choice of `a` to one declared unknown.
pub(super) fn two_valued_with(engine: &Engine, e: &Expr, only: Option<&Symbol>) -> Option<Expr> {
    let Expr::Mul(factors) = e else {
        return None;
    };
    let broken = engine.fault == Some(RuleKind::TwoValued);
    for (i, f) in factors.iter().enumerate() {
        if let Some(var) = only {
            if !matches!(f, Expr::Unknown(u) if u == var) {
                continue;
            }
        }
        let Some(subst) = certify(engine, f, broken) else {
            continue;
        };
        let mut changed = false;
        let out: Vec<Expr> = factors
            .iter()
            .enumerate()
            .map(|(j, g)| {
                if i == j {
                    return g.clone();
                }
                let h = substitute(g, &subst);
                changed |= h != *g;
                h
            })
            .collect();
        if changed {
            return Some(Expr::Mul(out));
        }
    }
    None
}

fn completeness_expand(e: &Expr, var: &Symbol, domain: &[Rational], broken: bool) -> Option<Expr> {
    if !matches!(e, Expr::Unknown(u) if u == var) || domain.is_empty() {
        return None;
    }
    let points = if broken { &domain[..domain.len() - 1] } else { domain };
    Some(Expr::add(
        points
            .iter()
            .map(|c| {
                Expr::mul(vec![
                    Expr::Const(c.clone()),
                    Expr::delta(Expr::Const(c.clone()), Expr::Unknown(var.clone())),
                ])
            })
            .collect(),
    ))
}

fn delta_partition(e: &Expr, var: &Symbol, domain: &[Rational], broken: bool) -> Option<Expr> {
    let terms: Vec<&Expr> = match e {
        Expr::Add(ts) => ts.iter().collect(),
        Expr::KDelta(..) => vec![e],
        _ => return None,
    };
    let mut seen = BTreeSet::new();
    for t in terms {
        let (u, c) = delta_parts(t)?;
        if u != *var || !seen.insert(c) {
            return None;
        }
    }
    let wanted: BTreeSet<Rational> = domain.iter().cloned().collect();
    if seen != wanted {
        return None;
    }
    Some(if broken {
        let last = domain.last()?.clone();
        Expr::sub(
            Expr::one(),
            Expr::delta(Expr::Const(last), Expr::Unknown(var.clone())),
        )
    } else {
        Expr::one()
    })
}
