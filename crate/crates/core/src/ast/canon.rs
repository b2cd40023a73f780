use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{Expr, Rational};

/// Canonical form: n-ary `Add`/`Mul` flattened, constants folded into a
/// leading coefficient, like terms collected, children sorted by the
/// structural order on [`Expr`], constant multiples of sums distributed,
/// and deltas between equal sides folded.
///
/// Structural equality on canonical forms is what traces and round-trip
/// checks compare.
pub fn canonicalize(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Unknown(_) | Expr::PropEnc(_) => e.clone(),
        Expr::KDelta(a, b) => {
            let (a, b) = (canonicalize(a), canonicalize(b));
            match (&a, &b) {
                (Expr::Const(x), Expr::Const(y)) => bool_const(x == y),
                _ if a == b => Expr::one(),
                _ => Expr::delta(a, b),
            }
        }
        Expr::Estim(body, ctx) => Expr::Estim(Box::new(canonicalize(body)), ctx.clone()),
        Expr::Mul(xs) => canon_mul(xs.iter().map(canonicalize)),
        Expr::Add(xs) => canon_add(xs.iter().map(canonicalize).collect()),
    }
}

pub fn is_canonical(e: &Expr) -> bool {
    canonicalize(e) == *e
}

fn bool_const(b: bool) -> Expr {
    if b {
        Expr::one()
    } else {
        Expr::zero()
    }
}

fn canon_mul(children: impl Iterator<Item = Expr>) -> Expr {
    let mut coeff = Rational::one();
    let mut factors = Vec::new();
    for child in children {
        match child {
            Expr::Const(v) => coeff *= v,
            Expr::Mul(ys) => {
                for y in ys {
                    match y {
                        Expr::Const(v) => coeff *= v,
                        other => factors.push(other),
                    }
                }
            }
            other => factors.push(other),
        }
    }
    if coeff.is_zero() {
        return Expr::zero();
    }
    if !coeff.is_one() && factors.len() == 1 && matches!(factors[0], Expr::Add(_)) {
        // Constant multiples of sums are distributed.
        let Some(Expr::Add(terms)) = factors.pop() else {
            unreachable!()
        };
        return canon_add(
            terms
                .into_iter()
                .map(|t| canon_mul([Expr::Const(coeff.clone()), t].into_iter()))
                .collect(),
        );
    }
    factors.sort();
    build_mul(coeff, factors)
}

fn build_mul(coeff: Rational, mut factors: Vec<Expr>) -> Expr {
    if factors.is_empty() {
        return Expr::Const(coeff);
    }
    if coeff.is_one() {
        if factors.len() == 1 {
            return factors.pop().unwrap();
        }
        return Expr::Mul(factors);
    }
    let mut out = Vec::with_capacity(factors.len() + 1);
    out.push(Expr::Const(coeff));
    out.extend(factors);
    Expr::Mul(out)
}

/// Splits a canonical term into its rational coefficient and the rest.
pub(crate) fn split_coeff(term: Expr) -> (Rational, Expr) {
    match term {
        Expr::Mul(mut xs) if matches!(xs.first(), Some(Expr::Const(_))) => {
            let Expr::Const(c) = xs.remove(0) else {
                unreachable!()
            };
            (c, build_mul(Rational::one(), xs))
        }
        other => (Rational::one(), other),
    }
}

fn scale(coeff: Rational, term: Expr) -> Expr {
    match term {
        Expr::Mul(xs) => build_mul(coeff, xs),
        other => build_mul(coeff, vec![other]),
    }
}

fn canon_add(mut pending: Vec<Expr>) -> Expr {
    loop {
        let mut constant = Rational::zero();
        let mut grouped: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut stack = std::mem::take(&mut pending);
        while let Some(child) = stack.pop() {
            match child {
                Expr::Const(v) => constant += v,
                Expr::Add(ys) => stack.extend(ys),
                other => {
                    let (c, rest) = split_coeff(other);
                    *grouped.entry(rest).or_insert_with(Rational::zero) += c;
                }
            }
        }

        let mut terms = Vec::new();
        let mut reflatten = false;
        for (rest, c) in grouped {
            if c.is_zero() {
                continue;
            }
            let term = scale(c, rest);
            reflatten |= matches!(term, Expr::Add(_));
            terms.push(term);
        }
        if reflatten {
            // A coefficient collapsed to 1 on a parenthesized sum.
            pending = terms;
            pending.push(Expr::Const(constant));
            continue;
        }

        return match (constant.is_zero(), terms.len()) {
            (_, 0) => Expr::Const(constant),
            (true, 1) => terms.pop().unwrap(),
            (true, _) => Expr::Add(terms),
            (false, _) => {
                let mut out = vec![Expr::Const(constant)];
                out.extend(terms);
                Expr::Add(out)
            }
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{rat, Context};

    fn x() -> Expr {
        Expr::unknown("x")
    }
    fn y() -> Expr {
        Expr::unknown("y")
    }

    #[test]
    fn folds_and_flattens() {
        let e = Expr::add(vec![
            Expr::int(1),
            Expr::add(vec![x(), Expr::Const(rat(1, 2))]),
            Expr::mul(vec![Expr::int(2), Expr::mul(vec![y(), Expr::int(3)])]),
        ]);
        let want = Expr::Add(vec![
            Expr::Const(rat(3, 2)),
            x(),
            Expr::Mul(vec![Expr::int(6), y()]),
        ]);
        assert_eq!(canonicalize(&e), want);
    }

    #[test]
    fn collects_like_terms() {
        let e = Expr::add(vec![x(), y(), Expr::neg(x())]);
        assert_eq!(canonicalize(&e), y());
        let e = Expr::add(vec![x(), x()]);
        assert_eq!(canonicalize(&e), Expr::Mul(vec![Expr::int(2), x()]));
    }

    #[test]
    fn unit_coefficient_sum_is_reflattened() {
        let s = Expr::add(vec![x(), y()]);
        let e = Expr::add(vec![
            Expr::mul(vec![Expr::int(2), s.clone()]),
            Expr::neg(s),
        ]);
        assert_eq!(canonicalize(&e), Expr::Add(vec![x(), y()]));
    }

    #[test]
    fn zero_factor_annihilates() {
        let e = Expr::mul(vec![x(), Expr::int(0), y()]);
        assert_eq!(canonicalize(&e), Expr::zero());
    }

    #[test]
    fn constant_deltas_fold() {
        assert_eq!(canonicalize(&Expr::delta(Expr::int(2), Expr::int(2))), Expr::one());
        assert_eq!(canonicalize(&Expr::delta(Expr::int(2), Expr::int(3))), Expr::zero());
        assert_eq!(canonicalize(&Expr::delta(x(), x())), Expr::one());
    }

    #[test]
    fn sorts_products_with_probability_terms_in_order() {
        let pa = Expr::est(Expr::bit("A"), Context::new("I"));
        let pb = Expr::est(
            Expr::bit("B"),
            Context::new("I").assert(crate::ast::Prop::atom("A")),
        );
        let e = Expr::mul(vec![pb.clone(), pa.clone()]);
        assert_eq!(canonicalize(&e), Expr::Mul(vec![pa, pb]));
    }

    #[test]
    fn idempotent_on_nested_input() {
        let e = Expr::mul(vec![
            Expr::int(-1),
            Expr::add(vec![x(), Expr::add(vec![y(), Expr::int(-3)])]),
            Expr::est(Expr::add(vec![y(), y()]), Context::new("I")),
        ]);
        let once = canonicalize(&e);
        assert_eq!(canonicalize(&once), once);
        assert!(is_canonical(&once));
    }
}
