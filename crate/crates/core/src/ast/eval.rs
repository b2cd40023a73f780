use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::{Context, EvalError, Expr, Param, Prop, PropValue, Rational, Symbol};

/// Values for unknowns and truth values for atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    pub unknowns: BTreeMap<Symbol, Rational>,
    pub atoms: BTreeMap<Symbol, bool>,
    /// Whole propositions with a known truth value.
    pub props: BTreeMap<Prop, bool>,
}

impl Subst {
    pub fn unknown(mut self, name: &str, value: Rational) -> Self {
        self.unknowns.insert(Symbol::new(name), value);
        self
    }

    pub fn atom(mut self, name: &str, value: bool) -> Self {
        self.atoms.insert(Symbol::new(name), value);
        self
    }

    pub fn prop(mut self, prop: Prop, value: bool) -> Self {
        self.props.insert(prop, value);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.unknowns.is_empty() && self.atoms.is_empty() && self.props.is_empty()
    }
}

/// Symbols an expression depends on from the outside.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub unknowns: BTreeSet<Symbol>,
    pub atoms: BTreeSet<Symbol>,
}

impl FreeVars {
    pub fn is_empty(&self) -> bool {
        self.unknowns.is_empty() && self.atoms.is_empty()
    }

    fn absorb(&mut self, other: FreeVars) {
        self.unknowns.extend(other.unknowns);
        self.atoms.extend(other.atoms);
    }
}

/// Free unknowns and atoms. An estimation node only exposes its context's
/// params: everything else in its body is either fixed or averaged out.
pub fn free_vars(e: &Expr) -> FreeVars {
    let mut out = FreeVars::default();
    match e {
        Expr::Const(_) => {}
        Expr::Unknown(u) => {
            out.unknowns.insert(u.clone());
        }
        Expr::PropEnc(p) => p.collect_symbols(&mut out.atoms, &mut out.unknowns),
        Expr::KDelta(a, b) => {
            out.absorb(free_vars(a));
            out.absorb(free_vars(b));
        }
        Expr::Estim(_, ctx) => {
            for param in ctx.params() {
                match param {
                    Param::Unknown(u) => {
                        out.unknowns.insert(u.clone());
                    }
                    Param::Prop(p) => p.collect_symbols(&mut out.atoms, &mut out.unknowns),
                }
            }
        }
        Expr::Mul(xs) | Expr::Add(xs) => {
            for x in xs {
                out.absorb(free_vars(x));
            }
        }
    }
    out
}

pub fn free_unknowns(e: &Expr) -> BTreeSet<Symbol> {
    free_vars(e).unknowns
}

/// Replaces free occurrences of the symbols fixed by `subst`.
///
/// Estimation bodies are left alone; only their params are specialized.
/// The result is not canonicalized.
pub fn substitute(e: &Expr, subst: &Subst) -> Expr {
    match e {
        Expr::Const(_) => e.clone(),
        Expr::Unknown(u) => match subst.unknowns.get(u) {
            Some(v) => Expr::Const(v.clone()),
            None => e.clone(),
        },
        Expr::PropEnc(p) => match p.partial_eval(subst) {
            PropValue::Known(true) => Expr::one(),
            PropValue::Known(false) => Expr::zero(),
            PropValue::Residual(q) => Expr::PropEnc(q),
        },
        Expr::KDelta(a, b) => Expr::delta(substitute(a, subst), substitute(b, subst)),
        Expr::Estim(body, ctx) => Expr::Estim(body.clone(), specialize_ctx(ctx, subst)),
        Expr::Mul(xs) => Expr::Mul(xs.iter().map(|x| substitute(x, subst)).collect()),
        Expr::Add(xs) => Expr::Add(xs.iter().map(|x| substitute(x, subst)).collect()),
    }
}

fn specialize_ctx(ctx: &Context, subst: &Subst) -> Context {
    if subst.is_empty() {
        ctx.clone()
    } else {
        ctx.specialize(subst)
    }
}

fn indicator(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// Exact value of an estimation-free expression under a total assignment.
pub fn eval_ground(e: &Expr, values: &Subst) -> Result<Rational, EvalError> {
    Ok(match e {
        Expr::Const(c) => c.clone(),
        Expr::Unknown(u) => values
            .unknowns
            .get(u)
            .cloned()
            .ok_or_else(|| EvalError::UnboundSymbol(u.clone()))?,
        Expr::PropEnc(p) => indicator(p.eval_with(
            &|a| values.atoms.get(a).copied(),
            &|u| values.unknowns.get(u).cloned(),
        )?),
        Expr::KDelta(a, b) => indicator(eval_ground(a, values)? == eval_ground(b, values)?),
        Expr::Estim(..) => return Err(EvalError::NotGround),
        Expr::Mul(xs) => {
            let mut acc = Rational::one();
            for x in xs {
                acc *= eval_ground(x, values)?;
            }
            acc
        }
        Expr::Add(xs) => {
            let mut acc = Rational::zero();
            for x in xs {
                acc += eval_ground(x, values)?;
            }
            acc
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{encode_prop, int, rat};

    #[test]
    fn ground_constants_and_deltas() {
        let empty = Subst::default();
        assert_eq!(eval_ground(&Expr::Const(rat(3, 2)), &empty).unwrap(), rat(3, 2));
        let e = Expr::delta(Expr::unknown("x"), Expr::int(2));
        let s = Subst::default().unknown("x", int(2));
        assert_eq!(eval_ground(&e, &s).unwrap(), int(1));
        let s = Subst::default().unknown("x", int(3));
        assert_eq!(eval_ground(&e, &s).unwrap(), int(0));
    }

    #[test]
    fn ground_or_false_true_is_one() {
        let e = encode_prop(&Prop::or(Prop::atom("A"), Prop::atom("B")));
        let s = Subst::default().atom("A", false).atom("B", true);
        assert_eq!(eval_ground(&e, &s).unwrap(), int(1));
    }

    #[test]
    fn unbound_symbols_are_reported() {
        let e = Expr::add(vec![Expr::unknown("x"), Expr::bit("A")]);
        let s = Subst::default().unknown("x", int(1));
        assert_eq!(
            eval_ground(&e, &s),
            Err(EvalError::UnboundSymbol(Symbol::new("A")))
        );
        let est = Expr::est(Expr::unknown("x"), Context::new("I"));
        assert_eq!(eval_ground(&est, &s), Err(EvalError::NotGround));
    }

    #[test]
    fn free_unknowns_respect_estimation_binding() {
        // est(x*y | x=2, I): x fixed, y averaged out.
        let e = Expr::est(
            Expr::mul(vec![Expr::unknown("x"), Expr::unknown("y")]),
            Context::new("I").assign("x", int(2)).unwrap(),
        );
        assert!(free_unknowns(&e).is_empty());

        let e = Expr::add(vec![Expr::unknown("x"), Expr::unknown("y")]);
        let names: Vec<_> = free_unknowns(&e).into_iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["x", "y"]);

        let inner = Expr::est(
            Expr::unknown("y"),
            Context::new("I").param_unknown("x").unwrap(),
        );
        assert_eq!(
            free_unknowns(&inner).into_iter().collect::<Vec<_>>(),
            vec![Symbol::new("x")]
        );
        let outer = Expr::est(inner, Context::new("I"));
        assert!(free_unknowns(&outer).is_empty());
    }

    #[test]
    fn substitution_specializes_params_but_not_bodies() {
        // n(A) * est(n(A) | I): the inner n(A) is bound and must survive.
        let inner_bound = Expr::est(Expr::bit("A"), Context::new("I"));
        let inner_param = Expr::est(Expr::bit("B"), Context::new("I").param_atom("A").unwrap());
        let e = Expr::mul(vec![Expr::bit("A"), inner_bound.clone(), inner_param]);
        let s = Subst::default().atom("A", true);
        let got = substitute(&e, &s);
        let want = Expr::mul(vec![
            Expr::one(),
            inner_bound,
            Expr::est(Expr::bit("B"), Context::new("I").assert(Prop::atom("A"))),
        ]);
        assert_eq!(got, want);
    }
}
