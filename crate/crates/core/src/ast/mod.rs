//! Expression language: quantities, propositions, and states of knowledge.
//!
//! An [`Expr`] is an immutable tree. Arithmetic is exact over
//! [`Rational`]. Estimation nodes pair a body with the [`Context`] it is
//! estimated under; everything a context mentions is either fixed by it
//! (assignments, asserted propositions) or passed in from outside (params).

mod canon;
mod encode;
mod eval;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub use canon::{canonicalize, is_canonical};
pub(crate) use canon::split_coeff;
pub(crate) use encode::encode_top;
pub use encode::encode_prop;
pub use eval::{eval_ground, free_unknowns, free_vars, substitute, FreeVars, Subst};

/// Exact rational number used for every constant and every discrete weight.
pub type Rational = num_rational::BigRational;

/// Position of a subexpression: child indices from the root.
pub type Path = Vec<usize>;

/// Builds a rational from an integer numerator and denominator.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Builds an integral rational.
pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Interned-style name for unknowns, atoms and background tokens.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Names starting with an uppercase letter denote propositions when they
    /// appear bare in a context.
    pub fn is_proposition_style(&self) -> bool {
        self.0.chars().next().is_some_and(char::is_uppercase)
    }
}

impl From<&str> for Symbol {
    fn from(name: &str) -> Self {
        Symbol::new(name)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AstError {
    #[error("unknown `{0}` is assigned more than once in one context")]
    DuplicateAssignment(Symbol),
    #[error("`{0}` is both assigned and a parameter of the same context")]
    ParamConflict(Symbol),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(Symbol),
    #[error("estimation node in an expression required to be ground")]
    NotGround,
}

/// Propositional formula over atoms and equality atoms `x = c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prop {
    Atom(Symbol),
    Equals(Symbol, Rational),
    Not(Box<Prop>),
    And(Box<Prop>, Box<Prop>),
    Or(Box<Prop>, Box<Prop>),
}

impl Prop {
    pub fn atom(name: &str) -> Prop {
        Prop::Atom(Symbol::new(name))
    }

    pub fn equals(name: &str, value: Rational) -> Prop {
        Prop::Equals(Symbol::new(name), value)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Prop) -> Prop {
        Prop::Not(Box::new(p))
    }

    pub fn and(p: Prop, q: Prop) -> Prop {
        Prop::And(Box::new(p), Box::new(q))
    }

    pub fn or(p: Prop, q: Prop) -> Prop {
        Prop::Or(Box::new(p), Box::new(q))
    }

    /// True for `Atom` and `Equals`, the two leaf forms.
    pub fn is_leaf(&self) -> bool {
        matches!(self, Prop::Atom(_) | Prop::Equals(..))
    }

    pub fn depth(&self) -> usize {
        match self {
            Prop::Atom(_) | Prop::Equals(..) => 0,
            Prop::Not(p) => 1 + p.depth(),
            Prop::And(p, q) | Prop::Or(p, q) => 1 + p.depth().max(q.depth()),
        }
    }

    pub(crate) fn collect_symbols(
        &self,
        atoms: &mut BTreeSet<Symbol>,
        unknowns: &mut BTreeSet<Symbol>,
    ) {
        match self {
            Prop::Atom(a) => {
                atoms.insert(a.clone());
            }
            Prop::Equals(u, _) => {
                unknowns.insert(u.clone());
            }
            Prop::Not(p) => p.collect_symbols(atoms, unknowns),
            Prop::And(p, q) | Prop::Or(p, q) => {
                p.collect_symbols(atoms, unknowns);
                q.collect_symbols(atoms, unknowns);
            }
        }
    }

    /// Evaluates under lookups for atoms and unknowns.
    pub fn eval_with<A, U>(&self, atom: &A, unknown: &U) -> Result<bool, EvalError>
    where
        A: Fn(&Symbol) -> Option<bool>,
        U: Fn(&Symbol) -> Option<Rational>,
    {
        Ok(match self {
            Prop::Atom(a) => atom(a).ok_or_else(|| EvalError::UnboundSymbol(a.clone()))?,
            Prop::Equals(u, v) => {
                unknown(u).ok_or_else(|| EvalError::UnboundSymbol(u.clone()))? == *v
            }
            Prop::Not(p) => !p.eval_with(atom, unknown)?,
            Prop::And(p, q) => p.eval_with(atom, unknown)? && q.eval_with(atom, unknown)?,
            Prop::Or(p, q) => p.eval_with(atom, unknown)? || q.eval_with(atom, unknown)?,
        })
    }

    /// Substitutes whatever `subst` fixes and simplifies the connectives that
    /// become decided.
    pub fn partial_eval(&self, subst: &Subst) -> PropValue {
        if let Some(b) = subst.props.get(self) {
            return PropValue::Known(*b);
        }
        match self {
            Prop::Atom(a) => match subst.atoms.get(a) {
                Some(b) => PropValue::Known(*b),
                None => PropValue::Residual(self.clone()),
            },
            Prop::Equals(u, v) => match subst.unknowns.get(u) {
                Some(w) => PropValue::Known(w == v),
                None => PropValue::Residual(self.clone()),
            },
            Prop::Not(p) => match p.partial_eval(subst) {
                PropValue::Known(b) => PropValue::Known(!b),
                PropValue::Residual(r) => PropValue::Residual(Prop::not(r)),
            },
            Prop::And(p, q) => match (p.partial_eval(subst), q.partial_eval(subst)) {
                (PropValue::Known(false), _) | (_, PropValue::Known(false)) => {
                    PropValue::Known(false)
                }
                (PropValue::Known(true), other) | (other, PropValue::Known(true)) => other,
                (PropValue::Residual(a), PropValue::Residual(b)) => {
                    PropValue::Residual(Prop::and(a, b))
                }
            },
            Prop::Or(p, q) => match (p.partial_eval(subst), q.partial_eval(subst)) {
                (PropValue::Known(true), _) | (_, PropValue::Known(true)) => PropValue::Known(true),
                (PropValue::Known(false), other) | (other, PropValue::Known(false)) => other,
                (PropValue::Residual(a), PropValue::Residual(b)) => {
                    PropValue::Residual(Prop::or(a, b))
                }
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropValue {
    Known(bool),
    Residual(Prop),
}

/// A quantity whose value is known to the context but not fixed by it: the
/// `x` in `est(y | x, I)`, or the truth value of `A` in `est(y | n(A), I)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    Unknown(Symbol),
    Prop(Prop),
}

/// State of knowledge an estimation is taken under.
///
/// All collections are ordered sets, so equality ignores the order items
/// were written in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    background: Symbol,
    assignments: BTreeMap<Symbol, Rational>,
    params: BTreeSet<Param>,
    asserted: BTreeSet<Prop>,
}

impl Context {
    pub fn new(background: &str) -> Self {
        Context::with_background(Symbol::new(background))
    }

    pub fn with_background(background: Symbol) -> Self {
        Context {
            background,
            assignments: BTreeMap::new(),
            params: BTreeSet::new(),
            asserted: BTreeSet::new(),
        }
    }

    pub fn assign(mut self, name: &str, value: Rational) -> Result<Self, AstError> {
        self.insert_assignment(Symbol::new(name), value)?;
        Ok(self)
    }

    pub fn param(mut self, param: Param) -> Result<Self, AstError> {
        self.insert_param(param)?;
        Ok(self)
    }

    pub fn param_unknown(self, name: &str) -> Result<Self, AstError> {
        self.param(Param::Unknown(Symbol::new(name)))
    }

    pub fn param_atom(self, name: &str) -> Result<Self, AstError> {
        self.param(Param::Prop(Prop::atom(name)))
    }

    pub fn param_prop(self, prop: Prop) -> Result<Self, AstError> {
        self.param(Param::Prop(prop))
    }

    pub fn assert(mut self, prop: Prop) -> Self {
        self.asserted.insert(prop);
        self
    }

    pub fn insert_assignment(&mut self, name: Symbol, value: Rational) -> Result<(), AstError> {
        if self.assignments.contains_key(&name) {
            return Err(AstError::DuplicateAssignment(name));
        }
        if self.params.contains(&Param::Unknown(name.clone())) {
            return Err(AstError::ParamConflict(name));
        }
        self.assignments.insert(name, value);
        Ok(())
    }

    pub fn insert_param(&mut self, param: Param) -> Result<(), AstError> {
        if let Param::Unknown(u) = &param {
            if self.assignments.contains_key(u) {
                return Err(AstError::ParamConflict(u.clone()));
            }
        }
        self.params.insert(param);
        Ok(())
    }

    pub fn background(&self) -> &Symbol {
        &self.background
    }

    pub fn assignments(&self) -> &BTreeMap<Symbol, Rational> {
        &self.assignments
    }

    pub fn params(&self) -> &BTreeSet<Param> {
        &self.params
    }

    pub fn asserted(&self) -> &BTreeSet<Prop> {
        &self.asserted
    }

    /// Context with the same background and nothing else.
    pub fn bare(&self) -> Context {
        Context::with_background(self.background.clone())
    }

    /// Same context minus its params.
    pub fn without_params(&self) -> Context {
        Context {
            params: BTreeSet::new(),
            ..self.clone()
        }
    }

    /// Values the context pins down: assignments, asserted literals, and
    /// every asserted proposition as a whole.
    pub fn fixed_values(&self) -> Subst {
        let mut subst = Subst::default();
        for (u, v) in &self.assignments {
            subst.unknowns.insert(u.clone(), v.clone());
        }
        for p in &self.asserted {
            subst.props.insert(p.clone(), true);
            match p {
                Prop::Atom(a) => {
                    subst.atoms.insert(a.clone(), true);
                }
                Prop::Not(inner) => {
                    subst.props.insert((**inner).clone(), false);
                    if let Prop::Atom(a) = inner.as_ref() {
                        subst.atoms.insert(a.clone(), false);
                    }
                }
                Prop::Equals(u, v) => {
                    subst.unknowns.entry(u.clone()).or_insert_with(|| v.clone());
                }
                _ => {}
            }
        }
        subst
    }

    fn has_param_unknown(&self, u: &Symbol) -> bool {
        self.params.contains(&Param::Unknown(u.clone()))
    }

    fn has_param_prop(&self, p: &Prop) -> bool {
        self.params.contains(&Param::Prop(p.clone()))
    }

    /// Whether the value of `e` is determined inside an estimation under
    /// this context, so that it can be treated as a constant there.
    pub fn knows(&self, e: &Expr) -> bool {
        self.knows_with(e, &self.fixed_values())
    }

    fn knows_with(&self, e: &Expr, fixed: &Subst) -> bool {
        match e {
            Expr::Const(_) => true,
            Expr::Unknown(u) => fixed.unknowns.contains_key(u) || self.has_param_unknown(u),
            Expr::PropEnc(p) => self.knows_prop(p, fixed),
            Expr::KDelta(a, b) => self.knows_with(a, fixed) && self.knows_with(b, fixed),
            Expr::Estim(_, inner) => inner.params.iter().all(|q| match q {
                Param::Unknown(u) => fixed.unknowns.contains_key(u) || self.has_param_unknown(u),
                Param::Prop(p) => self.knows_param_prop(p, fixed),
            }),
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().all(|x| self.knows_with(x, fixed)),
        }
    }

    fn knows_prop(&self, p: &Prop, fixed: &Subst) -> bool {
        if self.has_param_prop(p) || matches!(p.partial_eval(fixed), PropValue::Known(_)) {
            return true;
        }
        match p {
            Prop::Atom(_) => false,
            Prop::Equals(u, _) => self.has_param_unknown(u),
            Prop::Not(q) => self.knows_prop(q, fixed),
            Prop::And(a, b) | Prop::Or(a, b) => {
                self.knows_prop(a, fixed) && self.knows_prop(b, fixed)
            }
        }
    }

    /// A nested estimation's proposition param stays meaningful after
    /// substitution only if it is decided outright or untouched by it.
    fn knows_param_prop(&self, p: &Prop, fixed: &Subst) -> bool {
        if self.has_param_prop(p) || matches!(p.partial_eval(fixed), PropValue::Known(_)) {
            return true;
        }
        let (mut atoms, mut unknowns) = (BTreeSet::new(), BTreeSet::new());
        p.collect_symbols(&mut atoms, &mut unknowns);
        atoms.iter().all(|a| {
            !fixed.atoms.contains_key(a) && self.has_param_prop(&Prop::Atom(a.clone()))
        }) && unknowns
            .iter()
            .all(|u| !fixed.unknowns.contains_key(u) && self.has_param_unknown(u))
    }

    /// Turns params decided by `subst` into assignments or asserted
    /// propositions. Params `subst` only partly decides are left as they are.
    pub fn specialize(&self, subst: &Subst) -> Context {
        let mut out = Context {
            params: BTreeSet::new(),
            ..self.clone()
        };
        for param in &self.params {
            match param {
                Param::Unknown(u) => match subst.unknowns.get(u) {
                    Some(v) => {
                        out.assignments.insert(u.clone(), v.clone());
                    }
                    None => {
                        out.params.insert(param.clone());
                    }
                },
                Param::Prop(p) => match p.partial_eval(subst) {
                    PropValue::Known(true) => {
                        out.asserted.insert(p.clone());
                    }
                    PropValue::Known(false) => {
                        out.asserted.insert(Prop::not(p.clone()));
                    }
                    PropValue::Residual(_) => {
                        out.params.insert(param.clone());
                    }
                },
            }
        }
        out
    }

    /// Whether `self` is `outer` plus params only.
    pub fn extends_with_params(&self, outer: &Context) -> bool {
        self.background == outer.background
            && self.assignments == outer.assignments
            && self.asserted == outer.asserted
            && outer.params.is_subset(&self.params)
    }
}

/// Expression tree. Variant order fixes the structural ordering used by
/// canonicalization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(Rational),
    Unknown(Symbol),
    /// Integer encoding `n(p)` of a proposition, valued in {0, 1}.
    PropEnc(Prop),
    /// Kronecker delta, 1 when both sides are equal and 0 otherwise.
    KDelta(Box<Expr>, Box<Expr>),
    Estim(Box<Expr>, Context),
    Mul(Vec<Expr>),
    Add(Vec<Expr>),
}

impl Expr {
    pub fn constant(value: Rational) -> Expr {
        Expr::Const(value)
    }

    pub fn int(value: i64) -> Expr {
        Expr::Const(int(value))
    }

    pub fn zero() -> Expr {
        Expr::Const(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(Rational::one())
    }

    pub fn unknown(name: &str) -> Expr {
        Expr::Unknown(Symbol::new(name))
    }

    pub fn n(prop: Prop) -> Expr {
        Expr::PropEnc(prop)
    }

    /// `n(A)` for a bare atom.
    pub fn bit(atom: &str) -> Expr {
        Expr::PropEnc(Prop::atom(atom))
    }

    pub fn delta(a: Expr, b: Expr) -> Expr {
        Expr::KDelta(Box::new(a), Box::new(b))
    }

    pub fn est(body: Expr, ctx: Context) -> Expr {
        Expr::Estim(Box::new(body), ctx)
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        Expr::Add(terms)
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        Expr::Mul(factors)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Mul(vec![Expr::int(-1), e])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Add(vec![a, Expr::neg(b)])
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Unknown(_) | Expr::PropEnc(_) => Vec::new(),
            Expr::KDelta(a, b) => vec![a, b],
            Expr::Estim(body, _) => vec![body],
            Expr::Mul(xs) | Expr::Add(xs) => xs.iter().collect(),
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Expr> {
        let Some((&head, rest)) = path.split_first() else {
            return Some(self);
        };
        let child = match self {
            Expr::KDelta(a, b) => match head {
                0 => a.as_ref(),
                1 => b.as_ref(),
                _ => return None,
            },
            Expr::Estim(body, _) if head == 0 => body.as_ref(),
            Expr::Mul(xs) | Expr::Add(xs) => xs.get(head)?,
            _ => return None,
        };
        child.at(rest)
    }

    /// Copy of `self` with the node at `path` replaced. `None` when the path
    /// does not exist.
    pub fn replace_at(&self, path: &[usize], replacement: Expr) -> Option<Expr> {
        let Some((&head, rest)) = path.split_first() else {
            return Some(replacement);
        };
        Some(match self {
            Expr::KDelta(a, b) => match head {
                0 => Expr::KDelta(Box::new(a.replace_at(rest, replacement)?), b.clone()),
                1 => Expr::KDelta(a.clone(), Box::new(b.replace_at(rest, replacement)?)),
                _ => return None,
            },
            Expr::Estim(body, ctx) if head == 0 => {
                Expr::Estim(Box::new(body.replace_at(rest, replacement)?), ctx.clone())
            }
            Expr::Mul(xs) | Expr::Add(xs) => {
                let mut ys = xs.clone();
                let slot = ys.get_mut(head)?;
                *slot = slot.replace_at(rest, replacement)?;
                if matches!(self, Expr::Mul(_)) {
                    Expr::Mul(ys)
                } else {
                    Expr::Add(ys)
                }
            }
            _ => return None,
        })
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(Expr::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().into_iter().map(Expr::depth).max().unwrap_or(0)
    }

    /// Deepest chain of nested estimation nodes.
    pub fn estim_nesting(&self) -> usize {
        let inner = self
            .children()
            .into_iter()
            .map(Expr::estim_nesting)
            .max()
            .unwrap_or(0);
        match self {
            Expr::Estim(..) => 1 + inner,
            _ => inner,
        }
    }

    /// Post-order (innermost-first) list of every node position.
    pub fn positions(&self) -> Vec<Path> {
        fn walk(e: &Expr, path: &mut Path, out: &mut Vec<Path>) {
            for (i, c) in e.children().into_iter().enumerate() {
                path.push(i);
                walk(c, path, out);
                path.pop();
            }
            out.push(path.clone());
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn contains_estim(&self) -> bool {
        matches!(self, Expr::Estim(..)) || self.children().into_iter().any(Expr::contains_estim)
    }
}

/// Renders a path as `root` or dotted child indices.
pub fn format_path(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(".")
    }
}
