//! Reference semantics: estimation as conditional expectation over a finite
//! joint weight table.
//!
//! `est(body | ctx)` evaluates to the weighted mean of `body` over the
//! outcomes consistent with `ctx`. Everything is exact; the only
//! floating-point surface is [`grid`].

mod file;
pub mod grid;
mod requirements;
pub mod soundness;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};

use crate::ast::{Context, EvalError, Expr, Param, Prop, Rational, Subst, Symbol};
use crate::parser::{print_context, print_prop};

pub use file::{load_model_json, model_to_json, parse_rational, LoadedModel, ModelFileError};
pub use grid::{grid_eval, GridError, GridEstimate, GridModel};
pub use requirements::{
    check_requirements, expectation_decomposition, merge_reports, verify_rules_numerically,
    Decomposition, PropertyReport, RequirementsReport, RulesReport,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(Symbol),
    #[error("variable `{0}` lists a domain value twice")]
    DuplicateDomainValue(Symbol),
    #[error("symbol `{0}` is declared twice")]
    DuplicateSymbol(Symbol),
    #[error("outcome has {found} entries, model declares {expected}")]
    OutcomeShape { expected: usize, found: usize },
    #[error("value {value} is outside the domain of `{var}`")]
    OutsideDomain { var: Symbol, value: Rational },
    #[error("outcome listed twice")]
    DuplicateOutcome,
    #[error("negative weight {0}")]
    NegativeWeight(Rational),
    #[error("weights sum to {0}, expected 1")]
    NotNormalized(Rational),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(Symbol),
    #[error("conditioning event has zero weight: {context}")]
    ZeroWeightConditioning { context: String },
}

impl From<EvalError> for OracleError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::UnboundSymbol(s) => OracleError::UnboundSymbol(s),
            EvalError::NotGround => unreachable!("oracle evaluates estimation nodes"),
        }
    }
}

/// One joint assignment: a value per declared variable and a truth value
/// per declared atom, both in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcome {
    pub values: Vec<Rational>,
    pub truths: Vec<bool>,
}

/// Finite joint weight table over declared variables and atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    variables: Vec<(Symbol, Vec<Rational>)>,
    atoms: Vec<Symbol>,
    /// Positive-weight outcomes only.
    weights: BTreeMap<Outcome, Rational>,
}

impl Model {
    pub fn new(
        variables: Vec<(Symbol, Vec<Rational>)>,
        atoms: Vec<Symbol>,
        weights: Vec<(Outcome, Rational)>,
    ) -> Result<Model, ModelError> {
        let mut seen = BTreeSet::new();
        for (name, domain) in &variables {
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateSymbol(name.clone()));
            }
            if domain.is_empty() {
                return Err(ModelError::EmptyDomain(name.clone()));
            }
            if domain.iter().collect::<BTreeSet<_>>().len() != domain.len() {
                return Err(ModelError::DuplicateDomainValue(name.clone()));
            }
        }
        for a in &atoms {
            if !seen.insert(a.clone()) {
                return Err(ModelError::DuplicateSymbol(a.clone()));
            }
        }

        let mut table = BTreeMap::new();
        let mut listed = BTreeSet::new();
        let mut total = Rational::zero();
        for (outcome, w) in weights {
            if outcome.values.len() != variables.len() || outcome.truths.len() != atoms.len() {
                return Err(ModelError::OutcomeShape {
                    expected: variables.len() + atoms.len(),
                    found: outcome.values.len() + outcome.truths.len(),
                });
            }
            for ((name, domain), v) in variables.iter().zip(&outcome.values) {
                if !domain.contains(v) {
                    return Err(ModelError::OutsideDomain {
                        var: name.clone(),
                        value: v.clone(),
                    });
                }
            }
            if w.is_negative() {
                return Err(ModelError::NegativeWeight(w));
            }
            if !listed.insert(outcome.clone()) {
                return Err(ModelError::DuplicateOutcome);
            }
            total += &w;
            if !w.is_zero() {
                table.insert(outcome, w);
            }
        }
        if !total.is_one() {
            return Err(ModelError::NotNormalized(total));
        }
        Ok(Model {
            variables,
            atoms,
            weights: table,
        })
    }

    /// Equal weight on every joint outcome.
    pub fn uniform(
        variables: Vec<(Symbol, Vec<Rational>)>,
        atoms: Vec<Symbol>,
    ) -> Result<Model, ModelError> {
        let outcomes = all_outcomes(&variables, atoms.len());
        if outcomes.is_empty() {
            return Model::new(variables, atoms, Vec::new());
        }
        let w = Rational::new(1.into(), outcomes.len().into());
        Model::new(
            variables,
            atoms,
            outcomes.into_iter().map(|o| (o, w.clone())).collect(),
        )
    }

    /// Normalizes non-negative raw weights (at least one positive).
    pub fn from_raw_weights(
        variables: Vec<(Symbol, Vec<Rational>)>,
        atoms: Vec<Symbol>,
        raw: Vec<(Outcome, Rational)>,
    ) -> Result<Model, ModelError> {
        let total: Rational = raw.iter().map(|(_, w)| w.clone()).sum();
        if total.is_zero() {
            return Err(ModelError::NotNormalized(total));
        }
        Model::new(
            variables,
            atoms,
            raw.into_iter().map(|(o, w)| (o, w / &total)).collect(),
        )
    }

    pub fn variables(&self) -> &[(Symbol, Vec<Rational>)] {
        &self.variables
    }

    pub fn atoms(&self) -> &[Symbol] {
        &self.atoms
    }

    pub fn domain(&self, var: &Symbol) -> Option<&[Rational]> {
        self.var_index(var).map(|i| self.variables[i].1.as_slice())
    }

    pub fn var_index(&self, var: &Symbol) -> Option<usize> {
        self.variables.iter().position(|(n, _)| n == var)
    }

    pub fn atom_index(&self, atom: &Symbol) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }

    /// Positive-weight outcomes.
    pub fn support(&self) -> impl Iterator<Item = (&Outcome, &Rational)> {
        self.weights.iter()
    }

    /// Every joint outcome with its weight, zero weights included.
    pub fn all_weights(&self) -> Vec<(Outcome, Rational)> {
        all_outcomes(&self.variables, self.atoms.len())
            .into_iter()
            .map(|o| {
                let w = self.weights.get(&o).cloned().unwrap_or_else(Rational::zero);
                (o, w)
            })
            .collect()
    }

    /// Variables whose domain is a subset of {0, 1}.
    pub fn binary_variables(&self) -> BTreeSet<Symbol> {
        self.variables
            .iter()
            .filter(|(_, d)| d.iter().all(|v| v.is_zero() || v.is_one()))
            .map(|(n, _)| n.clone())
            .collect()
    }
}

/// Cartesian product of variable domains and atom truth values, in
/// declaration order with `false` before `true`.
pub fn all_outcomes(variables: &[(Symbol, Vec<Rational>)], atom_count: usize) -> Vec<Outcome> {
    let mut out = vec![Outcome {
        values: Vec::new(),
        truths: Vec::new(),
    }];
    for (_, domain) in variables {
        out = out
            .into_iter()
            .flat_map(|o| {
                domain.iter().map(move |v| {
                    let mut o = o.clone();
                    o.values.push(v.clone());
                    o
                })
            })
            .collect();
    }
    for _ in 0..atom_count {
        out = out
            .into_iter()
            .flat_map(|o| {
                [false, true].into_iter().map(move |b| {
                    let mut o = o.clone();
                    o.truths.push(b);
                    o
                })
            })
            .collect();
    }
    out
}

/// Exact value of `e` under `m`.
///
/// Top-level unknowns and atoms are unbound: quantities the model declares
/// only acquire values inside an estimation.
pub fn oracle_eval(e: &Expr, m: &Model) -> Result<Rational, OracleError> {
    Evaluator::new(m).eval(e, &Env::top())
}

/// Same as [`oracle_eval`] with outer values for free unknowns and atoms.
pub fn oracle_eval_with(e: &Expr, m: &Model, outer: &Subst) -> Result<Rational, OracleError> {
    let env = Env {
        outcome: None,
        extra: BTreeMap::new(),
        outer: Some(outer),
    };
    Evaluator::new(m).eval(e, &env)
}

struct Env<'a> {
    outcome: Option<&'a Outcome>,
    /// Values of unknowns the model does not declare (known constants).
    extra: BTreeMap<Symbol, Rational>,
    /// Caller-supplied values, consulted only at the top level.
    outer: Option<&'a Subst>,
}

impl Env<'_> {
    fn top() -> Self {
        Env {
            outcome: None,
            extra: BTreeMap::new(),
            outer: None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum ParamValue {
    Num(Rational),
    Bit(bool),
}

struct Evaluator<'m> {
    model: &'m Model,
    memo: RefCell<HashMap<(usize, Vec<ParamValue>), Rational>>,
}

impl<'m> Evaluator<'m> {
    fn new(model: &'m Model) -> Self {
        Evaluator {
            model,
            memo: RefCell::new(HashMap::new()),
        }
    }

    fn unknown(&self, env: &Env<'_>, u: &Symbol) -> Option<Rational> {
        let local = match self.model.var_index(u) {
            Some(i) => env.outcome.map(|o| o.values[i].clone()),
            None => env.extra.get(u).cloned(),
        };
        local.or_else(|| env.outer?.unknowns.get(u).cloned())
    }

    fn atom(&self, env: &Env<'_>, a: &Symbol) -> Option<bool> {
        let local = match self.model.atom_index(a) {
            Some(i) => env.outcome.map(|o| o.truths[i]),
            None => None,
        };
        local.or_else(|| env.outer?.atoms.get(a).copied())
    }

    fn eval(&self, e: &Expr, env: &Env<'_>) -> Result<Rational, OracleError> {
        Ok(match e {
            Expr::Const(c) => c.clone(),
            Expr::Unknown(u) => self
                .unknown(env, u)
                .ok_or_else(|| OracleError::UnboundSymbol(u.clone()))?,
            Expr::PropEnc(p) => {
                let b = p.eval_with(&|a| self.atom(env, a), &|u| self.unknown(env, u))?;
                if b {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Expr::KDelta(a, b) => {
                if self.eval(a, env)? == self.eval(b, env)? {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Expr::Mul(xs) => {
                let mut acc = Rational::one();
                for x in xs {
                    acc *= self.eval(x, env)?;
                }
                acc
            }
            Expr::Add(xs) => {
                let mut acc = Rational::zero();
                for x in xs {
                    acc += self.eval(x, env)?;
                }
                acc
            }
            Expr::Estim(body, ctx) => self.estimate(e, body, ctx, env)?,
        })
    }

    fn estimate(
        &self,
        node: &Expr,
        body: &Expr,
        ctx: &Context,
        env: &Env<'_>,
    ) -> Result<Rational, OracleError> {
        let m = self.model;
        let mut key = Vec::with_capacity(ctx.params().len());
        let mut extra = BTreeMap::new();
        let mut fixed_values: Vec<(usize, Rational)> = Vec::new();
        let mut fixed_truths: Vec<(usize, bool)> = Vec::new();
        let mut fixed_props: Vec<(&Prop, bool)> = Vec::new();

        for param in ctx.params() {
            match param {
                Param::Unknown(u) => {
                    let v = self
                        .unknown(env, u)
                        .ok_or_else(|| OracleError::UnboundSymbol(u.clone()))?;
                    key.push(ParamValue::Num(v.clone()));
                    match m.var_index(u) {
                        Some(i) => fixed_values.push((i, v)),
                        None => {
                            extra.insert(u.clone(), v);
                        }
                    }
                }
                Param::Prop(p) => {
                    let b = p.eval_with(&|a| self.atom(env, a), &|u| self.unknown(env, u))?;
                    key.push(ParamValue::Bit(b));
                    match p {
                        Prop::Atom(a) => match m.atom_index(a) {
                            Some(i) => fixed_truths.push((i, b)),
                            None => return Err(OracleError::UnboundSymbol(a.clone())),
                        },
                        _ => fixed_props.push((p, b)),
                    }
                }
            }
        }
        let memo_key = (node as *const Expr as usize, key);
        if let Some(v) = self.memo.borrow().get(&memo_key) {
            return Ok(v.clone());
        }

        for (u, v) in ctx.assignments() {
            match m.var_index(u) {
                Some(i) => fixed_values.push((i, v.clone())),
                None => {
                    extra.insert(u.clone(), v.clone());
                }
            }
        }

        let mut total = Rational::zero();
        let mut acc = Rational::zero();
        for (outcome, w) in &m.weights {
            if fixed_values.iter().any(|(i, v)| outcome.values[*i] != *v)
                || fixed_truths.iter().any(|(i, b)| outcome.truths[*i] != *b)
            {
                continue;
            }
            let inner = Env {
                outcome: Some(outcome),
                extra: extra.clone(),
                outer: None,
            };
            let mut consistent = true;
            for (p, b) in &fixed_props {
                if p.eval_with(&|a| self.atom(&inner, a), &|u| self.unknown(&inner, u))? != *b {
                    consistent = false;
                    break;
                }
            }
            for p in ctx.asserted() {
                if !consistent {
                    break;
                }
                if !p.eval_with(&|a| self.atom(&inner, a), &|u| self.unknown(&inner, u))? {
                    consistent = false;
                    break;
                }
            }
            if !consistent {
                continue;
            }
            total += w;
            acc += w * self.eval(body, &inner)?;
        }
        if total.is_zero() {
            return Err(OracleError::ZeroWeightConditioning {
                context: describe_event(ctx, &memo_key.1),
            });
        }
        let value = acc / total;
        self.memo.borrow_mut().insert(memo_key, value.clone());
        Ok(value)
    }
}

fn describe_event(ctx: &Context, params: &[ParamValue]) -> String {
    let mut text = print_context(ctx);
    if !params.is_empty() {
        let bound: Vec<String> = ctx
            .params()
            .iter()
            .zip(params)
            .map(|(p, v)| match (p, v) {
                (Param::Unknown(u), ParamValue::Num(x)) => format!("{u}={x}"),
                (Param::Prop(p), ParamValue::Bit(b)) => format!("{}={b}", print_prop(p)),
                _ => unreachable!(),
            })
            .collect();
        text.push_str(&format!(" with {}", bound.join(", ")));
    }
    text
}
