//! Scripted derivations: fixed rule sequences at fixed positions.

use std::collections::BTreeSet;

use super::{DerivationTrace, Engine, EngineError, Rule};
use crate::ast::{canonicalize, Context, Expr, Param, Prop, Rational, Symbol};

struct Script<'a> {
    engine: &'a Engine,
    trace: DerivationTrace,
}

impl<'a> Script<'a> {
    fn new(engine: &'a Engine, initial: Expr) -> Self {
        Script {
            engine,
            trace: DerivationTrace::new(canonicalize(&initial)),
        }
    }

    fn current(&self) -> &Expr {
        self.trace.final_expr()
    }

    fn run(&mut self, rule: Rule, path: &[usize], anchor: Option<&str>) -> Result<(), EngineError> {
        let mut step = self.engine.step(&rule, self.current(), path)?;
        if let Some(a) = anchor {
            step.anchor = a.to_string();
        }
        self.trace.push(step);
        Ok(())
    }

    /// Runs the first of `rules` that fires; does nothing if none does.
    fn first_of(&mut self, rules: &[Rule], path: &[usize], anchor: &str) -> Result<(), EngineError> {
        for rule in rules {
            if self.engine.rewrite_at(rule, self.current(), path)?.is_some() {
                return self.run(rule.clone(), path, Some(anchor));
            }
        }
        Ok(())
    }
}

/// est(n(not p) | ctx) = 1 - est(n(p) | ctx).
pub fn derive_negation(engine: &Engine, p: &Prop, ctx: &Context) -> Result<DerivationTrace, EngineError> {
    let mut s = Script::new(engine, Expr::est(Expr::n(Prop::not(p.clone())), ctx.clone()));
    s.run(Rule::PropEncode, &[0], None)?;
    s.run(Rule::LinearSum, &[], None)?;
    Ok(s.trace)
}

/// est(n(p or q) | ctx) = est(n(p) | ctx) + est(n(q) | ctx) - est(n(p) n(q) | ctx).
pub fn derive_sum(engine: &Engine, p: &Prop, q: &Prop, ctx: &Context) -> Result<DerivationTrace, EngineError> {
    let mut s = Script::new(
        engine,
        Expr::est(Expr::n(Prop::or(p.clone(), q.clone())), ctx.clone()),
    );
    s.run(Rule::PropEncode, &[0], None)?;
    s.run(Rule::LinearSum, &[], None)?;
    Ok(s.trace)
}

/// est(n(a) n(b) | ctx) = est(n(a) | ctx) est(n(b) | a, ctx), in four steps:
/// partial estimation over n(a), extraction of n(a) from the inner
/// estimation, two-valued substitution, and extraction of the now constant
/// inner estimation.
pub fn derive_product_rule(
    engine: &Engine,
    a: &Prop,
    b: &Prop,
    ctx: &Context,
) -> Result<DerivationTrace, EngineError> {
    let body = Expr::mul(vec![Expr::n(a.clone()), Expr::n(b.clone())]);
    let mut s = Script::new(engine, Expr::est(body, ctx.clone()));
    s.run(
        Rule::TowerExpand {
            param: Param::Prop(a.clone()),
        },
        &[],
        Some("requirement 3: partial estimation, {a·b}_I = {{a·b}_{a,I}}_I"),
    )?;
    s.first_of(
        &[Rule::ScalarOut, Rule::KnownEval],
        &[0],
        "scalar extraction of a inside the inner estimation, G(a) = a·{b}_{a,I}",
    )?;
    s.first_of(
        &[Rule::TwoValued],
        &[0],
        "two-valued substitution, a in {0,1} turns G(a) into G*(a) = a·{b}_{a=1,I}",
    )?;
    s.first_of(
        &[Rule::ScalarOut, Rule::KnownEval],
        &[],
        "constant extraction of {b}_{a=1,I}",
    )?;
    Ok(s.trace)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectationDerivation {
    /// est(x | ctx) to sum_i x_i est(delta(x_i, x) | ctx).
    pub expansion: DerivationTrace,
    /// sum_i est(delta(x_i, x) | ctx) to 1.
    pub normalization: DerivationTrace,
}

/// Estimate of `x` as a weighted sum of the probabilities of its values.
pub fn derive_expectation_theorem(
    engine: &Engine,
    x: &Symbol,
    domain: &[Rational],
    ctx: &Context,
) -> Result<ExpectationDerivation, EngineError> {
    if domain.is_empty() {
        return Err(EngineError::Domain(format!("`{x}` has no declared values")));
    }
    let mut seen = BTreeSet::new();
    for v in domain {
        if !seen.insert(v) {
            return Err(EngineError::Domain(format!(
                "value {v} appears twice in the domain of `{x}`"
            )));
        }
    }
    let complete = Rule::CompletenessExpand {
        var: x.clone(),
        domain: domain.to_vec(),
    };
    let mut s = Script::new(engine, Expr::est(Expr::Unknown(x.clone()), ctx.clone()));
    s.run(complete, &[0], None)?;
    s.first_of(
        &[Rule::LinearSum, Rule::ScalarOut],
        &[],
        "requirement 2: estimation is linear",
    )?;
    let expansion = s.trace;

    let deltas: Vec<Expr> = domain
        .iter()
        .map(|v| Expr::est(Expr::delta(Expr::Const(v.clone()), Expr::Unknown(x.clone())), ctx.clone()))
        .collect();
    let mut s = Script::new(engine, Expr::add(deltas));
    if domain.len() > 1 {
        s.run(Rule::LinearMerge, &[], None)?;
    }
    s.run(
        Rule::DeltaPartition {
            var: x.clone(),
            domain: domain.to_vec(),
        },
        &[0],
        None,
    )?;
    s.run(Rule::KnownEval, &[], None)?;
    Ok(ExpectationDerivation {
        expansion,
        normalization: s.trace,
    })
}
