//! Named rewrite rules over [`Expr`], a normalizer, and scripted derivations.
//!
//! Each rule is a partial map applied at one node. [`Engine::normalize`]
//! applies the normalizing subset innermost-first with a fixed priority and
//! records every firing in a [`DerivationTrace`].

mod derive;
mod probability;
mod rules;
mod trace;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::ast::{canonicalize, format_path, Expr, Param, Rational, Symbol};
use crate::oracle::Model;

pub use derive::{
    derive_expectation_theorem, derive_negation, derive_product_rule, derive_sum,
    ExpectationDerivation,
};
pub use probability::to_probability_form;
pub use trace::{DerivationTrace, Step, TraceError};

pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("normalization did not finish within {fuel} steps")]
    FuelExhausted { fuel: usize },
    #[error("rule {rule} does not apply at {path}")]
    DidNotApply { rule: String, path: String },
    #[error("no subexpression at {0}")]
    InvalidPath(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Rule names without arguments; used to select a rule for fault injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleKind {
    KnownEval,
    PropEncode,
    DeltaAsProp,
    PropAsDelta,
    LinearSum,
    LinearMerge,
    ScalarOut,
    Tower,
    TowerExpand,
    TwoValued,
    CompletenessExpand,
    DeltaPartition,
}

impl RuleKind {
    pub const ALL: [RuleKind; 12] = [
        RuleKind::KnownEval,
        RuleKind::PropEncode,
        RuleKind::DeltaAsProp,
        RuleKind::PropAsDelta,
        RuleKind::LinearSum,
        RuleKind::LinearMerge,
        RuleKind::ScalarOut,
        RuleKind::Tower,
        RuleKind::TowerExpand,
        RuleKind::TwoValued,
        RuleKind::CompletenessExpand,
        RuleKind::DeltaPartition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::KnownEval => "known_eval",
            RuleKind::PropEncode => "prop_encode",
            RuleKind::DeltaAsProp => "delta_as_prop",
            RuleKind::PropAsDelta => "prop_as_delta",
            RuleKind::LinearSum => "linear_sum",
            RuleKind::LinearMerge => "linear_merge",
            RuleKind::ScalarOut => "scalar_out",
            RuleKind::Tower => "tower",
            RuleKind::TowerExpand => "tower_expand",
            RuleKind::TwoValued => "two_valued",
            RuleKind::CompletenessExpand => "completeness_expand",
            RuleKind::DeltaPartition => "delta_partition",
        }
    }

    pub fn anchor(self) -> &'static str {
        match self {
            RuleKind::KnownEval => "requirement 0: estimation of a fully known quantity",
            RuleKind::PropEncode => "binary encoding of Boolean connectives",
            RuleKind::DeltaAsProp | RuleKind::PropAsDelta => {
                "Kronecker delta equals the indicator n(x=x_i)"
            }
            RuleKind::LinearSum => "requirement 2: estimation is linear",
            RuleKind::LinearMerge => "requirement 2: estimation is linear, read right to left",
            RuleKind::ScalarOut => "requirement 2: known factors move outside",
            RuleKind::Tower => "requirement 3: partial estimation removes free parameters",
            RuleKind::TowerExpand => "requirement 3: introduce a partial estimation",
            RuleKind::TwoValued => "two-valued substitution, G(a) to G*(a)",
            RuleKind::CompletenessExpand => "complete set of values: x = sum_i x_i delta(x_i, x)",
            RuleKind::DeltaPartition => "complete set of values: sum_i delta(x_i, x) = 1",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

/// A rule together with the arguments the scripted-only rules need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    KnownEval,
    PropEncode,
    DeltaAsProp,
    PropAsDelta,
    LinearSum,
    LinearMerge,
    ScalarOut,
    Tower,
    TowerExpand { param: Param },
    TwoValued,
    CompletenessExpand { var: Symbol, domain: Vec<Rational> },
    DeltaPartition { var: Symbol, domain: Vec<Rational> },
}

impl Rule {
    pub fn kind(&self) -> RuleKind {
        match self {
            Rule::KnownEval => RuleKind::KnownEval,
            Rule::PropEncode => RuleKind::PropEncode,
            Rule::DeltaAsProp => RuleKind::DeltaAsProp,
            Rule::PropAsDelta => RuleKind::PropAsDelta,
            Rule::LinearSum => RuleKind::LinearSum,
            Rule::LinearMerge => RuleKind::LinearMerge,
            Rule::ScalarOut => RuleKind::ScalarOut,
            Rule::Tower => RuleKind::Tower,
            Rule::TowerExpand { .. } => RuleKind::TowerExpand,
            Rule::TwoValued => RuleKind::TwoValued,
            Rule::CompletenessExpand { .. } => RuleKind::CompletenessExpand,
            Rule::DeltaPartition { .. } => RuleKind::DeltaPartition,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn anchor(&self) -> &'static str {
        self.kind().anchor()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rules used by [`Engine::normalize`], highest priority first.
pub const NORMALIZING_RULES: [Rule; 6] = [
    Rule::KnownEval,
    Rule::PropEncode,
    Rule::LinearSum,
    Rule::ScalarOut,
    Rule::Tower,
    Rule::TwoValued,
];

#[derive(Debug, Clone)]
pub struct Engine {
    fuel: usize,
    two_valued: BTreeSet<Symbol>,
    fault: Option<RuleKind>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}

impl Engine {
    pub fn new() -> Self {
        Engine {
            fuel: DEFAULT_FUEL,
            two_valued: BTreeSet::new(),
            fault: None,
        }
    }

    pub fn with_fuel(mut self, fuel: usize) -> Self {
        self.fuel = fuel;
        self
    }

    /// Declares an unknown to range over {0, 1}.
    pub fn declare_two_valued(mut self, name: &str) -> Self {
        self.two_valued.insert(Symbol::new(name));
        self
    }

    /// Declares every variable whose model domain is exactly {0, 1}.
    pub fn declare_from_model(mut self, m: &Model) -> Self {
        self.two_valued.extend(m.binary_variables());
        self
    }

    /// Test fixture: makes one rule unsound on purpose.
    pub fn with_fault(mut self, kind: RuleKind) -> Self {
        self.fault = Some(kind);
        self
    }

    pub fn fuel(&self) -> usize {
        self.fuel
    }

    pub fn fault(&self) -> Option<RuleKind> {
        self.fault
    }

    pub fn is_two_valued(&self, name: &Symbol) -> bool {
        self.two_valued.contains(name)
    }

    /// Applies `rule` at the root of `e`. The result is not canonicalized.
    pub fn apply(&self, rule: &Rule, e: &Expr) -> Option<Expr> {
        rules::apply(self, rule, e)
    }

    /// Applies `rule` at `path` and canonicalizes the whole expression.
    /// `None` when the rule does not match there or changes nothing.
    pub fn rewrite_at(&self, rule: &Rule, e: &Expr, path: &[usize]) -> Result<Option<Expr>, EngineError> {
        let sub = e
            .at(path)
            .ok_or_else(|| EngineError::InvalidPath(format_path(path)))?;
        let Some(out) = self.apply(rule, sub) else {
            return Ok(None);
        };
        let whole = e
            .replace_at(path, out)
            .ok_or_else(|| EngineError::InvalidPath(format_path(path)))?;
        let whole = canonicalize(&whole);
        Ok((whole != *e).then_some(whole))
    }

    /// Like [`Engine::rewrite_at`] but fails when the rule does not fire.
    pub fn step(&self, rule: &Rule, e: &Expr, path: &[usize]) -> Result<Step, EngineError> {
        match self.rewrite_at(rule, e, path)? {
            Some(after) => Ok(Step {
                rule: rule.clone(),
                anchor: rule.anchor().to_string(),
                path: path.to_vec(),
                before: e.clone(),
                after,
            }),
            None => Err(EngineError::DidNotApply {
                rule: rule.name().to_string(),
                path: format_path(path),
            }),
        }
    }

    /// Two-valued substitution driven by an explicit unknown: inside the
    /// product at `path`, the factor `var` is replaced by 1 everywhere else.
    pub fn two_valued_on(&self, e: &Expr, path: &[usize], var: &Symbol) -> Result<Option<Expr>, EngineError> {
        if !self.is_two_valued(var) {
            return Err(EngineError::Domain(format!(
                "`{var}` is not declared two-valued"
            )));
        }
        let sub = e
            .at(path)
            .ok_or_else(|| EngineError::InvalidPath(format_path(path)))?;
        let Some(out) = rules::two_valued_with(self, sub, Some(var)) else {
            return Ok(None);
        };
        let whole = canonicalize(&e.replace_at(path, out).expect("path checked"));
        Ok((whole != *e).then_some(whole))
    }

    /// Rewrites to a fixpoint of [`NORMALIZING_RULES`].
    ///
    /// At each round the innermost position where any rule fires is
    /// rewritten, trying rules in priority order, and the search restarts.
    pub fn normalize(&self, e: &Expr) -> Result<(Expr, DerivationTrace), EngineError> {
        let mut current = canonicalize(e);
        let mut trace = DerivationTrace::new(current.clone());
        'outer: loop {
            for path in current.positions() {
                for rule in &NORMALIZING_RULES {
                    if let Some(next) = self.rewrite_at(rule, &current, &path)? {
                        if trace.steps.len() >= self.fuel {
                            return Err(EngineError::FuelExhausted { fuel: self.fuel });
                        }
                        trace.push(Step {
                            rule: rule.clone(),
                            anchor: rule.anchor().to_string(),
                            path: path.clone(),
                            before: current.clone(),
                            after: next.clone(),
                        });
                        current = next;
                        continue 'outer;
                    }
                }
            }
            return Ok((current, trace));
        }
    }
}

#[cfg(test)]
mod tests;
