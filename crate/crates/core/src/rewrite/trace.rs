use std::fmt::Write;

use serde_json::{json, Value};

use super::{Engine, EngineError, Rule};
use crate::ast::{format_path, Expr, Param, Path};
use crate::parser::{print_expr, print_prop};

/// One rule firing: `before` rewritten at `path` gives `after`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub rule: Rule,
    pub anchor: String,
    pub path: Path,
    pub before: Expr,
    pub after: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTrace {
    pub initial: Expr,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("step {step} does not start where the previous one ended")]
    Broken { step: usize },
    #[error("step {step}: replaying {rule} gives {got}, trace records {want}")]
    Mismatch {
        step: usize,
        rule: String,
        got: String,
        want: String,
    },
    #[error("step {step}: {source}")]
    Engine { step: usize, source: EngineError },
}

impl DerivationTrace {
    pub fn new(initial: Expr) -> Self {
        DerivationTrace {
            initial,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Final expression: the last step's result, or the initial expression.
    pub fn final_expr(&self) -> &Expr {
        self.steps.last().map_or(&self.initial, |s| &s.after)
    }

    /// Every intermediate expression, initial and final included.
    pub fn states(&self) -> Vec<&Expr> {
        std::iter::once(&self.initial)
            .chain(self.steps.iter().map(|s| &s.after))
            .collect()
    }

    pub fn rule_names(&self) -> Vec<&'static str> {
        self.steps.iter().map(|s| s.rule.name()).collect()
    }

    /// Re-applies every step from the initial expression and checks that
    /// each reproduces the recorded result.
    pub fn replay(&self, engine: &Engine) -> Result<Expr, TraceError> {
        let mut current = self.initial.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let k = i + 1;
            if step.before != current {
                return Err(TraceError::Broken { step: k });
            }
            let got = engine
                .step(&step.rule, &current, &step.path)
                .map_err(|source| TraceError::Engine { step: k, source })?
                .after;
            if got != step.after {
                return Err(TraceError::Mismatch {
                    step: k,
                    rule: step.rule.name().to_string(),
                    got: print_expr(&got),
                    want: print_expr(&step.after),
                });
            }
            current = got;
        }
        Ok(current)
    }

    /// One line per step: `step k: [rule @ path] before ⇒ after  (anchor)`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "step {}: [{} @ {}] {} ⇒ {}  ({})",
                i + 1,
                rule_label(&s.rule),
                format_path(&s.path),
                print_expr(&s.before),
                print_expr(&s.after),
                s.anchor
            );
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "initial": print_expr(&self.initial),
            "final": print_expr(self.final_expr()),
            "steps": self.steps.iter().enumerate().map(|(i, s)| json!({
                "step": i + 1,
                "rule": s.rule.name(),
                "argument": rule_argument(&s.rule),
                "anchor": s.anchor,
                "path": format_path(&s.path),
                "before": print_expr(&s.before),
                "after": print_expr(&s.after),
            })).collect::<Vec<_>>(),
        })
    }
}

fn rule_argument(rule: &Rule) -> Option<String> {
    match rule {
        Rule::TowerExpand { param } => Some(match param {
            Param::Unknown(u) => u.to_string(),
            Param::Prop(p) => format!("n({})", print_prop(p)),
        }),
        Rule::CompletenessExpand { var, domain } | Rule::DeltaPartition { var, domain } => {
            let values: Vec<String> = domain.iter().map(|v| v.to_string()).collect();
            Some(format!("{var} in {{{}}}", values.join(", ")))
        }
        _ => None,
    }
}

fn rule_label(rule: &Rule) -> String {
    match rule_argument(rule) {
        Some(arg) => format!("{} {arg}", rule.name()),
        None => rule.name().to_string(),
    }
}
