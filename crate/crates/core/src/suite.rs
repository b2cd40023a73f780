//! The full verification run behind `estim check`.

use serde_json::{json, Value};

use crate::ast::{int, rat, Context, Prop, Rational, Symbol};
use crate::gen;
use crate::oracle::soundness::{check_probability_range, check_rule_soundness, model_pool};
use crate::oracle::{
    check_requirements, expectation_decomposition, merge_reports, model_to_json,
    oracle_eval, verify_rules_numerically, Model, OracleError, Outcome, PropertyReport,
};
use crate::parser::print_expr;
use crate::rewrite::{derive_negation, derive_product_rule, derive_sum, DerivationTrace, Engine};

/// Depth bound for expressions in the requirements check.
pub const REQUIREMENT_DEPTH: usize = 5;

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub trials: usize,
    pub seed: u64,
    /// Checks run against this model instead of generated ones.
    pub model: Option<Model>,
    pub engine: Engine,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            trials: 1000,
            seed: 0,
            model: None,
            engine: Engine::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub properties: Vec<PropertyReport>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyReport::passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for p in &self.properties {
            out.push_str(&format!(
                "{} {}: {} checked, {} skipped, {} failed\n",
                if p.passed() { "PASS" } else { "FAIL" },
                p.name,
                p.checked,
                p.skipped,
                p.failed
            ));
            if let Some(c) = &p.counterexample {
                out.push_str("  counterexample: ");
                out.push_str(&c.replace('\n', "\n  "));
                out.push('\n');
            }
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        let failed = self.properties.iter().filter(|p| !p.passed()).count();
        if failed == 0 {
            out.push_str("all properties hold\n");
        } else {
            out.push_str(&format!("{failed} properties failed\n"));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "passed": self.passed(),
            "properties": self.properties.iter().map(|p| json!({
                "name": p.name,
                "passed": p.passed(),
                "checked": p.checked,
                "skipped": p.skipped,
                "failed": p.failed,
                "counterexample": p.counterexample,
            })).collect::<Vec<_>>(),
            "notes": self.notes,
        })
    }
}

/// Compares the oracle value of every state of `trace` with its initial
/// state on each model.
pub fn check_trace_states(report: &mut PropertyReport, trace: &DerivationTrace, models: &[Model]) {
    for m in models {
        let first = match oracle_eval(&trace.initial, m) {
            Ok(v) => v,
            Err(_) => {
                report.skip();
                continue;
            }
        };
        for (k, state) in trace.states().into_iter().enumerate().skip(1) {
            match oracle_eval(state, m) {
                Ok(v) if v == first => report.pass(),
                Ok(v) => report.fail(k, || {
                    format!(
                        "state {k} of {} ⇒ {}: {} = {v}, initial = {first}\n  model = {}",
                        print_expr(&trace.initial),
                        print_expr(trace.final_expr()),
                        print_expr(state),
                        model_to_json(m)
                    )
                }),
                Err(OracleError::ZeroWeightConditioning { .. }) => report.skip(),
                Err(e) => report.fail(k, || format!("state {k}: {}: {e}", print_expr(state))),
            }
        }
    }
}

/// Models for the expectation-theorem check: domains of 2 to 8 points,
/// uniform, point masses at each end, and random weights with zeros.
pub fn expectation_fixtures() -> Vec<Model> {
    let x = Symbol::new("x");
    let mut r = gen::rng(42);
    let mut out = Vec::new();
    for size in 2..=8i64 {
        let domain: Vec<Rational> = (0..size).map(|i| rat(3 * i - size, 2)).collect();
        let var = vec![(x.clone(), domain.clone())];
        out.push(Model::uniform(var.clone(), Vec::new()).expect("valid domain"));
        for v in [&domain[0], &domain[domain.len() - 1]] {
            let mass = vec![(
                Outcome {
                    values: vec![v.clone()],
                    truths: Vec::new(),
                },
                int(1),
            )];
            out.push(Model::new(var.clone(), Vec::new(), mass).expect("point mass"));
        }
        out.push(gen::random_model(&mut r, var.clone(), Vec::new(), 64, 0.4));
        out.push(gen::random_model(&mut r, var, vec![Symbol::new("A")], 16, 0.3));
    }
    out
}

fn model_has_atoms(m: &Model, names: &[&str]) -> bool {
    names.iter().all(|a| m.atom_index(&Symbol::new(a)).is_some())
}

pub fn run_check(cfg: &CheckConfig) -> CheckReport {
    let mut properties: Vec<PropertyReport> = Vec::new();
    let mut notes = Vec::new();
    let trials = cfg.trials.max(1);
    let seed = cfg.seed;

    // Requirements 0 to 3.
    match &cfg.model {
        Some(m) => properties.extend(check_requirements(m, trials, REQUIREMENT_DEPTH, seed).properties),
        None => {
            let mut r = gen::rng(seed);
            let mut merged = Vec::new();
            for t in 0..trials {
                let m = gen::random_mixed_model(&mut r);
                let rep = check_requirements(&m, 1, REQUIREMENT_DEPTH, seed.wrapping_add(t as u64));
                merge_reports(&mut merged, rep.properties);
            }
            properties.extend(merged);
        }
    }

    // Probability rules.
    let rule_models: Vec<Model> = match &cfg.model {
        Some(m) if model_has_atoms(m, &["A", "B"]) => vec![m.clone()],
        Some(_) => {
            notes.push("model lacks atoms A and B; probability rules use generated models".into());
            generated_two_bit(trials, seed)
        }
        None => generated_two_bit(trials, seed),
    };
    let mut negation = PropertyReport::new("negation rule");
    let mut sum = PropertyReport::new("sum rule");
    let mut product = PropertyReport::new("product rule");
    let mut product_skips = 0;
    for m in &rule_models {
        let rep = verify_rules_numerically(m, "A", "B");
        if rep.note.is_some() {
            product_skips += 1;
        }
        negation.merge(rep.negation);
        sum.merge(rep.sum);
        product.merge(rep.product);
    }
    if product_skips > 0 {
        notes.push(format!("product rule skipped on {product_skips} models with P(A|I) = 0"));
    }
    properties.extend([negation, sum, product]);

    // Expectation theorem.
    let mut expectation = PropertyReport::new("expectation theorem");
    let mut fixtures = expectation_fixtures();
    if let Some(m) = &cfg.model {
        fixtures.insert(0, m.clone());
    }
    for m in &fixtures {
        for (x, _) in m.variables() {
            match expectation_decomposition(m, x) {
                Ok(d) if d.holds() => expectation.pass(),
                Ok(d) => expectation.fail(d.values.len(), || {
                    format!(
                        "decomposition of {x}: p = {:?}, estimate = {}\n  model = {}",
                        d.probabilities.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                        d.estimate,
                        model_to_json(m)
                    )
                }),
                Err(e) => expectation.fail(usize::MAX - 1, || format!("{x}: {e}")),
            }
        }
    }
    properties.push(expectation);

    // Scripted derivations, every state against the oracle.
    let engine = &cfg.engine;
    let two_bit = match &cfg.model {
        Some(m) if model_has_atoms(m, &["A", "B"]) => vec![m.clone()],
        _ => generated_two_bit(100, seed ^ 0x5eed),
    };
    let i = Context::new("I");
    let (a, b) = (Prop::atom("A"), Prop::atom("B"));
    let derivations = [
        ("negation derivation", derive_negation(engine, &a, &i)),
        ("sum derivation", derive_sum(engine, &a, &b, &i)),
        ("product derivation", derive_product_rule(engine, &a, &b, &i)),
    ];
    for (name, trace) in derivations {
        let mut rep = PropertyReport::new(name);
        match trace {
            Ok(t) => {
                if let Err(e) = t.replay(engine) {
                    rep.fail(0, || format!("replay failed: {e}"));
                }
                check_trace_states(&mut rep, &t, &two_bit);
            }
            Err(e) => rep.fail(0, || format!("derivation failed: {e}")),
        }
        properties.push(rep);
    }

    // Rule soundness and the probability fragment.
    let mut pool = model_pool(16, seed);
    if let Some(m) = &cfg.model {
        pool.insert(0, m.clone());
    }
    let rounds = (trials / 4).max(40);
    properties.extend(check_rule_soundness(engine, &pool, rounds, seed));
    properties.push(check_probability_range(
        engine,
        &gen::quarter_two_bit_models(),
        (trials / 10).max(20),
        seed,
    ));

    CheckReport { properties, notes }
}

fn generated_two_bit(count: usize, seed: u64) -> Vec<Model> {
    let mut r = gen::rng(seed.wrapping_add(1));
    (0..count).map(|_| gen::random_two_bit_model(&mut r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::RuleKind;

    #[test]
    fn default_check_passes() {
        let cfg = CheckConfig {
            trials: 80,
            ..CheckConfig::default()
        };
        let report = run_check(&cfg);
        assert!(report.passed(), "{}", report.render_text());
    }

    #[test]
    fn faulty_engine_fails() {
        let cfg = CheckConfig {
            trials: 40,
            engine: Engine::new().with_fault(RuleKind::TwoValued),
            ..CheckConfig::default()
        };
        let report = run_check(&cfg);
        assert!(!report.passed());
        assert!(report.render_text().contains("counterexample"));
    }

    #[test]
    fn fixtures_cover_sizes_two_to_eight() {
        let sizes: Vec<usize> = expectation_fixtures()
            .iter()
            .map(|m| m.variables()[0].1.len())
            .collect();
        assert_eq!(sizes.iter().min(), Some(&2));
        assert_eq!(sizes.iter().max(), Some(&8));
    }
}
