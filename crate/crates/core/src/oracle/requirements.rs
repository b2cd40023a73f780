//! Numerical checks of the four requirements and the probability rules.

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::{model_to_json, oracle_eval, Model, OracleError};
use crate::ast::{eval_ground, Context, Expr, Param, Prop, Rational, Subst, Symbol};
use crate::gen::{self, Vocabulary};
use crate::parser::print_expr;
use rand::Rng;

/// Outcome of one property over many cases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub checked: usize,
    pub skipped: usize,
    pub failed: usize,
    /// Smallest failing case seen, as text.
    pub counterexample: Option<String>,
    #[serde(skip)]
    counterexample_size: usize,
}

impl PropertyReport {
    pub fn new(name: &str) -> Self {
        PropertyReport {
            name: name.to_string(),
            checked: 0,
            skipped: 0,
            failed: 0,
            counterexample: None,
            counterexample_size: usize::MAX,
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    pub fn pass(&mut self) {
        self.checked += 1;
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Records a failure; keeps the description of the smallest one.
    pub fn fail(&mut self, size: usize, describe: impl FnOnce() -> String) {
        self.checked += 1;
        self.failed += 1;
        if size < self.counterexample_size {
            self.counterexample_size = size;
            self.counterexample = Some(describe());
        }
    }

    pub fn merge(&mut self, other: PropertyReport) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.failed += other.failed;
        if other.counterexample_size < self.counterexample_size {
            self.counterexample_size = other.counterexample_size;
            self.counterexample = other.counterexample;
        }
    }
}

/// Merges reports by name, keeping first-seen order.
pub fn merge_reports(into: &mut Vec<PropertyReport>, from: Vec<PropertyReport>) {
    for r in from {
        match into.iter_mut().find(|x| x.name == r.name) {
            Some(existing) => existing.merge(r),
            None => into.push(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequirementsReport {
    pub properties: Vec<PropertyReport>,
}

impl RequirementsReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyReport::passed)
    }
}

pub(crate) fn describe_case(m: &Model, what: &str, lhs: &Rational, rhs: &Rational) -> String {
    format!("{what}\n  left = {lhs}, right = {rhs}\n  model = {}", model_to_json(m))
}

/// Compares two oracle values. Zero-weight conditioning on either side is
/// a skip; any other error counts as a failure.
pub(crate) fn compare(
    report: &mut PropertyReport,
    m: &Model,
    lhs: &Expr,
    rhs: &Expr,
) {
    match (oracle_eval(lhs, m), oracle_eval(rhs, m)) {
        (Ok(a), Ok(b)) if a == b => report.pass(),
        (Ok(a), Ok(b)) => report.fail(lhs.node_count() + rhs.node_count(), || {
            describe_case(m, &format!("{} = {}", print_expr(lhs), print_expr(rhs)), &a, &b)
        }),
        (Err(OracleError::ZeroWeightConditioning { .. }), _)
        | (_, Err(OracleError::ZeroWeightConditioning { .. })) => report.skip(),
        (Err(e), _) | (_, Err(e)) => report.fail(lhs.node_count() + rhs.node_count(), || {
            format!(
                "{} = {}\n  error: {e}\n  model = {}",
                print_expr(lhs),
                print_expr(rhs),
                model_to_json(m)
            )
        }),
    }
}

fn conditioning(r: &mut impl Rng, vocab: &Vocabulary) -> Context {
    let ctx = Context::new("I");
    if !vocab.atoms.is_empty() && r.random_bool(0.3) {
        ctx.assert(gen::random_prop(r, vocab, 1))
    } else {
        ctx
    }
}

/// Requirements 0 to 3 on `trials` random estimation-free bodies of depth
/// at most `depth`.
pub fn check_requirements(m: &Model, trials: usize, depth: usize, seed: u64) -> RequirementsReport {
    let vocab = Vocabulary::of_model(m);
    let mut r = gen::rng(seed);
    let mut req0 = PropertyReport::new("requirement 0: known evaluation");
    let mut req1 = PropertyReport::new("requirement 1: bounds");
    let mut req2 = PropertyReport::new("requirement 2: linearity");
    let mut req3 = PropertyReport::new("requirement 3: tower");
    let support: Vec<_> = m.support().map(|(o, _)| o.clone()).collect();

    for _ in 0..trials {
        let f = gen::random_body(&mut r, &vocab, depth);
        let g = gen::random_body(&mut r, &vocab, depth);
        let ctx = conditioning(&mut r, &vocab);

        // Requirement 0: a total assignment drawn from the support.
        let o = &support[r.random_range(0..support.len())];
        let mut total = Context::new("I");
        let mut values = Subst::default();
        for ((v, _), x) in m.variables().iter().zip(&o.values) {
            total.insert_assignment(v.clone(), x.clone()).expect("distinct");
            values.unknowns.insert(v.clone(), x.clone());
        }
        for (a, t) in m.atoms().iter().zip(&o.truths) {
            let lit = Prop::Atom(a.clone());
            total = total.assert(if *t { lit } else { Prop::not(lit) });
            values.atoms.insert(a.clone(), *t);
        }
        let lhs = Expr::est(f.clone(), total);
        match (oracle_eval(&lhs, m), eval_ground(&f, &values)) {
            (Ok(a), Ok(b)) if a == b => req0.pass(),
            (a, b) => req0.fail(f.node_count(), || {
                format!("{}: oracle {a:?}, direct {b:?}\n  model = {}", print_expr(&lhs), model_to_json(m))
            }),
        }

        // Requirement 1: the estimate lies between the extreme values of f
        // over the outcomes the context admits.
        let est = Expr::est(f.clone(), ctx.clone());
        match oracle_eval(&est, m) {
            Ok(v) => {
                let admitted = admitted_values(m, &f, &ctx);
                let lo = admitted.iter().min();
                let hi = admitted.iter().max();
                match (lo, hi) {
                    (Some(lo), Some(hi)) if *lo <= v && v <= *hi => req1.pass(),
                    _ => req1.fail(f.node_count(), || {
                        format!("{} = {v} outside admitted range\n  model = {}", print_expr(&est), model_to_json(m))
                    }),
                }
            }
            Err(OracleError::ZeroWeightConditioning { .. }) => req1.skip(),
            Err(e) => req1.fail(f.node_count(), || format!("{}: {e}", print_expr(&est))),
        }
        for (v, domain) in m.variables() {
            let e = Expr::est(Expr::Unknown(v.clone()), ctx.clone());
            match oracle_eval(&e, m) {
                Ok(x) if domain.iter().min().unwrap() <= &x && &x <= domain.iter().max().unwrap() => {
                    req1.pass()
                }
                Ok(x) => req1.fail(1, || format!("{} = {x} outside the domain", print_expr(&e))),
                Err(_) => req1.skip(),
            }
        }

        // Requirement 2: additivity, constant scaling, and scaling by a
        // quantity the context fixes.
        let sum = Expr::est(Expr::add(vec![f.clone(), g.clone()]), ctx.clone());
        let split = Expr::add(vec![
            Expr::est(f.clone(), ctx.clone()),
            Expr::est(g.clone(), ctx.clone()),
        ]);
        compare(&mut req2, m, &sum, &split);
        let c = Expr::Const(Rational::new(r.random_range(-5..=5).into(), r.random_range(1..=4).into()));
        compare(
            &mut req2,
            m,
            &Expr::est(Expr::mul(vec![c.clone(), f.clone()]), ctx.clone()),
            &Expr::mul(vec![c, Expr::est(f.clone(), ctx.clone())]),
        );
        let a0 = Rational::new(r.random_range(-5..=5).into(), r.random_range(1..=4).into());
        let mut actx = ctx.clone();
        actx.insert_assignment(Symbol::new("alpha"), a0.clone()).expect("alpha is fresh");
        compare(
            &mut req2,
            m,
            &Expr::est(Expr::mul(vec![Expr::unknown("alpha"), f.clone()]), actx.clone()),
            &Expr::mul(vec![Expr::Const(a0), Expr::est(f.clone(), actx)]),
        );

        // Requirement 3: averaging out a parameter.
        let param = random_param(&mut r, m);
        let mut inner = ctx.clone();
        if inner.insert_param(param.clone()).is_ok() {
            compare(
                &mut req3,
                m,
                &Expr::est(Expr::est(f.clone(), inner), ctx.clone()),
                &Expr::est(f.clone(), ctx.clone()),
            );
            tower_by_cases(&mut req3, m, &f, &ctx, &param);
        }
    }
    RequirementsReport {
        properties: vec![req0, req1, req2, req3],
    }
}

/// The tower property written out over the values of the parameter:
/// est(f | ctx) = sum_v P(v | ctx) est(f | v, ctx). Values with zero weight
/// leave est(f | v, ctx) undefined; they are skipped and counted.
fn tower_by_cases(report: &mut PropertyReport, m: &Model, f: &Expr, ctx: &Context, param: &Param) {
    let cases: Vec<(Expr, Context)> = match param {
        Param::Unknown(x) => {
            let domain = m.domain(x).map(<[Rational]>::to_vec).unwrap_or_default();
            domain
                .into_iter()
                .filter_map(|v| {
                    let mut c = ctx.clone();
                    c.insert_assignment(x.clone(), v.clone()).ok()?;
                    Some((Expr::delta(Expr::Const(v), Expr::Unknown(x.clone())), c))
                })
                .collect()
        }
        Param::Prop(p) => [p.clone(), Prop::not(p.clone())]
            .into_iter()
            .map(|q| (Expr::n(q.clone()), ctx.clone().assert(q)))
            .collect(),
    };
    let Ok(whole) = oracle_eval(&Expr::est(f.clone(), ctx.clone()), m) else {
        report.skip();
        return;
    };
    let mut terms = Vec::new();
    for (indicator, c) in cases {
        match oracle_eval(&Expr::est(f.clone(), c.clone()), m) {
            Ok(_) => terms.push(Expr::mul(vec![
                Expr::est(indicator, ctx.clone()),
                Expr::est(f.clone(), c),
            ])),
            Err(OracleError::ZeroWeightConditioning { .. }) => report.skip(),
            Err(_) => return report.skip(),
        }
    }
    let split = Expr::add(terms);
    match oracle_eval(&split, m) {
        Ok(v) if v == whole => report.pass(),
        Ok(v) => report.fail(f.node_count(), || {
            describe_case(m, &format!("tower by cases of {} under {}", print_expr(f), crate::parser::print_context(ctx)), &whole, &v)
        }),
        Err(_) => report.skip(),
    }
}

fn random_param(r: &mut impl Rng, m: &Model) -> Param {
    let nv = m.variables().len();
    let k = r.random_range(0..nv + m.atoms().len());
    if k < nv {
        Param::Unknown(m.variables()[k].0.clone())
    } else {
        Param::Prop(Prop::Atom(m.atoms()[k - nv].clone()))
    }
}

/// Values of `f` on the positive-weight outcomes consistent with `ctx`.
fn admitted_values(m: &Model, f: &Expr, ctx: &Context) -> Vec<Rational> {
    let mut out = Vec::new();
    for (o, _) in m.support() {
        let mut s = Subst::default();
        for ((v, _), x) in m.variables().iter().zip(&o.values) {
            s.unknowns.insert(v.clone(), x.clone());
        }
        for (a, t) in m.atoms().iter().zip(&o.truths) {
            s.atoms.insert(a.clone(), *t);
        }
        let consistent = ctx.assignments().iter().all(|(u, v)| s.unknowns.get(u) == Some(v))
            && ctx.asserted().iter().all(|p| {
                p.eval_with(&|a| s.atoms.get(a).copied(), &|u| s.unknowns.get(u).cloned())
                    .unwrap_or(false)
            });
        if consistent {
            if let Ok(v) = eval_ground(f, &s) {
                out.push(v);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RulesReport {
    pub negation: PropertyReport,
    pub sum: PropertyReport,
    pub product: PropertyReport,
    /// Set when the product rule was skipped because P(A) = 0.
    pub note: Option<String>,
}

impl RulesReport {
    pub fn passed(&self) -> bool {
        self.negation.passed() && self.sum.passed() && self.product.passed()
    }
}

/// Negation, sum and product rules for atoms `a` and `b` under `m`.
pub fn verify_rules_numerically(m: &Model, a: &str, b: &str) -> RulesReport {
    let i = Context::new("I");
    let p = |prop: Prop, ctx: &Context| Expr::est(Expr::n(prop), ctx.clone());
    let (pa, pb) = (Prop::atom(a), Prop::atom(b));

    let mut negation = PropertyReport::new("negation rule");
    compare(
        &mut negation,
        m,
        &p(Prop::not(pa.clone()), &i),
        &Expr::sub(Expr::one(), p(pa.clone(), &i)),
    );

    let mut sum = PropertyReport::new("sum rule");
    compare(
        &mut sum,
        m,
        &p(Prop::or(pa.clone(), pb.clone()), &i),
        &Expr::add(vec![
            p(pa.clone(), &i),
            p(pb.clone(), &i),
            Expr::neg(p(Prop::and(pa.clone(), pb.clone()), &i)),
        ]),
    );

    let mut product = PropertyReport::new("product rule");
    let mut note = None;
    match oracle_eval(&p(pa.clone(), &i), m) {
        Ok(w) if w.is_zero() => {
            product.skip();
            note = Some(format!("product rule skipped: P({a}|I) = 0"));
        }
        _ => compare(
            &mut product,
            m,
            &p(Prop::and(pa.clone(), pb.clone()), &i),
            &Expr::mul(vec![p(pa.clone(), &i), p(pb, &i.clone().assert(pa))]),
        ),
    }
    RulesReport {
        negation,
        sum,
        product,
        note,
    }
}

/// Probabilities of each value of `x` and the estimate they recombine to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub values: Vec<Rational>,
    pub probabilities: Vec<Rational>,
    /// Oracle value of est(x | I).
    pub estimate: Rational,
    pub nonnegative: bool,
    pub normalized: bool,
    /// Whether sum_i x_i p_i equals the estimate.
    pub consistent: bool,
}

impl Decomposition {
    pub fn holds(&self) -> bool {
        self.nonnegative && self.normalized && self.consistent
    }
}

/// `p_i = est(delta(x_i, x) | I)` for every domain point of `x`.
pub fn expectation_decomposition(m: &Model, x: &Symbol) -> Result<Decomposition, OracleError> {
    let domain = m
        .domain(x)
        .ok_or_else(|| OracleError::UnboundSymbol(x.clone()))?
        .to_vec();
    let i = Context::new("I");
    let mut probabilities = Vec::with_capacity(domain.len());
    for v in &domain {
        let e = Expr::est(Expr::delta(Expr::Const(v.clone()), Expr::Unknown(x.clone())), i.clone());
        probabilities.push(oracle_eval(&e, m)?);
    }
    let estimate = oracle_eval(&Expr::est(Expr::Unknown(x.clone()), i), m)?;
    let total: Rational = probabilities.iter().cloned().sum();
    let weighted: Rational = domain.iter().zip(&probabilities).map(|(v, p)| v * p).sum();
    Ok(Decomposition {
        nonnegative: probabilities.iter().all(|p| !p.is_negative()),
        normalized: total == Rational::from_integer(1.into()),
        consistent: weighted == estimate,
        values: domain,
        probabilities,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{int, rat};
    use crate::oracle::tests::{two_bits, uniform_123};
    use crate::oracle::Outcome;

    #[test]
    fn requirements_hold_on_uniform_two_bits() {
        let m = two_bits(std::array::from_fn(|_| rat(1, 4)));
        let report = check_requirements(&m, 1000, 5, 3);
        assert!(report.passed(), "{report:?}");
        assert!(report.properties.iter().all(|p| p.checked > 0));
    }

    #[test]
    fn bounds_on_negative_domain() {
        let x = Symbol::new("x");
        let m = Model::uniform(vec![(x, vec![int(-1), int(4)])], vec![Symbol::new("A")]).unwrap();
        let report = check_requirements(&m, 200, 4, 9);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn zero_weight_points_are_skipped() {
        let x = Symbol::new("x");
        let o = |v: i64| Outcome {
            values: vec![int(v)],
            truths: vec![],
        };
        let m = Model::new(
            vec![(x, vec![int(0), int(1), int(2)])],
            vec![],
            vec![(o(0), rat(1, 2)), (o(1), rat(1, 2)), (o(2), int(0))],
        )
        .unwrap();
        let report = check_requirements(&m, 300, 4, 1);
        assert!(report.passed(), "{report:?}");
        let tower = &report.properties[3];
        assert!(tower.skipped > 0);
    }

    #[test]
    fn rules_on_uniform_and_degenerate_models() {
        let r = verify_rules_numerically(&two_bits(std::array::from_fn(|_| rat(1, 4))), "A", "B");
        assert!(r.passed() && r.note.is_none());
        // B = A: weight only on FF and TT.
        let r = verify_rules_numerically(&two_bits([rat(1, 2), int(0), int(0), rat(1, 2)]), "A", "B");
        assert!(r.passed());
        let r = verify_rules_numerically(&two_bits([rat(1, 2), rat(1, 2), int(0), int(0)]), "A", "B");
        assert!(r.passed());
        assert_eq!(r.product.skipped, 1);
        assert!(r.note.is_some());
    }

    #[test]
    fn decompositions() {
        let d = expectation_decomposition(&uniform_123(), &Symbol::new("x")).unwrap();
        assert_eq!(d.probabilities, vec![rat(1, 3); 3]);
        assert_eq!(d.estimate, int(2));
        assert!(d.holds());

        let x = Symbol::new("x");
        let o = |v: i64| Outcome {
            values: vec![int(v)],
            truths: vec![],
        };
        let m = Model::new(
            vec![(x.clone(), vec![int(0), int(1), int(2)])],
            vec![],
            vec![(o(0), rat(1, 2)), (o(1), rat(1, 4)), (o(2), rat(1, 4))],
        )
        .unwrap();
        let d = expectation_decomposition(&m, &x).unwrap();
        assert_eq!(d.estimate, rat(3, 4));
        assert!(d.holds());

        let m = Model::new(
            vec![(x.clone(), vec![int(1), int(2), int(3)])],
            vec![],
            vec![(
                Outcome {
                    values: vec![int(2)],
                    truths: vec![],
                },
                int(1),
            )],
        )
        .unwrap();
        let d = expectation_decomposition(&m, &x).unwrap();
        assert_eq!(d.probabilities, vec![int(0), int(1), int(0)]);
        assert_eq!(d.estimate, int(2));
    }
}
