//! Seeded random expressions, propositions and models for property tests.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::ast::{int, rat, Context, Expr, Param, Prop, Rational, Symbol};
use crate::oracle::{all_outcomes, Model};

pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng8;

/// Deterministic generator for a given seed.
pub fn rng(seed: u64) -> Rng8 {
    Rng8::seed_from_u64(seed)
}

/// Symbols a generated expression may use.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    /// Unknowns with the constants worth comparing them against.
    pub variables: Vec<(Symbol, Vec<Rational>)>,
    pub atoms: Vec<Symbol>,
}

impl Vocabulary {
    pub fn of_model(m: &Model) -> Self {
        Vocabulary {
            variables: m.variables().to_vec(),
            atoms: m.atoms().to_vec(),
        }
    }

    /// The default symbol set used for syntax-only tests.
    pub fn standard() -> Self {
        let small: Vec<Rational> = (-2..=3).map(int).collect();
        Vocabulary {
            variables: ["x", "y", "z", "w", "a", "b"]
                .iter()
                .map(|v| (Symbol::new(v), small.clone()))
                .collect(),
            atoms: ["A", "B", "C"].iter().map(|a| Symbol::new(a)).collect(),
        }
    }
}

fn small_rational(r: &mut impl Rng) -> Rational {
    let num = r.random_range(-6..=6);
    let den = *[1, 1, 1, 2, 3, 4].choose(r).unwrap();
    rat(num, den)
}

pub fn random_prop(r: &mut impl Rng, vocab: &Vocabulary, depth: usize) -> Prop {
    let leaf = depth == 0 || r.random_bool(0.35);
    if leaf {
        if !vocab.variables.is_empty() && (vocab.atoms.is_empty() || r.random_bool(0.2)) {
            let (v, domain) = vocab.variables.choose(r).unwrap();
            let c = domain.choose(r).cloned().unwrap_or_else(|| int(0));
            return Prop::Equals(v.clone(), c);
        }
        return Prop::Atom(vocab.atoms.choose(r).expect("vocabulary has atoms").clone());
    }
    match r.random_range(0..3) {
        0 => Prop::not(random_prop(r, vocab, depth - 1)),
        1 => Prop::and(random_prop(r, vocab, depth - 1), random_prop(r, vocab, depth - 1)),
        _ => Prop::or(random_prop(r, vocab, depth - 1), random_prop(r, vocab, depth - 1)),
    }
}

/// Estimation-free expression of depth at most `depth`.
pub fn random_body(r: &mut impl Rng, vocab: &Vocabulary, depth: usize) -> Expr {
    random_expr_with(r, vocab, depth, false)
}

/// Expression of depth at most `depth`, possibly with nested estimations.
pub fn random_expr(r: &mut impl Rng, vocab: &Vocabulary, depth: usize) -> Expr {
    random_expr_with(r, vocab, depth, true)
}

fn random_leaf(r: &mut impl Rng, vocab: &Vocabulary, depth: usize) -> Expr {
    let kinds = if depth >= 2 { 4 } else { 3 };
    match r.random_range(0..kinds) {
        0 => Expr::Const(small_rational(r)),
        1 if !vocab.variables.is_empty() => {
            Expr::Unknown(vocab.variables.choose(r).unwrap().0.clone())
        }
        2 if !vocab.atoms.is_empty() => Expr::n({ let d = r.random_range(0..=2); random_prop(r, vocab, d) }),
        3 if !vocab.variables.is_empty() => {
            let (v, domain) = vocab.variables.choose(r).unwrap();
            let c = domain.choose(r).cloned().unwrap_or_else(|| int(0));
            Expr::delta(Expr::Const(c), Expr::Unknown(v.clone()))
        }
        _ => Expr::Const(small_rational(r)),
    }
}

fn random_expr_with(r: &mut impl Rng, vocab: &Vocabulary, depth: usize, estims: bool) -> Expr {
    if depth <= 1 || r.random_bool(0.25) {
        return random_leaf(r, vocab, depth);
    }
    let d = depth - 1;
    let choice = r.random_range(0..if estims { 5 } else { 4 });
    match choice {
        0 | 1 => {
            let n = r.random_range(2..=3);
            Expr::Add((0..n).map(|_| random_expr_with(r, vocab, d, estims)).collect())
        }
        2 => {
            let n = r.random_range(2..=3);
            Expr::Mul((0..n).map(|_| random_expr_with(r, vocab, d, estims)).collect())
        }
        3 => Expr::delta(
            random_expr_with(r, vocab, d, estims),
            random_expr_with(r, vocab, d, estims),
        ),
        _ => Expr::est(random_expr_with(r, vocab, d, estims), random_context(r, vocab)),
    }
}

/// Random context over `vocab`: a few assignments, params and asserted
/// propositions on top of background `I` or `J`.
pub fn random_context(r: &mut impl Rng, vocab: &Vocabulary) -> Context {
    let mut ctx = Context::new(if r.random_bool(0.8) { "I" } else { "J" });
    let mut used = Vec::new();
    for _ in 0..r.random_range(0..=2) {
        let Some((v, domain)) = vocab.variables.choose(r) else {
            break;
        };
        if used.contains(v) {
            continue;
        }
        used.push(v.clone());
        if r.random_bool(0.5) {
            let c = domain.choose(r).cloned().unwrap_or_else(|| int(0));
            ctx.insert_assignment(v.clone(), c).expect("fresh unknown");
        } else {
            ctx.insert_param(Param::Unknown(v.clone())).expect("fresh unknown");
        }
    }
    if !vocab.atoms.is_empty() {
        if r.random_bool(0.3) {
            let p = { let d = r.random_range(0..=1); random_prop(r, vocab, d) };
            ctx.insert_param(Param::Prop(p)).expect("props never conflict");
        }
        if r.random_bool(0.3) {
            ctx = ctx.assert({ let d = r.random_range(0..=1); random_prop(r, vocab, d) });
        }
    }
    ctx
}

/// Weights `num / den` with `den <= max_den`, renormalized; at least one
/// outcome keeps a positive weight.
pub fn random_model(
    r: &mut impl Rng,
    variables: Vec<(Symbol, Vec<Rational>)>,
    atoms: Vec<Symbol>,
    max_den: i64,
    zero_chance: f64,
) -> Model {
    let outcomes = all_outcomes(&variables, atoms.len());
    let mut raw: Vec<(_, Rational)> = outcomes
        .into_iter()
        .map(|o| {
            let w = if r.random_bool(zero_chance) {
                int(0)
            } else {
                rat(r.random_range(1..=max_den), r.random_range(1..=max_den))
            };
            (o, w)
        })
        .collect();
    if raw.iter().all(|(_, w)| *w == int(0)) {
        let k = r.random_range(0..raw.len());
        raw[k].1 = int(1);
    }
    Model::from_raw_weights(variables, atoms, raw).expect("generated weights are valid")
}

/// Two atoms `A`, `B` with random weights.
pub fn random_two_bit_model(r: &mut impl Rng) -> Model {
    random_model(r, Vec::new(), vec![Symbol::new("A"), Symbol::new("B")], 64, 0.1)
}

/// Model with one or two small variables and up to two atoms.
pub fn random_mixed_model(r: &mut impl Rng) -> Model {
    let names = ["x", "y"];
    let nvars = r.random_range(1..=2);
    let variables = names[..nvars]
        .iter()
        .map(|n| {
            let size = r.random_range(2..=3);
            let mut domain: Vec<Rational> = Vec::new();
            while domain.len() < size {
                let v = int(r.random_range(-2..=4));
                if !domain.contains(&v) {
                    domain.push(v);
                }
            }
            domain.sort();
            (Symbol::new(n), domain)
        })
        .collect();
    let natoms = r.random_range(1..=2);
    let atoms = ["A", "B"][..natoms].iter().map(|a| Symbol::new(a)).collect();
    random_model(r, variables, atoms, 16, 0.15)
}

/// Every two-atom model whose four weights lie in {0, 1/4, 1/2, 3/4, 1}.
pub fn quarter_two_bit_models() -> Vec<Model> {
    let atoms = vec![Symbol::new("A"), Symbol::new("B")];
    let outcomes = all_outcomes(&[], 2);
    let mut out = Vec::new();
    for a in 0..=4i64 {
        for b in 0..=4 - a {
            for c in 0..=4 - a - b {
                let d = 4 - a - b - c;
                let weights = [a, b, c, d]
                    .iter()
                    .zip(&outcomes)
                    .map(|(q, o)| (o.clone(), rat(*q, 4)))
                    .collect();
                out.push(Model::new(Vec::new(), atoms.clone(), weights).expect("quarters sum to 1"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_models_are_all_compositions() {
        assert_eq!(quarter_two_bit_models().len(), 35);
    }

    #[test]
    fn generation_is_deterministic() {
        let vocab = Vocabulary::standard();
        let a: Vec<Expr> = (0..20).map(|_| ()).scan(rng(7), |r, _| Some(random_expr(r, &vocab, 5))).collect();
        let b: Vec<Expr> = (0..20).map(|_| ()).scan(rng(7), |r, _| Some(random_expr(r, &vocab, 5))).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|e| e.depth() <= 5));
    }

    #[test]
    fn random_models_are_normalized() {
        let mut r = rng(1);
        for _ in 0..50 {
            let m = random_mixed_model(&mut r);
            let total: Rational = m.support().map(|(_, w)| w.clone()).sum();
            assert_eq!(total, int(1));
        }
    }
}
