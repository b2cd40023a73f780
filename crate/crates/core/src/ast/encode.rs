use super::{Expr, Prop};

/// Arithmetic image of a proposition over {0, 1}.
///
/// Leaves map to `n(A)` / `n(x=c)`; negation becomes `1 - n(p)`, conjunction
/// a product, and disjunction `n(p) + n(q) - n(p)n(q)`.
pub fn encode_prop(p: &Prop) -> Expr {
    match p {
        Prop::Atom(_) | Prop::Equals(..) => Expr::PropEnc(p.clone()),
        Prop::Not(q) => Expr::sub(Expr::one(), encode_prop(q)),
        Prop::And(a, b) => Expr::mul(vec![encode_prop(a), encode_prop(b)]),
        Prop::Or(a, b) => {
            let (ea, eb) = (encode_prop(a), encode_prop(b));
            Expr::add(vec![
                ea.clone(),
                eb.clone(),
                Expr::neg(Expr::mul(vec![ea, eb])),
            ])
        }
    }
}

/// One connective's worth of [`encode_prop`]: children stay encoded as
/// `n(child)` so each rewrite step expands exactly one connective.
pub(crate) fn encode_top(p: &Prop) -> Option<Expr> {
    Some(match p {
        Prop::Atom(_) | Prop::Equals(..) => return None,
        Prop::Not(q) => Expr::sub(Expr::one(), Expr::n((**q).clone())),
        Prop::And(a, b) => Expr::mul(vec![Expr::n((**a).clone()), Expr::n((**b).clone())]),
        Prop::Or(a, b) => {
            let (ea, eb) = (Expr::n((**a).clone()), Expr::n((**b).clone()));
            Expr::add(vec![
                ea.clone(),
                eb.clone(),
                Expr::neg(Expr::mul(vec![ea, eb])),
            ])
        }
    })
}
