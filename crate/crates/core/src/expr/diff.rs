//! Symbolic partial derivatives.

use num::One;

use super::{Expr, Func, Node, Var};

pub(super) fn diff(e: &Expr, v: Var) -> Expr {
    if !e.contains_var(v) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) | Node::I => Expr::zero(),
        Node::Var(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(ts) => Expr::add(ts.iter().map(|t| diff(t, v)).collect()),
        Node::Mul(fs) => {
            let mut terms = Vec::new();
            for (k, f) in fs.iter().enumerate() {
                let df = diff(f, v);
                if df.is_zero() {
                    continue;
                }
                let mut prod: Vec<Expr> = fs.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, g)| g.clone()).collect();
                prod.push(df);
                terms.push(Expr::mul(prod));
            }
            Expr::add(terms)
        }
        Node::Pow(b, k) => {
            if let Some(q) = k.as_num() {
                // q * b^(q-1) * b'
                let q1 = q - num::BigRational::one();
                return Expr::mul(vec![Expr::num(q.clone()), Expr::pow(b.clone(), Expr::num(q1)), diff(b, v)]);
            }
            // b^k * (k' log b + k b'/b)
            let inner = Expr::add(vec![
                Expr::mul(vec![diff(k, v), Expr::func(Func::Log, b.clone())]),
                Expr::mul(vec![k.clone(), diff(b, v), Expr::powi(b.clone(), -1)]),
            ]);
            Expr::mul(vec![e.clone(), inner])
        }
        Node::Func(f, a) => {
            let da = diff(a, v);
            let outer = match f {
                Func::Exp => e.clone(),
                Func::Log => Expr::powi(a.clone(), -1),
                Func::Sin => Expr::func(Func::Cos, a.clone()),
                Func::Cos => Expr::neg(Expr::func(Func::Sin, a.clone())),
                Func::Tan => Expr::powi(Expr::func(Func::Cos, a.clone()), -2),
                Func::Sinh => Expr::func(Func::Cosh, a.clone()),
                Func::Cosh => Expr::func(Func::Sinh, a.clone()),
                Func::Tanh => Expr::powi(Expr::func(Func::Cosh, a.clone()), -2),
                Func::Coth => Expr::neg(Expr::powi(Expr::func(Func::Sinh, a.clone()), -2)),
            };
            Expr::mul(vec![outer, da])
        }
    }
}
