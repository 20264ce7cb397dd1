//! Symbolic expressions in the two variables `x` and `u`.
//!
//! Nodes are immutable and shared through `Arc`. All construction goes
//! through the smart constructors below, which flatten nested sums and
//! products, fold numeric subterms and place numeric coefficients first.
//! The parser uses the same constructors, so `parse(print(e)) == e` holds for
//! every expression they build.

mod diff;
mod domain;
mod eval;
mod parse;
mod print;
mod simplify;

use std::sync::Arc;

use num::{BigInt, One, Signed, Zero};

use crate::ratfun::{rational_sqrt, GaussRat, Poly, RatFun, Rational};

pub use domain::{Constraint, Domain, DomainError, Relation};
pub use eval::EvalError;
pub use parse::{parse, ParseError};
pub use simplify::{is_zero, simplify, to_ratfun, ToRatFunError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    U,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Coth,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Coth => "coth",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "coth" => Func::Coth,
            _ => return None,
        })
    }
}

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Num(Rational),
    /// The imaginary unit.
    I,
    Var(Var),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Func(Func, Expr),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<Node>);

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl Expr {
    fn mk(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(q: Rational) -> Expr {
        Expr::mk(Node::Num(q))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(int(n))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::num(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn i() -> Expr {
        Expr::mk(Node::I)
    }

    pub fn var(v: Var) -> Expr {
        Expr::mk(Node::Var(v))
    }

    pub fn x() -> Expr {
        Expr::var(Var::X)
    }

    pub fn u() -> Expr {
        Expr::var(Var::U)
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(|q| q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(|q| q.is_one())
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut c = Rational::zero();
        for t in terms {
            match t.node() {
                Node::Add(ts) => {
                    for s in ts {
                        match s.node() {
                            Node::Num(q) => c += q,
                            _ => flat.push(s.clone()),
                        }
                    }
                }
                Node::Num(q) => c += q,
                _ => flat.push(t),
            }
        }
        if !c.is_zero() {
            flat.push(Expr::num(c));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::mk(Node::Add(flat)),
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut c = Rational::one();
        for f in factors {
            match f.node() {
                Node::Mul(fs) => {
                    for g in fs {
                        match g.node() {
                            Node::Num(q) => c *= q,
                            _ => flat.push(g.clone()),
                        }
                    }
                }
                Node::Num(q) => c *= q,
                _ => flat.push(f),
            }
        }
        if c.is_zero() {
            return Expr::zero();
        }
        // numerator factors keep their order and precede denominator factors
        let (mut out, dens): (Vec<Expr>, Vec<Expr>) = flat.into_iter().partition(|f| !f.is_denominator());
        out.extend(dens);
        if !c.is_one() {
            out.insert(0, Expr::num(c));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::mk(Node::Mul(out)),
        }
    }

    /// `b^e` with a negative numeric exponent.
    pub fn is_denominator(&self) -> bool {
        match self.node() {
            Node::Pow(_, e) => e.as_num().is_some_and(|q| q.is_negative()),
            _ => false,
        }
    }

    pub fn pow(b: Expr, e: Expr) -> Expr {
        let Some(q) = e.as_num() else {
            return Expr::mk(Node::Pow(b, e));
        };
        if q.is_zero() {
            return Expr::one();
        }
        if q.is_one() {
            return b;
        }
        if let Some(bq) = b.as_num() {
            if bq.is_one() {
                return Expr::one();
            }
            if q.is_integer() && !(bq.is_zero() && q.is_negative()) {
                if let Some(k) = num::ToPrimitive::to_i32(&q.to_integer()) {
                    return Expr::num(num::pow::Pow::pow(bq, k));
                }
            }
            if *q.denom() == BigInt::from(2) && !bq.is_negative() {
                if let Some(r) = rational_sqrt(bq) {
                    if !(r.is_zero() && q.is_negative()) {
                        return Expr::pow(Expr::num(r), Expr::num(Rational::from_integer(q.numer().clone())));
                    }
                }
            }
        }
        if let Node::Pow(b2, e2) = b.node() {
            if let Some(q2) = e2.as_num() {
                if q.is_integer() {
                    return Expr::pow(b2.clone(), Expr::num(q2 * q));
                }
            }
        }
        Expr::mk(Node::Pow(b, e))
    }

    pub fn powi(b: Expr, k: i64) -> Expr {
        Expr::pow(b, Expr::int(k))
    }

    pub fn sqrt(b: Expr) -> Expr {
        Expr::pow(b, Expr::frac(1, 2))
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        if a.is_zero() {
            match f {
                Func::Sin | Func::Tan | Func::Sinh | Func::Tanh => return Expr::zero(),
                Func::Cos | Func::Cosh | Func::Exp => return Expr::one(),
                _ => {}
            }
        }
        if f == Func::Log && a.is_one() {
            return Expr::zero();
        }
        Expr::mk(Node::Func(f, a))
    }

    /// Negation that keeps a single leading numeric coefficient.
    pub fn neg(e: Expr) -> Expr {
        match e.node() {
            Node::Num(q) => Expr::num(-q.clone()),
            Node::Mul(fs) => {
                if let Some(q) = fs[0].as_num() {
                    let mut rest = fs.clone();
                    rest[0] = Expr::num(-q.clone());
                    Expr::mul(rest)
                } else {
                    let mut v = vec![Expr::int(-1)];
                    v.extend(fs.iter().cloned());
                    Expr::mk(Node::Mul(v))
                }
            }
            _ => Expr::mk(Node::Mul(vec![Expr::int(-1), e])),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(vec![a, Expr::neg(b)])
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::mul(vec![a, Expr::powi(b, -1)])
    }

    /// A term printed with a leading minus sign.
    pub fn is_negative_term(&self) -> bool {
        match self.node() {
            Node::Num(q) => q.is_negative(),
            Node::Mul(fs) => fs[0].as_num().is_some_and(|q| q.is_negative()),
            _ => false,
        }
    }

    pub fn contains_var(&self, v: Var) -> bool {
        match self.node() {
            Node::Num(_) | Node::I => false,
            Node::Var(w) => *w == v,
            Node::Add(ts) | Node::Mul(ts) => ts.iter().any(|t| t.contains_var(v)),
            Node::Pow(b, e) => b.contains_var(v) || e.contains_var(v),
            Node::Func(_, a) => a.contains_var(v),
        }
    }

    pub fn contains_i(&self) -> bool {
        match self.node() {
            Node::I => true,
            Node::Num(_) | Node::Var(_) => false,
            Node::Add(ts) | Node::Mul(ts) => ts.iter().any(|t| t.contains_i()),
            Node::Pow(b, e) => b.contains_i() || e.contains_i(),
            Node::Func(_, a) => a.contains_i(),
        }
    }

    /// Replaces every occurrence of `v` by `by`.
    pub fn substitute(&self, v: Var, by: &Expr) -> Expr {
        match self.node() {
            Node::Var(w) if *w == v => by.clone(),
            Node::Num(_) | Node::I | Node::Var(_) => self.clone(),
            Node::Add(ts) => Expr::add(ts.iter().map(|t| t.substitute(v, by)).collect()),
            Node::Mul(ts) => Expr::mul(ts.iter().map(|t| t.substitute(v, by)).collect()),
            Node::Pow(b, e) => Expr::pow(b.substitute(v, by), e.substitute(v, by)),
            Node::Func(f, a) => Expr::func(*f, a.substitute(v, by)),
        }
    }

    pub fn node_count(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::I | Node::Var(_) => 1,
            Node::Add(ts) | Node::Mul(ts) => 1 + ts.iter().map(Expr::node_count).sum::<usize>(),
            Node::Pow(b, e) => 1 + b.node_count() + e.node_count(),
            Node::Func(_, a) => 1 + a.node_count(),
        }
    }

    pub fn diff(&self, v: Var) -> Expr {
        diff::diff(self, v)
    }

    pub fn eval(&self, x: f64, u: f64) -> Result<f64, EvalError> {
        eval::eval_real(self, x, u)
    }

    pub fn eval_complex(&self, x: f64, u: f64) -> Result<num::complex::Complex64, EvalError> {
        eval::eval_complex(self, x, u)
    }

    pub fn simplify(&self) -> Expr {
        simplify(self)
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::add(vec![self, o])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        Expr::sub(self, o)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::mul(vec![self, o])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        Expr::div(self, o)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Expr, ParseError> {
        parse(s)
    }
}

fn from_gauss(c: &GaussRat) -> Expr {
    let re = Expr::num(c.re.clone());
    if c.im.is_zero() {
        return re;
    }
    let im = Expr::mul(vec![Expr::num(c.im.clone()), Expr::i()]);
    Expr::add(vec![im, re])
}

/// `Σ c_k x^k`, highest degree first.
pub fn from_poly(p: &Poly) -> Expr {
    let terms = p
        .coeffs()
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| Expr::mul(vec![from_gauss(c), Expr::powi(Expr::x(), k as i64)]))
        .collect();
    Expr::add(terms)
}

/// Simplified `num / den`.
pub fn from_ratfun(r: &RatFun) -> Expr {
    simplify(&Expr::div(from_poly(r.num()), from_poly(r.den())))
}
