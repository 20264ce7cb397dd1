//! Grammar-compatible printer.

use std::fmt;

use num::Signed;

use super::{Expr, Node, Var};
use crate::ratfun::Rational;

const ADD: u8 = 1;
const MUL: u8 = 2;
const POW: u8 = 3;
const ATOM: u8 = 4;

fn rational_atom(q: &Rational) -> String {
    if q.is_integer() && !q.is_negative() {
        q.numer().to_string()
    } else if q.is_integer() {
        format!("({})", q.numer())
    } else {
        format!("({}/{})", q.numer(), q.denom())
    }
}

/// Prints `e` in a context of precedence `prec`.
fn signed(e: &Expr, prec: u8, out: &mut String) {
    if e.is_negative_term() {
        if prec > ADD {
            out.push_str("(-");
            unsigned(&Expr::neg(e.clone()), MUL, out);
            out.push(')');
        } else {
            out.push('-');
            unsigned(&Expr::neg(e.clone()), MUL, out);
        }
    } else {
        unsigned(e, prec, out);
    }
}

fn unsigned(e: &Expr, prec: u8, out: &mut String) {
    match e.node() {
        Node::Num(q) => out.push_str(&rational_atom(q)),
        Node::I => out.push('i'),
        Node::Var(Var::X) => out.push('x'),
        Node::Var(Var::U) => out.push('u'),
        Node::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            signed(a, 0, out);
            out.push(')');
        }
        Node::Add(ts) => {
            if prec > ADD {
                out.push('(');
            }
            for (k, t) in ts.iter().enumerate() {
                if k == 0 {
                    signed(t, ADD, out);
                } else if t.is_negative_term() {
                    out.push_str(" - ");
                    unsigned(&Expr::neg(t.clone()), MUL, out);
                } else {
                    out.push_str(" + ");
                    unsigned(t, MUL, out);
                }
            }
            if prec > ADD {
                out.push(')');
            }
        }
        Node::Mul(fs) => {
            if prec > MUL {
                out.push('(');
            }
            let mut nums = Vec::new();
            let mut dens = Vec::new();
            for f in fs {
                match f.node() {
                    Node::Pow(b, k) if f.is_denominator() => {
                        dens.push(Expr::pow(b.clone(), Expr::num(-k.as_num().unwrap().clone())))
                    }
                    _ => nums.push(f),
                }
            }
            if nums.is_empty() {
                out.push('1');
            }
            for (k, f) in nums.iter().enumerate() {
                if k > 0 {
                    out.push('*');
                }
                signed(f, MUL + 1, out);
            }
            for d in &dens {
                out.push('/');
                signed(d, POW, out);
            }
            if prec > MUL {
                out.push(')');
            }
        }
        Node::Pow(b, k) => {
            if let Some(q) = k.as_num() {
                if q.is_negative() {
                    if prec > MUL {
                        out.push('(');
                    }
                    out.push_str("1/");
                    unsigned(&Expr::pow(b.clone(), Expr::num(-q.clone())), POW, out);
                    if prec > MUL {
                        out.push(')');
                    }
                    return;
                }
                if *q == Rational::new(1.into(), 2.into()) {
                    out.push_str("sqrt(");
                    signed(b, 0, out);
                    out.push(')');
                    return;
                }
            }
            if prec > POW {
                out.push('(');
            }
            signed(b, ATOM, out);
            out.push('^');
            signed(k, POW, out);
            if prec > POW {
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        signed(self, 0, &mut s);
        f.write_str(&s)
    }
}
