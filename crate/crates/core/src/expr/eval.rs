//! Floating-point evaluation.

use num::complex::Complex64;
use num::{Signed, ToPrimitive};
use thiserror::Error;

use super::{Expr, Func, Node, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("negative radicand in `{0}`")]
    NegativeRadicand(String),
    #[error("logarithm of a non-positive value in `{0}`")]
    LogDomain(String),
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
    #[error("imaginary unit in real evaluation of `{0}`")]
    Imaginary(String),
}

pub(super) fn eval_real(e: &Expr, x: f64, u: f64) -> Result<f64, EvalError> {
    let v = match e.node() {
        Node::Num(q) => q.to_f64().unwrap_or(f64::NAN),
        Node::I => return Err(EvalError::Imaginary(e.to_string())),
        Node::Var(Var::X) => x,
        Node::Var(Var::U) => u,
        Node::Add(ts) => {
            let mut s = 0.0;
            for t in ts {
                s += eval_real(t, x, u)?;
            }
            s
        }
        Node::Mul(fs) => {
            let mut p = 1.0;
            for f in fs {
                p *= eval_real(f, x, u)?;
            }
            p
        }
        Node::Pow(b, k) => {
            let bv = eval_real(b, x, u)?;
            match k.as_num() {
                Some(q) if q.is_integer() => {
                    let n = q.to_integer().to_i32().unwrap_or(i32::MAX);
                    if bv == 0.0 && n < 0 {
                        return Err(EvalError::DivisionByZero(e.to_string()));
                    }
                    bv.powi(n)
                }
                Some(q) => {
                    if bv == 0.0 && q.is_negative() {
                        return Err(EvalError::DivisionByZero(e.to_string()));
                    }
                    let odd_den = q.denom() % 2u32 == 1u32.into();
                    let qf = q.to_f64().unwrap();
                    if bv < 0.0 {
                        if !odd_den {
                            return Err(EvalError::NegativeRadicand(e.to_string()));
                        }
                        // real odd root, then the integer power
                        let odd_num = q.numer() % 2u32 != 0u32.into();
                        let m = (-bv).powf(qf);
                        if odd_num {
                            -m
                        } else {
                            m
                        }
                    } else if *q.denom() == 2u32.into() && q.numer().abs() == 1u32.into() {
                        let r = bv.sqrt();
                        if q.is_negative() {
                            1.0 / r
                        } else {
                            r
                        }
                    } else {
                        bv.powf(qf)
                    }
                }
                None => {
                    let kv = eval_real(k, x, u)?;
                    if bv < 0.0 {
                        return Err(EvalError::NegativeRadicand(e.to_string()));
                    }
                    if bv == 0.0 && kv < 0.0 {
                        return Err(EvalError::DivisionByZero(e.to_string()));
                    }
                    bv.powf(kv)
                }
            }
        }
        Node::Func(f, a) => {
            let av = eval_real(a, x, u)?;
            match f {
                Func::Exp => av.exp(),
                Func::Log => {
                    if av <= 0.0 {
                        return Err(EvalError::LogDomain(e.to_string()));
                    }
                    av.ln()
                }
                Func::Sin => av.sin(),
                Func::Cos => av.cos(),
                Func::Tan => {
                    if av.cos() == 0.0 {
                        return Err(EvalError::DivisionByZero(e.to_string()));
                    }
                    av.tan()
                }
                Func::Sinh => av.sinh(),
                Func::Cosh => av.cosh(),
                Func::Tanh => av.tanh(),
                Func::Coth => {
                    if av == 0.0 {
                        return Err(EvalError::DivisionByZero(e.to_string()));
                    }
                    1.0 / av.tanh()
                }
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(e.to_string()))
    }
}

/// Principal branches throughout.
pub(super) fn eval_complex(e: &Expr, x: f64, u: f64) -> Result<Complex64, EvalError> {
    let v = match e.node() {
        Node::Num(q) => Complex64::new(q.to_f64().unwrap_or(f64::NAN), 0.0),
        Node::I => Complex64::i(),
        Node::Var(Var::X) => Complex64::new(x, 0.0),
        Node::Var(Var::U) => Complex64::new(u, 0.0),
        Node::Add(ts) => {
            let mut s = Complex64::new(0.0, 0.0);
            for t in ts {
                s += eval_complex(t, x, u)?;
            }
            s
        }
        Node::Mul(fs) => {
            let mut p = Complex64::new(1.0, 0.0);
            for f in fs {
                p *= eval_complex(f, x, u)?;
            }
            p
        }
        Node::Pow(b, k) => {
            let bv = eval_complex(b, x, u)?;
            match k.as_num() {
                Some(q) if q.is_integer() => {
                    let n = q.to_integer().to_i32().unwrap_or(i32::MAX);
                    if bv == Complex64::new(0.0, 0.0) && n < 0 {
                        return Err(EvalError::DivisionByZero(e.to_string()));
                    }
                    bv.powi(n)
                }
                Some(q) => {
                    if bv == Complex64::new(0.0, 0.0) {
                        if q.is_negative() {
                            return Err(EvalError::DivisionByZero(e.to_string()));
                        }
                        Complex64::new(0.0, 0.0)
                    } else {
                        bv.powf(q.to_f64().unwrap())
                    }
                }
                None => {
                    let kv = eval_complex(k, x, u)?;
                    if bv == Complex64::new(0.0, 0.0) {
                        return Err(EvalError::DivisionByZero(e.to_string()));
                    }
                    bv.powc(kv)
                }
            }
        }
        Node::Func(f, a) => {
            let av = eval_complex(a, x, u)?;
            match f {
                Func::Exp => av.exp(),
                Func::Log => {
                    if av == Complex64::new(0.0, 0.0) {
                        return Err(EvalError::LogDomain(e.to_string()));
                    }
                    av.ln()
                }
                Func::Sin => av.sin(),
                Func::Cos => av.cos(),
                Func::Tan => av.tan(),
                Func::Sinh => av.sinh(),
                Func::Cosh => av.cosh(),
                Func::Tanh => av.tanh(),
                Func::Coth => {
                    if av == Complex64::new(0.0, 0.0) {
                        return Err(EvalError::DivisionByZero(e.to_string()));
                    }
                    av.cosh() / av.sinh()
                }
            }
        }
    };
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(e.to_string()))
    }
}
