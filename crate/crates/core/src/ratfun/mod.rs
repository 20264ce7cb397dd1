//! Exact univariate rational functions over ℚ(i), with the pole and
//! partial-fraction analysis used by the Kovacic classifier.

mod gauss;
pub mod linalg;
mod poly;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::complex::Complex64;
use num::Zero;
use serde::Serialize;
use thiserror::Error;

pub use gauss::{rational_approx, rational_from_f64, rational_sqrt, rational_to_f64, GaussRat, Rational};
pub use poly::{series_div, series_sqrt, Poly, RationalRoots};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RatFunError {
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("rational function has a pole at {0}")]
    Pole(String),
    #[error("denominator factor {0} has no rational roots; poles at irrational points are unsupported")]
    UnsupportedPoleField(String),
}

/// `num / den` with `gcd(num, den) = 1` and `den` monic.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

/// Where a finite pole sits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PoleLocation {
    /// A rational point.
    Point(String),
    /// A monic factor of the denominator without rational roots; every root of
    /// it is a pole of the recorded order.
    Factor(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pole {
    pub location: Rational,
    pub order: u32,
}

/// Pole structure of a rational function.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleData {
    /// Poles at rational points, sorted by location.
    pub poles: Vec<Pole>,
    /// Denominator factors without rational roots, with pole order.
    pub irrational: Vec<(Poly, u32)>,
    /// `deg den - deg num`; `i64::MAX` for the zero function.
    pub order_at_infinity: i64,
}

impl PoleData {
    /// Order of every finite pole, counting the roots of irrational factors
    /// with their degree.
    pub fn all_orders(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.poles.iter().map(|p| p.order).collect();
        for (f, m) in &self.irrational {
            for _ in 0..f.degree().unwrap_or(0) {
                v.push(*m);
            }
        }
        v
    }

    pub fn is_rational_split(&self) -> bool {
        self.irrational.is_empty()
    }
}

/// `polynomial + Σ_c Σ_k coeffs[k-1] / (x - c)^k`
#[derive(Clone, Debug, PartialEq)]
pub struct PartialFractions {
    pub polynomial: Poly,
    pub terms: Vec<(GaussRat, Vec<GaussRat>)>,
}

impl PartialFractions {
    pub fn recombine(&self) -> RatFun {
        let mut acc = RatFun::from_poly(self.polynomial.clone());
        for (c, coeffs) in &self.terms {
            let lin = Poly::linear_root(c);
            for (k, a) in coeffs.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let term = RatFun::new(Poly::constant(a.clone()), lin.pow(k as u32 + 1)).unwrap();
                acc = &acc + &term;
            }
        }
        acc
    }
}

impl RatFun {
    pub fn new(num: Poly, den: Poly) -> Result<Self, RatFunError> {
        if den.is_zero() {
            return Err(RatFunError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(RatFun::zero());
        }
        let g = Poly::gcd(&num, &den);
        let num = num.exact_div(&g).unwrap();
        let den = den.exact_div(&g).unwrap();
        let lc = den.leading().inv().unwrap();
        Ok(RatFun { num: num.scale(&lc), den: den.scale(&lc) })
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFun { num: p, den: Poly::one() }
    }

    pub fn constant(c: GaussRat) -> Self {
        RatFun::from_poly(Poly::constant(c))
    }

    pub fn from_int(n: i64) -> Self {
        RatFun::constant(GaussRat::from_int(n))
    }

    pub fn x() -> Self {
        RatFun::from_poly(Poly::x())
    }

    /// `c / (x - a)^k`
    pub fn pole_term(c: GaussRat, a: &GaussRat, k: u32) -> Self {
        RatFun::new(Poly::constant(c), Poly::linear_root(a).pow(k)).unwrap()
    }

    pub fn zero() -> Self {
        RatFun { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RatFun::from_int(1)
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.is_polynomial() && self.num.is_constant()
    }

    pub fn is_real(&self) -> bool {
        self.num.is_real() && self.den.is_real()
    }

    pub fn real_part(&self) -> RatFun {
        // den is monic; for a real denominator split the numerator directly
        if self.den.is_real() {
            return RatFun::new(self.num.real_part(), self.den.clone()).unwrap();
        }
        let conj_den = conj_poly(&self.den);
        let n = &self.num * &conj_den;
        let d = &self.den * &conj_den;
        RatFun::new(n.real_part(), d.real_part()).unwrap()
    }

    pub fn imag_part(&self) -> RatFun {
        if self.den.is_real() {
            return RatFun::new(self.num.imag_part(), self.den.clone()).unwrap();
        }
        let conj_den = conj_poly(&self.den);
        let n = &self.num * &conj_den;
        let d = &self.den * &conj_den;
        RatFun::new(n.imag_part(), d.real_part()).unwrap()
    }

    pub fn scale(&self, k: &GaussRat) -> RatFun {
        RatFun::new(self.num.scale(k), self.den.clone()).unwrap()
    }

    pub fn inv(&self) -> Result<RatFun, RatFunError> {
        RatFun::new(self.den.clone(), self.num.clone())
    }

    pub fn checked_div(&self, o: &RatFun) -> Result<RatFun, RatFunError> {
        Ok(self * &o.inv()?)
    }

    pub fn pow(&self, e: i32) -> Result<RatFun, RatFunError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let k = e.unsigned_abs();
        Ok(RatFun { num: base.num.pow(k), den: base.den.pow(k) })
    }

    pub fn derivative(&self) -> RatFun {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        RatFun::new(n, &self.den * &self.den).unwrap()
    }

    pub fn eval(&self, x: &GaussRat) -> Result<GaussRat, RatFunError> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(RatFunError::Pole(x.to_string()));
        }
        Ok(&self.num.eval(x) / &d)
    }

    pub fn eval_c64(&self, x: Complex64) -> Complex64 {
        self.num.eval_c64(x) / self.den.eval_c64(x)
    }

    pub fn eval_f64(&self, x: f64) -> Complex64 {
        self.eval_c64(Complex64::new(x, 0.0))
    }

    pub fn order_at_infinity(&self) -> i64 {
        if self.is_zero() {
            i64::MAX
        } else {
            self.den.deg_i64() - self.num.deg_i64()
        }
    }

    pub fn pole_data(&self) -> PoleData {
        let mut poles = Vec::new();
        let mut irrational = Vec::new();
        for (factor, m) in self.den.squarefree_factorize() {
            let rr = factor.rational_roots();
            for (c, k) in rr.roots {
                // factors are squarefree, so k == 1
                poles.push(Pole { location: c, order: m * k });
            }
            if !rr.residual.is_constant() {
                irrational.push((rr.residual.monic(), m));
            }
        }
        poles.sort_by(|a, b| a.location.cmp(&b.location));
        PoleData { poles, irrational, order_at_infinity: self.order_at_infinity() }
    }

    /// Laurent coefficients at a finite point `c`: returns the valuation `v`
    /// and `n` coefficients `a_v, a_{v+1}, …` of `(x - c)^k`.
    pub fn laurent_at(&self, c: &GaussRat, n: usize) -> (i64, Vec<GaussRat>) {
        let (a, num) = self.num.shift(c).split_zero_root();
        let (b, den) = self.den.shift(c).split_zero_root();
        (a as i64 - b as i64, series_div(&num, &den, n))
    }

    /// Laurent coefficients at infinity: returns `v = order_at_infinity` and
    /// the coefficients of `x^{-v}, x^{-v-1}, …`.
    pub fn laurent_at_infinity(&self, n: usize) -> (i64, Vec<GaussRat>) {
        if self.is_zero() {
            return (i64::MAX, vec![GaussRat::zero(); n]);
        }
        let dn = self.num.degree().unwrap();
        let dd = self.den.degree().unwrap();
        let rn = self.num.reversed(dn);
        let rd = self.den.reversed(dd);
        (dd as i64 - dn as i64, series_div(&rn, &rd, n))
    }

    /// Partial fraction decomposition; every pole must be at a rational point.
    pub fn partial_fractions(&self) -> Result<PartialFractions, RatFunError> {
        let pd = self.pole_data();
        if let Some((f, _)) = pd.irrational.first() {
            return Err(RatFunError::UnsupportedPoleField(f.to_string()));
        }
        let (polynomial, _) = self.num.div_rem(&self.den);
        let mut terms = Vec::new();
        for pole in &pd.poles {
            let c = GaussRat::real(pole.location.clone());
            let (v, coeffs) = self.laurent_at(&c, pole.order as usize);
            debug_assert_eq!(v, -(pole.order as i64));
            // coeffs[j] multiplies (x-c)^{v+j}; store by power k = -v - j
            let m = pole.order as usize;
            let by_power: Vec<GaussRat> = (1..=m).map(|k| coeffs[m - k].clone()).collect();
            terms.push((c, by_power));
        }
        Ok(PartialFractions { polynomial, terms })
    }

    /// Antiderivative split as `rational + Σ residue·log(x - c)`.
    pub fn antiderivative(&self) -> Result<(RatFun, Vec<(GaussRat, GaussRat)>), RatFunError> {
        let pf = self.partial_fractions()?;
        let mut rational = RatFun::from_poly(pf.polynomial.integral());
        let mut logs = Vec::new();
        for (c, coeffs) in &pf.terms {
            for (idx, a) in coeffs.iter().enumerate() {
                let k = idx as i64 + 1;
                if a.is_zero() {
                    continue;
                }
                if k == 1 {
                    logs.push((c.clone(), a.clone()));
                } else {
                    let coef = a / &GaussRat::from_int(1 - k);
                    rational = &rational + &RatFun::pole_term(coef, c, (k - 1) as u32);
                }
            }
        }
        Ok((rational, logs))
    }

    /// Grammar-compatible text.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

fn conj_poly(p: &Poly) -> Poly {
    Poly::new(p.coeffs().iter().map(|c| c.conj()).collect())
}

impl<'a> Add<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn add(self, o: &RatFun) -> RatFun {
        if self.den == o.den {
            return RatFun::new(&self.num + &o.num, self.den.clone()).unwrap();
        }
        let n = &(&self.num * &o.den) + &(&o.num * &self.den);
        RatFun::new(n, &self.den * &o.den).unwrap()
    }
}

impl<'a> Sub<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn sub(self, o: &RatFun) -> RatFun {
        self + &(-o)
    }
}

impl<'a> Mul<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn mul(self, o: &RatFun) -> RatFun {
        RatFun::new(&self.num * &o.num, &self.den * &o.den).unwrap()
    }
}

impl Neg for &RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun { num: -&self.num, den: self.den.clone() }
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::expr::from_ratfun(self))
    }
}
