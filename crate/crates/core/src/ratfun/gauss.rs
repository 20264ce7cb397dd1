//! Gaussian rationals: the coefficient field ℚ(i).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num::complex::Complex64;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

/// Exact rational number with arbitrary-precision numerator and denominator.
pub type Rational = BigRational;

/// An element `re + im·i` of ℚ(i).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GaussRat {
    pub re: Rational,
    pub im: Rational,
}

impl GaussRat {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussRat { re, im: Rational::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(Rational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Self::real(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn i() -> Self {
        GaussRat { re: Rational::zero(), im: Rational::one() }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// Real integer value, if this is one.
    pub fn as_integer(&self) -> Option<BigInt> {
        if self.is_real() && self.re.is_integer() {
            Some(self.re.to_integer())
        } else {
            None
        }
    }

    pub fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm_sqr();
        Some(GaussRat { re: &self.re / &n, im: -(&self.im / &n) })
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = GaussRat::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Exact square root in ℚ(i) when one exists. The returned root has
    /// nonnegative real part, and positive imaginary part when purely imaginary.
    pub fn sqrt(&self) -> Option<Self> {
        if self.is_zero() {
            return Some(GaussRat::zero());
        }
        if self.is_real() {
            return if self.re.is_positive() {
                rational_sqrt(&self.re).map(GaussRat::real)
            } else {
                rational_sqrt(&-self.re.clone())
                    .map(|r| GaussRat { re: Rational::zero(), im: r })
            };
        }
        // (p + qi)^2 = a + bi  =>  p^2 = (a + |z|)/2, q = b/(2p)
        let modulus = rational_sqrt(&self.norm_sqr())?;
        let two = Rational::from_integer(BigInt::from(2));
        let p2 = (&self.re + &modulus) / &two;
        let p = rational_sqrt(&p2)?;
        if p.is_zero() {
            return None;
        }
        let q = &self.im / (&two * &p);
        Some(GaussRat { re: p, im: q })
    }
}

/// Exact square root of a nonnegative rational, if it is a perfect square.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer();
    let d = q.denom();
    let rn = n.sqrt();
    let rd = d.sqrt();
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        Some(Rational::new(rn, rd))
    } else {
        None
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    use num::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational from an `f64` (binary expansion, no rounding).
pub fn rational_from_f64(v: f64) -> Option<Rational> {
    Rational::from_float(v)
}

/// Best rational approximation with bounded denominator (continued fractions).
pub fn rational_approx(v: f64, max_den: i64, tol: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    let neg = v < 0.0;
    let mut x = v.abs();
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let approx = h1 as f64 / k1 as f64;
        if (approx - v.abs()).abs() <= tol * v.abs().max(1.0) {
            let num = if neg { -h1 } else { h1 };
            return Some(Rational::new(BigInt::from(num), BigInt::from(k1)));
        }
        let frac = x - a;
        if frac < 1e-18 {
            break;
        }
        x = 1.0 / frac;
    }
    None
}

impl Zero for GaussRat {
    fn zero() -> Self {
        GaussRat { re: Rational::zero(), im: Rational::zero() }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussRat {
    fn one() -> Self {
        GaussRat { re: Rational::one(), im: Rational::zero() }
    }
}

impl From<Rational> for GaussRat {
    fn from(r: Rational) -> Self {
        GaussRat::real(r)
    }
}

impl From<i64> for GaussRat {
    fn from(n: i64) -> Self {
        GaussRat::from_int(n)
    }
}

impl<'a> Add<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn sub(self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        if self.im.is_zero() && o.im.is_zero() {
            return GaussRat::real(&self.re * &o.re);
        }
        GaussRat {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl<'a> Div<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn div(self, o: &GaussRat) -> GaussRat {
        if o.im.is_zero() {
            return GaussRat { re: &self.re / &o.re, im: &self.im / &o.re };
        }
        self * &o.inv().expect("division by zero Gaussian rational")
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<GaussRat> for GaussRat {
            type Output = GaussRat;
            fn $m(self, o: GaussRat) -> GaussRat {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a GaussRat> for GaussRat {
            type Output = GaussRat;
            fn $m(self, o: &GaussRat) -> GaussRat {
                (&self).$m(o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -self.re, im: -self.im }
    }
}

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl AddAssign<&GaussRat> for GaussRat {
    fn add_assign(&mut self, o: &GaussRat) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl SubAssign<&GaussRat> for GaussRat {
    fn sub_assign(&mut self, o: &GaussRat) {
        self.re -= &o.re;
        self.im -= &o.im;
    }
}

impl MulAssign<&GaussRat> for GaussRat {
    fn mul_assign(&mut self, o: &GaussRat) {
        *self = &*self * o;
    }
}

fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for GaussRat {
    /// Grammar-compatible text: `3`, `(3/2)`, `(-1/2)`, `i`, `(1 + 2*i)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let re = fmt_rational(&self.re);
        if self.im.is_zero() {
            return if self.re.is_integer() && !self.re.is_negative() {
                write!(f, "{re}")
            } else {
                write!(f, "({re})")
            };
        }
        let im_abs = self.im.abs();
        let im_txt = if im_abs.is_one() {
            "i".to_string()
        } else {
            format!("{}*i", fmt_rational(&im_abs))
        };
        let neg = self.im.is_negative();
        if self.re.is_zero() {
            if neg {
                write!(f, "(-{im_txt})")
            } else if im_abs.is_one() {
                write!(f, "i")
            } else {
                write!(f, "({im_txt})")
            }
        } else {
            let op = if neg { "-" } else { "+" };
            write!(f, "({re} {op} {im_txt})")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_negative_is_imaginary() {
        let r = GaussRat::from_int(-1).sqrt().unwrap();
        assert_eq!(r, GaussRat::i());
        let q = GaussRat::frac(-1, 4).sqrt().unwrap();
        assert_eq!(q, &GaussRat::i() * &GaussRat::frac(1, 2));
    }

    #[test]
    fn sqrt_of_gaussian() {
        // (1 + 2i)^2 = -3 + 4i
        let z = GaussRat::new(Rational::from_integer((-3).into()), Rational::from_integer(4.into()));
        let r = z.sqrt().unwrap();
        assert_eq!(&r * &r, z);
        assert!(GaussRat::from_int(2).sqrt().is_none());
    }

    #[test]
    fn approx_recovers_simple_fractions() {
        assert_eq!(rational_approx(1.0 / 3.0, 1000, 1e-12), Some(Rational::new(1.into(), 3.into())));
        assert_eq!(rational_approx(-2.5, 1000, 1e-12), Some(Rational::new((-5).into(), 2.into())));
    }
}
