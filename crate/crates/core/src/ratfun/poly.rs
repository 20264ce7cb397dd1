//! Dense univariate polynomials over ℚ(i).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::complex::Complex64;
use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};

use super::gauss::{GaussRat, Rational};

/// Coefficients in ascending order of degree; the leading coefficient is
/// nonzero unless the polynomial is zero (empty vector).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    coeffs: Vec<GaussRat>,
}

/// Rational roots with multiplicities plus the cofactor that has none.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalRoots {
    pub roots: Vec<(Rational, u32)>,
    pub residual: Poly,
}

impl Poly {
    pub fn new(mut coeffs: Vec<GaussRat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_ints(cs: &[i64]) -> Self {
        Poly::new(cs.iter().map(|&c| GaussRat::from_int(c)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(GaussRat::one())
    }

    pub fn constant(c: GaussRat) -> Self {
        Poly::new(vec![c])
    }

    pub fn x() -> Self {
        Poly::new(vec![GaussRat::zero(), GaussRat::one()])
    }

    /// `coeff · x^k`
    pub fn monomial(k: usize, coeff: GaussRat) -> Self {
        let mut cs = vec![GaussRat::zero(); k + 1];
        cs[k] = coeff;
        Poly::new(cs)
    }

    /// `x - c`
    pub fn linear_root(c: &GaussRat) -> Self {
        Poly::new(vec![-c, GaussRat::one()])
    }

    pub fn coeffs(&self) -> &[GaussRat] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> GaussRat {
        self.coeffs.get(k).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with `deg 0 = -1` convention for the zero polynomial.
    pub fn deg_i64(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn leading(&self) -> GaussRat {
        self.coeffs.last().cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_real())
    }

    pub fn real_part(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| GaussRat::real(c.re.clone())).collect())
    }

    pub fn imag_part(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| GaussRat::real(c.im.clone())).collect())
    }

    pub fn scale(&self, k: &GaussRat) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let lc = self.leading().inv().expect("nonzero leading coefficient");
        self.scale(&lc)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * &GaussRat::from_int(k as i64))
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn integral(&self) -> Poly {
        let mut cs = vec![GaussRat::zero()];
        for (k, c) in self.coeffs.iter().enumerate() {
            cs.push(c / &GaussRat::from_int(k as i64 + 1));
        }
        Poly::new(cs)
    }

    pub fn eval(&self, x: &GaussRat) -> GaussRat {
        let mut acc = GaussRat::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn eval_c64(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_c64();
        }
        acc
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Quotient and remainder; panics on division by the zero polynomial.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.coeffs.len() - 1;
        if self.coeffs.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let lc_inv = d.leading().inv().unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![GaussRat::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] * &lc_inv;
            if c.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                let t = &c * dc;
                rem[k + j] -= &t;
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    /// Exact quotient, or `None` if `d` does not divide `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        let (q, r) = self.div_rem(d);
        r.is_zero().then_some(q)
    }

    /// Monic greatest common divisor. `gcd(0, 0) = 0`.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let mut a = a.clone();
        let mut b = b.clone();
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn lcm(a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() || b.is_zero() {
            return Poly::zero();
        }
        let g = Poly::gcd(a, b);
        (a * &b.exact_div(&g).unwrap()).monic()
    }

    /// Taylor shift: the polynomial `t ↦ self(t + c)`.
    pub fn shift(&self, c: &GaussRat) -> Poly {
        let mut out = Poly::zero();
        let lin = Poly::new(vec![c.clone(), GaussRat::one()]);
        for coef in self.coeffs.iter().rev() {
            out = &(&out * &lin) + &Poly::constant(coef.clone());
        }
        out
    }

    /// Coefficients reversed with respect to degree `n` (`x^n p(1/x)`).
    pub fn reversed(&self, n: usize) -> Poly {
        let mut cs = vec![GaussRat::zero(); n + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            if k <= n {
                cs[n - k] = c.clone();
            }
        }
        Poly::new(cs)
    }

    /// Multiplicity of `x = 0` as a root, and the cofactor.
    pub fn split_zero_root(&self) -> (u32, Poly) {
        let k = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        (k as u32, Poly::new(self.coeffs[k..].to_vec()))
    }

    /// Yun's squarefree decomposition: monic, pairwise coprime, squarefree
    /// factors with multiplicities. The unit (leading coefficient) is dropped.
    pub fn squarefree_factorize(&self) -> Vec<(Poly, u32)> {
        assert!(!self.is_zero(), "squarefree factorization of zero");
        let f = self.monic();
        if f.is_constant() {
            return Vec::new();
        }
        let fp = f.derivative();
        let a0 = Poly::gcd(&f, &fp);
        let mut b = f.exact_div(&a0).unwrap();
        let c = fp.exact_div(&a0).unwrap();
        let mut d = &c - &b.derivative();
        let mut out = Vec::new();
        let mut i = 1u32;
        while !b.is_constant() {
            let a = Poly::gcd(&b, &d);
            let nb = b.exact_div(&a).unwrap();
            let nc = d.exact_div(&a).unwrap();
            d = &nc - &nb.derivative();
            if !a.is_constant() {
                out.push((a, i));
            }
            b = nb;
            i += 1;
        }
        out
    }

    /// All rational roots with multiplicity. For polynomials with non-real
    /// coefficients, real rational roots are the common roots of the real
    /// and imaginary parts.
    pub fn rational_roots(&self) -> RationalRoots {
        assert!(!self.is_zero(), "rational roots of zero polynomial");
        if !self.is_real() {
            let g = Poly::gcd(&self.real_part(), &self.imag_part());
            let mut res = if g.is_zero() { RationalRoots { roots: vec![], residual: self.clone() } } else { g.rational_roots() };
            let mut residual = self.clone();
            for (r, m) in &res.roots {
                let lin = Poly::linear_root(&GaussRat::real(r.clone()));
                for _ in 0..*m {
                    residual = residual.exact_div(&lin).unwrap();
                }
            }
            res.residual = residual;
            return res;
        }
        let mut roots: Vec<(Rational, u32)> = Vec::new();
        let (z, mut rest) = self.split_zero_root();
        if z > 0 {
            roots.push((Rational::zero(), z));
        }
        if !rest.is_constant() {
            let ints = integer_coefficients(&rest);
            let a0 = ints[0].abs();
            let an = ints[ints.len() - 1].abs();
            if let (Some(ps), Some(qs)) = (divisors(&a0), divisors(&an)) {
                let mut cands: Vec<Rational> = Vec::new();
                for p in &ps {
                    for q in &qs {
                        let r = Rational::new(p.clone(), q.clone());
                        if !cands.contains(&r) {
                            cands.push(r.clone());
                            cands.push(-r);
                        }
                    }
                }
                cands.sort();
                for r in cands {
                    if rest.is_constant() {
                        break;
                    }
                    let lin = Poly::linear_root(&GaussRat::real(r.clone()));
                    let mut m = 0;
                    while let Some(q) = rest.exact_div(&lin) {
                        rest = q;
                        m += 1;
                    }
                    if m > 0 {
                        roots.push((r, m));
                    }
                }
            }
        }
        roots.sort_by(|a, b| a.0.cmp(&b.0));
        // keep the original leading coefficient on the residual
        RationalRoots { roots, residual: rest.scale(&GaussRat::one()) }
    }

    /// Lowest-terms exact value as `f64`-friendly form.
    pub fn to_f64_coeffs(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.to_c64()).collect()
    }
}

/// Primitive integer coefficients of a real polynomial (same roots).
fn integer_coefficients(p: &Poly) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for c in p.coeffs() {
        l = l.lcm(c.re.denom());
    }
    let ints: Vec<BigInt> = p.coeffs().iter().map(|c| (&c.re * Rational::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for c in &ints {
        g = g.gcd(c);
    }
    ints.into_iter().map(|c| c / &g).collect()
}

/// Positive divisors by trial division; `None` when the integer is too large
/// to factor this way.
fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let mut m = n.to_u64()?;
    if m == 0 {
        return None;
    }
    if m > 100_000_000_000_000 {
        return None;
    }
    let mut primes: Vec<(u64, u32)> = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            primes.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        primes.push((m, 1));
    }
    let mut divs = vec![1u64];
    for (p, e) in primes {
        let cur = divs.clone();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            divs.extend(cur.iter().map(|d| d * pk));
        }
    }
    divs.sort_unstable();
    Some(divs.into_iter().map(BigInt::from).collect())
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| &self.coeff(k) + &o.coeff(k)).collect())
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| &self.coeff(k) - &o.coeff(k)).collect())
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut cs = vec![GaussRat::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                let t = a * b;
                cs[i + j] += &t;
            }
        }
        Poly::new(cs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::expr::from_poly(self))
    }
}

/// Truncated power-series quotient `a / b` to `n` terms; `b(0) ≠ 0`.
pub fn series_div(a: &Poly, b: &Poly, n: usize) -> Vec<GaussRat> {
    let b0_inv = b.coeff(0).inv().expect("series division by a series with zero constant term");
    let mut out: Vec<GaussRat> = Vec::with_capacity(n);
    for k in 0..n {
        let mut s = a.coeff(k);
        for j in 1..=k {
            let bj = b.coeff(j);
            if !bj.is_zero() {
                s -= &(&bj * &out[k - j]);
            }
        }
        out.push(&s * &b0_inv);
    }
    out
}

/// Truncated power-series square root; `None` when the constant term has no
/// square root in ℚ(i).
pub fn series_sqrt(a: &[GaussRat], n: usize) -> Option<Vec<GaussRat>> {
    let a0 = a.first().cloned().unwrap_or_else(GaussRat::zero);
    let h0 = a0.sqrt()?;
    if h0.is_zero() {
        return None;
    }
    let two_h0_inv = (&GaussRat::from_int(2) * &h0).inv()?;
    let mut h = vec![h0];
    for k in 1..n {
        let mut s = a.get(k).cloned().unwrap_or_else(GaussRat::zero);
        for i in 1..k {
            s -= &(&h[i] * &h[k - i]);
        }
        h.push(&s * &two_h0_inv);
    }
    Some(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(cs: &[i64]) -> Poly {
        Poly::from_ints(cs)
    }

    #[test]
    fn gcd_examples() {
        // gcd(x^2 - 1, x - 1) = x - 1
        assert_eq!(Poly::gcd(&p(&[-1, 0, 1]), &p(&[-1, 1])), p(&[-1, 1]));
        // gcd(x^3 - 1, x) = 1
        assert_eq!(Poly::gcd(&p(&[-1, 0, 0, 1]), &p(&[0, 1])), Poly::one());
    }

    #[test]
    fn squarefree_examples() {
        assert_eq!(p(&[0, 0, 1]).squarefree_factorize(), vec![(p(&[0, 1]), 2)]);
        assert_eq!(p(&[0, -1, 0, 1]).squarefree_factorize(), vec![(p(&[0, -1, 0, 1]), 1)]);
        // (x-1)^2 (x+2): expand-and-compare oracle
        let f = &(&p(&[-1, 1]) * &p(&[-1, 1])) * &p(&[2, 1]);
        let sf = f.squarefree_factorize();
        assert_eq!(sf, vec![(p(&[2, 1]), 1), (p(&[-1, 1]), 2)]);
        let mut back = Poly::one();
        for (q, m) in &sf {
            back = &back * &q.pow(*m);
        }
        assert_eq!(back, f.monic());
    }

    #[test]
    fn rational_root_examples() {
        // x^2 (x - 1)
        let r = p(&[0, 0, -1, 1]).rational_roots();
        assert_eq!(r.roots, vec![(Rational::zero(), 2), (Rational::one(), 1)]);
        assert!(r.residual.is_constant());
        let r = p(&[1, 0, 1]).rational_roots();
        assert!(r.roots.is_empty());
        assert_eq!(r.residual.monic(), p(&[1, 0, 1]));
        // 16 x^2 (cleared denominator of -x - 5/(16 x^2))
        let r = p(&[0, 0, 16]).rational_roots();
        assert_eq!(r.roots, vec![(Rational::zero(), 2)]);
        // 6x^2 - x - 1 = (3x + 1)(2x - 1)
        let r = p(&[-1, -1, 6]).rational_roots();
        assert_eq!(
            r.roots,
            vec![(Rational::new((-1).into(), 3.into()), 1), (Rational::new(1.into(), 2.into()), 1)]
        );
    }

    #[test]
    fn shift_and_div() {
        let f = p(&[1, 2, 3]);
        let g = f.shift(&GaussRat::from_int(1));
        // f(t+1) = 3t^2 + 8t + 6
        assert_eq!(g, p(&[6, 8, 3]));
        let (q, r) = p(&[-1, 0, 1]).div_rem(&p(&[-1, 1]));
        assert_eq!(q, p(&[1, 1]));
        assert!(r.is_zero());
    }

    #[test]
    fn series_sqrt_of_square() {
        // (1 + t)^2 = 1 + 2t + t^2
        let h = series_sqrt(p(&[1, 2, 1]).coeffs(), 4).unwrap();
        assert_eq!(h, vec![GaussRat::one(), GaussRat::one(), GaussRat::zero(), GaussRat::zero()]);
    }
}
