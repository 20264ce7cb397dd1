//! Kovacic's algorithm for `y'' + κ y = 0`, run on the normal form `y'' = r y`
//! with `r = -κ`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::complex::Complex64;
use num::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::expr::{from_ratfun, Expr, Func};
use crate::numeric::poly_roots;
use crate::ratfun::{linalg, series_sqrt, GaussRat, Poly, RatFun};
use crate::solution::{AlgebraicBranch, Omega, SolutionError, SolutionRep, Span};

/// Candidate families beyond this count are not enumerated.
pub const FAMILY_LIMIT: usize = 1 << 16;
/// Candidate polynomial degrees beyond this are not attempted.
pub const DEGREE_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerOp {
    pub kappa: RatFun,
    pub r: RatFun,
}

impl SchrodingerOp {
    pub fn new(kappa: RatFun) -> SchrodingerOp {
        let r = -&kappa;
        SchrodingerOp { kappa, r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    Reducible,
    Imprimitive,
    PrimitiveFinite,
    Full,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::Reducible => "Reducible",
            Case::Imprimitive => "Imprimitive",
            Case::PrimitiveFinite => "PrimitiveFinite",
            Case::Full => "Full / non-Liouvillian",
        }
    }

    pub fn is_liouvillian(self) -> bool {
        self != Case::Full
    }
}

/// Riccati witness: `ω` itself, or a monic polynomial `Σ a_i ω^i` (ascending,
/// `a_n = 1`) whose roots solve `ω' + ω² = r`.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Rational(RatFun),
    Algebraic(Vec<RatFun>),
}

impl Witness {
    pub fn degree(&self) -> usize {
        match self {
            Witness::Rational(_) => 1,
            Witness::Algebraic(c) => c.len() - 1,
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Rational(w) => write!(f, "omega = {w}"),
            Witness::Algebraic(c) => {
                let mut parts = Vec::new();
                for (i, a) in c.iter().enumerate().rev() {
                    if a.is_zero() {
                        continue;
                    }
                    let mono = match i {
                        0 => String::new(),
                        1 => "omega".to_string(),
                        _ => format!("omega^{i}"),
                    };
                    parts.push(match (a.is_one(), i) {
                        (true, 0) => "1".to_string(),
                        (true, _) => mono,
                        (false, 0) => format!("({a})"),
                        (false, _) => format!("({a})*{mono}"),
                    });
                }
                write!(f, "{} = 0", parts.join(" + "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KovacicResult {
    pub case: Case,
    pub witness: Option<Witness>,
    /// One line per decision taken, in order.
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KovacicError {
    #[error("pole at a root of {0}, which has no rational roots")]
    UnsupportedPoleField(String),
    #[error("exponent {0} is irrational and a candidate family may be integral")]
    IrrationalCoefficient(String),
    #[error("{what}: {count} candidates exceed the limit {limit}")]
    CandidateOverflow { what: String, count: usize, limit: usize },
}

/// Exact Gaussian rational, or a complex approximation of an algebraic number.
#[derive(Debug, Clone)]
enum Num {
    Exact(GaussRat),
    Approx(Complex64),
}

impl Num {
    fn c64(&self) -> Complex64 {
        match self {
            Num::Exact(q) => q.to_c64(),
            Num::Approx(z) => *z,
        }
    }

    fn sub(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a - b),
            _ => Num::Approx(self.c64() - o.c64()),
        }
    }

    fn same(&self, o: &Num) -> bool {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => a == b,
            _ => (self.c64() - o.c64()).norm() < 1e-14,
        }
    }
}

/// `√(1 + 4b)`.
fn disc_sqrt(b: &GaussRat) -> Num {
    let d = &GaussRat::one() + &(&GaussRat::from_int(4) * b);
    match d.sqrt() {
        Some(s) => Num::Exact(s),
        None => Num::Approx(d.to_c64().sqrt()),
    }
}

fn half(q: &GaussRat) -> GaussRat {
    q * &GaussRat::frac(1, 2)
}

/// `½ ± ½ s`.
fn half_pm(s: &Num, sign: i64) -> Num {
    match s {
        Num::Exact(q) => Num::Exact(&GaussRat::frac(1, 2) + &(&GaussRat::frac(sign, 2) * q)),
        Num::Approx(z) => Num::Approx(0.5 + 0.5 * sign as f64 * z),
    }
}

struct PoleInfo {
    c: GaussRat,
    order: u32,
}

fn lin(c: &GaussRat) -> RatFun {
    RatFun::from_poly(Poly::linear_root(c))
}

/// `a / (x - c)^k`.
fn pole_term(a: &GaussRat, c: &GaussRat, k: u32) -> RatFun {
    RatFun::pole_term(a.clone(), c, k)
}

/// Coefficient of `(x - c)^{-2}` in `r`.
fn double_pole_coeff(r: &RatFun, c: &GaussRat) -> GaussRat {
    let (v, co) = r.laurent_at(c, 1);
    if v == -2 {
        co[0].clone()
    } else {
        GaussRat::zero()
    }
}

/// Leading coefficient of `r` at infinity when `o∞ = 2`, else zero.
fn infinity_b(r: &RatFun) -> GaussRat {
    if r.order_at_infinity() == 2 {
        &r.num().leading() / &r.den().leading()
    } else {
        GaussRat::zero()
    }
}

/// Enumerates index tuples lexicographically, first index most significant.
fn for_each_family<T>(sizes: &[usize], mut f: impl FnMut(&[usize]) -> Option<T>) -> Option<T> {
    if sizes.contains(&0) {
        return None;
    }
    let mut idx = vec![0usize; sizes.len()];
    loop {
        if let Some(t) = f(&idx) {
            return Some(t);
        }
        let mut k = sizes.len();
        loop {
            if k == 0 {
                return None;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn family_count(sizes: &[usize], what: &str) -> Result<usize, KovacicError> {
    let mut n: usize = 1;
    for &s in sizes {
        n = n.saturating_mul(s);
    }
    if n > FAMILY_LIMIT {
        return Err(KovacicError::CandidateOverflow { what: what.to_string(), count: n, limit: FAMILY_LIMIT });
    }
    Ok(n)
}

/// Monic `P` of degree `d` with `apply(P) = 0`, where `apply` is linear.
fn solve_monic(d: usize, apply: impl Fn(&RatFun) -> RatFun) -> Option<Poly> {
    let images: Vec<RatFun> = (0..=d).map(|k| apply(&RatFun::from_poly(Poly::monomial(k, GaussRat::one())))).collect();
    let mut l = Poly::one();
    for im in &images {
        l = Poly::lcm(&l, im.den());
    }
    let polys: Vec<Poly> = images
        .iter()
        .map(|im| {
            let (q, rem) = (im.num() * &l).div_rem(im.den());
            debug_assert!(rem.is_zero());
            q
        })
        .collect();
    let rows = polys.iter().map(|p| p.degree().map_or(0, |k| k + 1)).max().unwrap_or(0);
    if rows == 0 {
        let mut c = vec![GaussRat::zero(); d];
        c.push(GaussRat::one());
        return Some(Poly::new(c));
    }
    let a: Vec<Vec<GaussRat>> = (0..rows).map(|i| (0..d).map(|k| polys[k].coeff(i)).collect()).collect();
    let b: Vec<GaussRat> = (0..rows).map(|i| -&polys[d].coeff(i)).collect();
    let mut sol = linalg::solve(&a, &b, d)?;
    sol.push(GaussRat::one());
    Some(Poly::new(sol))
}

/// Runs the algorithm. Case iv is returned only after cases i–iii are
/// excluded by their necessary conditions or exhaust their candidates.
pub fn classify(kappa: &RatFun) -> Result<KovacicResult, KovacicError> {
    let op = SchrodingerOp::new(kappa.clone());
    let r = &op.r;
    let mut trace = Vec::new();
    if r.is_zero() {
        trace.push("r = 0: omega = 0".to_string());
        return Ok(KovacicResult { case: Case::Reducible, witness: Some(Witness::Rational(RatFun::zero())), trace });
    }
    let pd = r.pole_data();
    let orders = pd.all_orders();
    let oinf = pd.order_at_infinity;
    trace.push(format!("r = {r}; pole orders {orders:?}; order at infinity {oinf}"));

    let c1 = orders.iter().all(|&o| o == 1 || o % 2 == 0) && (oinf % 2 == 0 || oinf > 2);
    let c2 = orders.iter().any(|&o| o == 2 || (o % 2 == 1 && o > 2));
    let c3 = orders.iter().all(|&o| o <= 2) && oinf >= 2;
    trace.push(format!("necessary conditions: case i {c1}, case ii {c2}, case iii {c3}"));
    if !(c1 || c2 || c3) {
        trace.push("no case possible".to_string());
        return Ok(KovacicResult { case: Case::Full, witness: None, trace });
    }
    if let Some((f, _)) = pd.irrational.first() {
        return Err(KovacicError::UnsupportedPoleField(f.to_string()));
    }
    let poles: Vec<PoleInfo> = pd
        .poles
        .iter()
        .map(|p| PoleInfo { c: GaussRat::real(p.location.clone()), order: p.order })
        .collect();

    if c1 {
        if let Some(w) = case_one(r, &poles, oinf, &mut trace)? {
            return Ok(KovacicResult { case: Case::Reducible, witness: Some(Witness::Rational(w)), trace });
        }
    }
    if c2 {
        if let Some(q) = case_two(r, &poles, oinf, &mut trace)? {
            return Ok(KovacicResult { case: Case::Imprimitive, witness: Some(Witness::Algebraic(q)), trace });
        }
    }
    if c3 {
        for n in [4usize, 6, 12] {
            if let Some(q) = case_three(r, &poles, n, &mut trace)? {
                return Ok(KovacicResult { case: Case::PrimitiveFinite, witness: Some(Witness::Algebraic(q)), trace });
            }
        }
    }
    trace.push("all candidate families exhausted".to_string());
    Ok(KovacicResult { case: Case::Full, witness: None, trace })
}

struct Local1 {
    sqrt: RatFun,
    alpha: Num,
}

fn case_one(r: &RatFun, poles: &[PoleInfo], oinf: i64, trace: &mut Vec<String>) -> Result<Option<RatFun>, KovacicError> {
    let mut locals: Vec<Vec<Local1>> = Vec::new();
    // infinity first
    let inf: Vec<Local1> = if oinf > 2 {
        vec![
            Local1 { sqrt: RatFun::zero(), alpha: Num::Exact(GaussRat::zero()) },
            Local1 { sqrt: RatFun::zero(), alpha: Num::Exact(GaussRat::one()) },
        ]
    } else if oinf == 2 {
        let s = disc_sqrt(&infinity_b(r));
        vec![
            Local1 { sqrt: RatFun::zero(), alpha: half_pm(&s, 1) },
            Local1 { sqrt: RatFun::zero(), alpha: half_pm(&s, -1) },
        ]
    } else {
        let nu = (-oinf / 2) as usize;
        let (_, e) = r.laurent_at_infinity(nu + 2);
        let h = series_sqrt(&e, nu + 1).ok_or_else(|| KovacicError::IrrationalCoefficient(format!("sqrt({}) at infinity", e[0])))?;
        let mut sq = Poly::zero();
        for (k, hk) in h.iter().enumerate() {
            sq = &sq + &Poly::monomial(nu - k, hk.clone());
        }
        let mut b = e[nu + 1].clone();
        for i in 1..=nu {
            b -= &(&h[i] * &h[nu + 1 - i]);
        }
        let a = &h[0];
        let ratio = &b / a;
        let nuq = GaussRat::from_int(nu as i64);
        let sq = RatFun::from_poly(sq);
        vec![
            Local1 { sqrt: sq.clone(), alpha: Num::Exact(half(&(&ratio - &nuq))) },
            Local1 { sqrt: -&sq, alpha: Num::Exact(half(&(&-&ratio - &nuq))) },
        ]
    };
    locals.push(inf);
    for p in poles {
        let opts = match p.order {
            1 => vec![Local1 { sqrt: RatFun::zero(), alpha: Num::Exact(GaussRat::one()) }],
            2 => {
                let s = disc_sqrt(&double_pole_coeff(r, &p.c));
                vec![
                    Local1 { sqrt: RatFun::zero(), alpha: half_pm(&s, 1) },
                    Local1 { sqrt: RatFun::zero(), alpha: half_pm(&s, -1) },
                ]
            }
            o => {
                let nu = (o / 2) as usize;
                let (_, s) = r.laurent_at(&p.c, nu);
                let h = series_sqrt(&s, nu - 1)
                    .ok_or_else(|| KovacicError::IrrationalCoefficient(format!("sqrt({}) at x = {}", s[0], p.c)))?;
                let mut sq = RatFun::zero();
                for (k, hk) in h.iter().enumerate() {
                    sq = &sq + &pole_term(hk, &p.c, (nu - k) as u32);
                }
                let mut b = s[nu - 1].clone();
                for i in 1..nu - 1 {
                    b -= &(&h[i] * &h[nu - 1 - i]);
                }
                let ratio = &b / &h[0];
                let nuq = GaussRat::from_int(nu as i64);
                vec![
                    Local1 { sqrt: sq.clone(), alpha: Num::Exact(half(&(&ratio + &nuq))) },
                    Local1 { sqrt: -&sq, alpha: Num::Exact(half(&(&-&ratio + &nuq))) },
                ]
            }
        };
        locals.push(dedup_locals(opts));
    }
    let sizes: Vec<usize> = locals.iter().map(|l| l.len()).collect();
    let count = family_count(&sizes, "case i families")?;
    trace.push(format!("case i: {count} families"));
    let mut irrational: Option<String> = None;
    let mut overflow: Option<KovacicError> = None;
    let found = for_each_family(&sizes, |idx| {
        let mut d = locals[0][idx[0]].alpha.clone();
        for j in 0..poles.len() {
            d = d.sub(&locals[j + 1][idx[j + 1]].alpha);
        }
        let d = match d {
            Num::Exact(q) => match q.as_integer() {
                Some(n) if n >= 0.into() => n,
                _ => return None,
            },
            Num::Approx(z) => {
                if z.im.abs() < 1e-9 && (z.re - z.re.round()).abs() < 1e-9 && z.re.round() >= 0.0 {
                    irrational.get_or_insert_with(|| format!("{z}"));
                }
                return None;
            }
        };
        let d: usize = match usize::try_from(d) {
            Ok(d) if d <= DEGREE_LIMIT => d,
            _ => {
                overflow = Some(KovacicError::CandidateOverflow { what: "case i degree".into(), count: DEGREE_LIMIT + 1, limit: DEGREE_LIMIT });
                return None;
            }
        };
        let mut theta = locals[0][idx[0]].sqrt.clone();
        for (j, p) in poles.iter().enumerate() {
            let l = &locals[j + 1][idx[j + 1]];
            let Num::Exact(a) = &l.alpha else { unreachable!() };
            theta = &(&theta + &l.sqrt) + &pole_term(a, &p.c, 1);
        }
        let t2 = &(&theta.derivative() + &(&theta * &theta)) - r;
        let two_theta = theta.scale(&GaussRat::from_int(2));
        let pol = solve_monic(d, |p| &(&p.derivative().derivative() + &(&two_theta * &p.derivative())) + &(&t2 * p))?;
        let pr = RatFun::from_poly(pol.clone());
        Some(&theta + &pr.derivative().checked_div(&pr).unwrap())
    });
    if let Some(w) = found {
        trace.push(format!("case i: omega = {w}"));
        return Ok(Some(w));
    }
    if let Some(z) = irrational {
        return Err(KovacicError::IrrationalCoefficient(z));
    }
    if let Some(e) = overflow {
        return Err(e);
    }
    trace.push("case i: no family yields a polynomial".to_string());
    Ok(None)
}

fn dedup_locals(opts: Vec<Local1>) -> Vec<Local1> {
    let mut out: Vec<Local1> = Vec::new();
    for o in opts {
        if !out.iter().any(|p| p.sqrt == o.sqrt && p.alpha.same(&o.alpha)) {
            out.push(o);
        }
    }
    out
}

/// `{base + k·step·s : k ∈ ks} ∩ ℤ` for exact `s`; only `base` otherwise.
fn integer_set(base: i64, s: &Num, ks: &[GaussRat]) -> BTreeSet<i64> {
    let mut out = BTreeSet::new();
    out.insert(base);
    if let Num::Exact(s) = s {
        for k in ks {
            let v = &GaussRat::from_int(base) + &(k * s);
            if let Some(n) = v.as_integer() {
                if let Ok(n) = i64::try_from(n) {
                    out.insert(n);
                }
            }
        }
    }
    out
}

fn case_two(r: &RatFun, poles: &[PoleInfo], oinf: i64, trace: &mut Vec<String>) -> Result<Option<Vec<RatFun>>, KovacicError> {
    let two = [GaussRat::from_int(2), GaussRat::from_int(-2)];
    let mut sets: Vec<Vec<i64>> = Vec::new();
    let inf: BTreeSet<i64> = if oinf > 2 {
        [0, 2, 4].into_iter().collect()
    } else if oinf == 2 {
        integer_set(2, &disc_sqrt(&infinity_b(r)), &two)
    } else {
        [oinf].into_iter().collect()
    };
    sets.push(inf.into_iter().collect());
    for p in poles {
        let s: BTreeSet<i64> = match p.order {
            1 => [4].into_iter().collect(),
            2 => integer_set(2, &disc_sqrt(&double_pole_coeff(r, &p.c)), &two),
            o => [o as i64].into_iter().collect(),
        };
        sets.push(s.into_iter().collect());
    }
    let sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let count = family_count(&sizes, "case ii families")?;
    trace.push(format!("case ii: {count} families from E-sets {sets:?}"));
    let r1 = r.derivative();
    let found = for_each_family(&sizes, |idx| {
        let e_inf = sets[0][idx[0]];
        let sum: i64 = (0..poles.len()).map(|j| sets[j + 1][idx[j + 1]]).sum();
        let diff = e_inf - sum;
        if diff < 0 || diff % 2 != 0 || (diff / 2) as usize > DEGREE_LIMIT {
            return None;
        }
        let d = (diff / 2) as usize;
        let mut theta = RatFun::zero();
        for (j, p) in poles.iter().enumerate() {
            theta = &theta + &pole_term(&GaussRat::frac(sets[j + 1][idx[j + 1]], 2), &p.c, 1);
        }
        let t1 = theta.derivative();
        let t2 = t1.derivative();
        let k = |n: i64| GaussRat::from_int(n);
        let a2 = theta.scale(&k(3));
        let a1 = &(&(&theta * &theta).scale(&k(3)) + &t1.scale(&k(3))) - &r.scale(&k(4));
        let a0 = &(&(&(&t2 + &(&theta * &t1).scale(&k(3))) + &(&(&theta * &theta) * &theta)) - &(r * &theta).scale(&k(4))) - &r1.scale(&k(2));
        let pol = solve_monic(d, |p| {
            let p1 = p.derivative();
            let p2 = p1.derivative();
            let p3 = p2.derivative();
            &(&(&p3 + &(&a2 * &p2)) + &(&a1 * &p1)) + &(&a0 * p)
        })?;
        let pr = RatFun::from_poly(pol);
        let phi = &theta + &pr.derivative().checked_div(&pr).unwrap();
        let half_q = GaussRat::frac(1, 2);
        let c0 = &(&phi.derivative().scale(&half_q) + &(&phi * &phi).scale(&half_q)) - r;
        Some(vec![c0, -&phi, RatFun::one()])
    });
    match found {
        Some(q) => {
            trace.push(format!("case ii: {}", Witness::Algebraic(q.clone())));
            Ok(Some(q))
        }
        None => {
            trace.push("case ii: no family yields a polynomial".to_string());
            Ok(None)
        }
    }
}

fn factorial(n: usize) -> GaussRat {
    GaussRat::from_int((1..=n as i64).product::<i64>().max(1))
}

/// `P_{-1}` of the case-iii recurrence, together with `P_n, …, P_0`.
fn case_three_chain(p: &RatFun, n: usize, s: &RatFun, theta: &RatFun, r: &RatFun) -> (RatFun, Vec<RatFun>) {
    // chain[i] = P_i for i = 0..=n
    let mut chain = vec![RatFun::zero(); n + 2];
    chain[n] = -p;
    let s1 = s.derivative();
    let s2r = &(s * s) * r;
    let st = s * theta;
    let mut p_minus = RatFun::zero();
    for i in (0..=n).rev() {
        let ni = GaussRat::from_int((n - i) as i64);
        let term1 = -&(s * &chain[i].derivative());
        let term2 = &(&s1.scale(&ni) - &st) * &chain[i];
        let term3 = (&s2r * &chain[i + 1]).scale(&GaussRat::from_int(-(((n - i) * (i + 1)) as i64)));
        let next = &(&term1 + &term2) + &term3;
        if i == 0 {
            p_minus = next;
        } else {
            chain[i - 1] = next;
        }
    }
    chain.truncate(n + 1);
    (p_minus, chain)
}

fn case_three(r: &RatFun, poles: &[PoleInfo], n: usize, trace: &mut Vec<String>) -> Result<Option<Vec<RatFun>>, KovacicError> {
    let half_n = (n / 2) as i64;
    let ks: Vec<GaussRat> = (-half_n..=half_n).filter(|&k| k != 0).map(|k| GaussRat::frac(12 * k, n as i64)).collect();
    let mut sets: Vec<Vec<i64>> = Vec::new();
    sets.push(integer_set(6, &disc_sqrt(&infinity_b(r)), &ks).into_iter().collect());
    for p in poles {
        let s: BTreeSet<i64> = match p.order {
            1 => [12].into_iter().collect(),
            _ => integer_set(6, &disc_sqrt(&double_pole_coeff(r, &p.c)), &ks),
        };
        sets.push(s.into_iter().collect());
    }
    let sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let count = family_count(&sizes, "case iii families")?;
    trace.push(format!("case iii (n = {n}): {count} families"));
    let mut s = RatFun::one();
    for p in poles {
        s = &s * &lin(&p.c);
    }
    let found = for_each_family(&sizes, |idx| {
        let e_inf = sets[0][idx[0]];
        let sum: i64 = (0..poles.len()).map(|j| sets[j + 1][idx[j + 1]]).sum();
        let num = n as i64 * (e_inf - sum);
        if num < 0 || num % 12 != 0 || (num / 12) as usize > DEGREE_LIMIT {
            return None;
        }
        let d = (num / 12) as usize;
        let mut theta = RatFun::zero();
        for (j, p) in poles.iter().enumerate() {
            theta = &theta + &pole_term(&GaussRat::frac(n as i64 * sets[j + 1][idx[j + 1]], 12), &p.c, 1);
        }
        let pol = solve_monic(d, |p| case_three_chain(p, n, &s, &theta, r).0)?;
        let (_, chain) = case_three_chain(&RatFun::from_poly(pol), n, &s, &theta, r);
        let mut coeffs = Vec::with_capacity(n + 1);
        let mut si = RatFun::one();
        for (i, pi) in chain.iter().enumerate() {
            let f = factorial(n - i).inv().unwrap();
            coeffs.push((&si * pi).scale(&f));
            si = &si * &s;
        }
        let lead = coeffs[n].clone();
        Some(coeffs.iter().map(|c| c.checked_div(&lead).unwrap()).collect::<Vec<_>>())
    });
    if found.is_some() {
        trace.push(format!("case iii: degree-{n} witness found"));
    }
    Ok(found)
}

/// `Σ c_i w^i` for polynomials in `w` with rational function coefficients.
type WPoly = Vec<RatFun>;

fn wpoly_trim(mut p: WPoly) -> WPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

/// Remainder of `p` modulo the monic `q`.
fn wpoly_rem(p: &WPoly, q: &WPoly) -> WPoly {
    let mut p = wpoly_trim(p.clone());
    let n = q.len() - 1;
    while p.len() > n {
        let k = p.len() - 1;
        let lead = p[k].clone();
        for i in 0..=n {
            let t = &lead * &q[i];
            p[k - n + i] = &p[k - n + i] - &t;
        }
        p = wpoly_trim(p);
    }
    p
}

/// Outcome of the exact and numeric witness checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessCheck {
    pub exact: bool,
    /// `max |ω' + ω² - r|` over the sample grid, equal to `|y'' + κ y| / |y|`
    /// for `y = exp(∫ω)`.
    pub numeric_max: f64,
    pub samples: usize,
}

impl WitnessCheck {
    pub fn passed(&self) -> bool {
        self.exact && self.numeric_max < 1e-8 && self.samples > 0
    }
}

/// Sample abscissae in `[0.37, 2.97]` at distance at least 0.02 from poles.
pub fn witness_grid(op: &SchrodingerOp, w: Option<&Witness>) -> Vec<f64> {
    let mut bad: Vec<f64> = op.r.pole_data().poles.iter().map(|p| crate::ratfun::rational_to_f64(&p.location)).collect();
    if let Some(Witness::Algebraic(c)) = w {
        for a in c {
            bad.extend(a.pole_data().poles.iter().map(|p| crate::ratfun::rational_to_f64(&p.location)));
        }
    }
    (0..50).map(|k| 0.37 + 0.053 * k as f64).filter(|x| bad.iter().all(|b| (x - b).abs() > 0.02)).collect()
}

pub fn check_witness(op: &SchrodingerOp, w: &Witness) -> WitnessCheck {
    let grid = witness_grid(op, Some(w));
    let r = &op.r;
    match w {
        Witness::Rational(om) => {
            let exact = &(&om.derivative() + &(om * om)) - r;
            let mut worst: f64 = 0.0;
            let dom = om.derivative();
            for &x in &grid {
                let v = om.eval_f64(x);
                worst = worst.max((dom.eval_f64(x) + v * v - r.eval_f64(x)).norm());
            }
            WitnessCheck { exact: exact.is_zero(), numeric_max: worst, samples: grid.len() }
        }
        Witness::Algebraic(q) => {
            let n = q.len() - 1;
            let monic = q.last().is_some_and(|c| c.is_one());
            // D(Q) with ω' = r - ω²
            let mut dq: WPoly = vec![RatFun::zero(); n + 2];
            for (i, a) in q.iter().enumerate() {
                dq[i] = &dq[i] + &a.derivative();
                if i > 0 {
                    let ia = a.scale(&GaussRat::from_int(i as i64));
                    dq[i - 1] = &dq[i - 1] + &(&ia * r);
                    dq[i + 1] = &dq[i + 1] - &ia;
                }
            }
            let exact = monic && wpoly_rem(&dq, q).is_empty();
            // roots in v = S ω, S the product of the pole factors of r, stay
            // separated near the poles
            let mut sp = RatFun::one();
            for p in op.r.pole_data().poles {
                sp = &sp * &lin(&GaussRat::real(p.location));
            }
            let scaled: Vec<RatFun> = q.iter().enumerate().map(|(i, a)| a * &sp.pow((n - i) as i32).unwrap()).collect();
            let dscaled: Vec<RatFun> = scaled.iter().map(|a| a.derivative()).collect();
            let dsp = sp.derivative();
            let mut worst: f64 = 0.0;
            let mut used = 0;
            for &x in &grid {
                let c: Vec<Complex64> = scaled.iter().map(|a| a.eval_f64(x)).collect();
                let dc: Vec<Complex64> = dscaled.iter().map(|a| a.eval_f64(x)).collect();
                let (sx, dsx) = (sp.eval_f64(x), dsp.eval_f64(x));
                let rx = r.eval_f64(x);
                let mut skip = false;
                let mut local: f64 = 0.0;
                for v in poly_roots(&c) {
                    let mut num = Complex64::new(0.0, 0.0);
                    let mut den = Complex64::new(0.0, 0.0);
                    let mut vp = Complex64::new(1.0, 0.0);
                    for i in 0..=n {
                        num += dc[i] * vp;
                        if i < n {
                            den += c[i + 1] * vp * (i + 1) as f64;
                        }
                        vp *= v;
                    }
                    if den.norm() < 1e-6 {
                        skip = true;
                        break;
                    }
                    let vd = -num / den;
                    let w = v / sx;
                    let wd = (vd - w * dsx) / sx;
                    local = local.max((wd + w * w - rx).norm());
                }
                if !skip {
                    used += 1;
                    worst = worst.max(local);
                }
            }
            WitnessCheck { exact, numeric_max: worst, samples: used }
        }
    }
}

/// Exact Riccati compatibility plus the numeric residual bound `1e-8`.
pub fn verify_witness(op: &SchrodingerOp, res: &KovacicResult) -> bool {
    res.witness.as_ref().is_some_and(|w| check_witness(op, w).passed())
}

fn gauss_expr(q: &GaussRat) -> Expr {
    from_ratfun(&RatFun::constant(q.clone()))
}

/// `y1 = exp(∫ω)`. Rational `ω` integrates to `exp(R) Π (x - c)^e`; other
/// witnesses are stored as quadratures over `span`.
pub fn liouvillian_solution(op: &SchrodingerOp, res: &KovacicResult, span: Span) -> Result<SolutionRep, KovacicError> {
    let _ = op;
    match &res.witness {
        Some(Witness::Rational(w)) => match w.antiderivative() {
            Ok((rat, logs)) => {
                let mut factors = Vec::new();
                if !rat.is_zero() {
                    factors.push(Expr::func(Func::Exp, from_ratfun(&rat)));
                }
                for (c, e) in logs {
                    let base = from_ratfun(&lin(&c));
                    if e.is_real() {
                        factors.push(Expr::pow(base, Expr::num(e.re.clone())));
                    } else {
                        factors.push(Expr::func(Func::Exp, Expr::mul(vec![gauss_expr(&e), Expr::func(Func::Log, base)])));
                    }
                }
                Ok(SolutionRep::closed(Expr::mul(factors)))
            }
            Err(_) => Ok(SolutionRep::exp_integral(Omega::Rational(w.clone()), span)),
        },
        Some(Witness::Algebraic(q)) if q.len() == 3 => {
            // ω = -a1/2 + sqrt(a1²/4 - a0)
            let h = q[1].scale(&GaussRat::frac(-1, 2));
            let disc = &(&h * &h) - &q[0];
            let om = Expr::add(vec![from_ratfun(&h), Expr::sqrt(from_ratfun(&disc))]);
            Ok(SolutionRep::exp_integral(Omega::Closed(om), span))
        }
        Some(Witness::Algebraic(q)) => {
            let br = AlgebraicBranch::new(q.clone(), span, 0);
            Ok(SolutionRep::exp_integral(Omega::Branch(Arc::new(br)), span))
        }
        None => Err(KovacicError::CandidateOverflow { what: "no witness".into(), count: 0, limit: 0 }),
    }
}

/// Closed real pair `(re y, im y)` for `y = exp(∫ω)` with non-real rational
/// `ω` whose residues are all real.
pub fn realify_rational(w: &RatFun) -> Option<(Expr, Expr)> {
    if w.is_real() {
        return None;
    }
    let (rat, logs) = w.antiderivative().ok()?;
    if logs.iter().any(|(_, e)| !e.is_real()) {
        return None;
    }
    let phase = from_ratfun(&rat.imag_part());
    let mut amp = vec![Expr::func(Func::Exp, from_ratfun(&rat.real_part()))];
    for (c, e) in logs {
        amp.push(Expr::pow(from_ratfun(&lin(&c)), Expr::num(e.re.clone())));
    }
    let re = Expr::mul(amp.iter().cloned().chain([Expr::func(Func::Cos, phase.clone())]).collect());
    let im = Expr::mul(amp.into_iter().chain([Expr::func(Func::Sin, phase)]).collect());
    Some((crate::expr::simplify(&re), crate::expr::simplify(&im)))
}

/// Real fundamental pair `(re y, im y)` for a complex-valued `y` of a real
/// operator; `None` when `y` is already real on the span.
pub fn realify(y: &SolutionRep, span: Span) -> Option<(SolutionRep, SolutionRep)> {
    let xs = span.samples(21);
    if y.max_imag_ratio(&xs) < 1e-12 {
        return None;
    }
    let re = SolutionRep::RealPart(Arc::new(y.clone()));
    let im = SolutionRep::ImagPart(Arc::new(y.clone()));
    let w = crate::solution::wronskian(&re, &im, span.x0);
    (w.norm() > 1e-12).then_some((re, im))
}

pub fn second_solution(y1: &SolutionRep, span: Span) -> Result<SolutionRep, SolutionError> {
    crate::solution::second_solution(y1, span)
}
