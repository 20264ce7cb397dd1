//! Gauss curvature, κ(x), divergence and the inhomogeneity c(x) of `u' = φ(x, u)`.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{simplify, to_ratfun, Domain, Expr, Var};
use crate::ratfun::RatFun;

/// Which test decided an identity `≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Symbolic,
    NumericOnly,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("curvature depends on u: |dK/du| = {value:e} at (x, u) = ({x}, {u})")]
    NotInClass { x: f64, u: f64, value: f64 },
    #[error("inhomogeneity depends on u: |dC/du| = {value:e} at (x, u) = ({x}, {u})")]
    Inconsistent { x: f64, u: f64, value: f64 },
    #[error("no grid point of the domain could be evaluated")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridStats {
    /// `max |∂u K|` over the evaluable grid points.
    pub max_abs_du: f64,
    /// `max |K - κ|` over the same points.
    pub max_abs_kappa_dev: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub k: Expr,
    pub depends_only_on_x: bool,
    pub tier: Tier,
    pub kappa: Option<Expr>,
    pub kappa_rational: Option<RatFun>,
    pub c: Option<Expr>,
    pub c_tier: Option<Tier>,
    pub numeric: GridStats,
}

pub const GRID: usize = 20;
pub const TOL: f64 = 1e-9;

/// `A(e) = e_x + φ e_u`.
pub fn apply_a(e: &Expr, phi: &Expr) -> Expr {
    simplify(&Expr::add(vec![e.diff(Var::X), Expr::mul(vec![phi.clone(), e.diff(Var::U)])]))
}

/// `K = -∂u A(φ)`.
pub fn gauss_curvature(phi: &Expr) -> Expr {
    let a = apply_a(phi, phi);
    simplify(&Expr::neg(a.diff(Var::U)))
}

/// `div A = φ_u`.
pub fn divergence(phi: &Expr) -> Expr {
    simplify(&phi.diff(Var::U))
}

/// Largest `|e|` over the grid points where `e` evaluates, with its location.
fn grid_max(e: &Expr, pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for &(x, u) in pts {
        if let Ok(v) = e.eval(x, u) {
            if best.is_none_or(|b| v.abs() > b.2) {
                best = Some((x, u, v.abs()));
            }
        }
    }
    best
}

/// A constant u inside every fiber of the grid, preferring the box middle.
fn reference_u(dom: &Domain, pts: &[(f64, f64)]) -> Option<f64> {
    let mut cands: Vec<f64> = pts.iter().map(|p| p.1).collect();
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands.dedup();
    let mid = 0.5 * (dom.u.0 + dom.u.1);
    cands.sort_by(|a, b| (a - mid).abs().partial_cmp(&(b - mid).abs()).unwrap());
    let xs: Vec<f64> = {
        let mut v: Vec<f64> = pts.iter().map(|p| p.0).collect();
        v.dedup();
        v
    };
    cands.into_iter().find(|&u| xs.iter().all(|&x| dom.contains(x, u)))
}

fn eliminate_u(e: &Expr, dom: &Domain, pts: &[(f64, f64)]) -> Expr {
    if !e.contains_var(Var::U) {
        return e.clone();
    }
    let u0 = reference_u(dom, pts).unwrap_or(0.5 * (dom.u.0 + dom.u.1));
    let q = crate::ratfun::rational_approx(u0, 1 << 20, 1e-15)
        .or_else(|| crate::ratfun::rational_from_f64(u0))
        .unwrap_or_default();
    simplify(&e.substitute(Var::U, &Expr::num(q)))
}

/// Decides `∂u K ≡ 0`, symbolically first and then on a `GRID × GRID` grid.
pub fn extract_kappa(k: &Expr, dom: &Domain) -> Result<CurvatureReport, CurvatureError> {
    extract_kappa_with(k, dom, GRID, TOL)
}

pub fn extract_kappa_with(k: &Expr, dom: &Domain, grid: usize, tol: f64) -> Result<CurvatureReport, CurvatureError> {
    let pts = dom.grid(grid, grid);
    let dk = simplify(&k.diff(Var::U));
    let (max_du_x, max_du_u, max_du) = grid_max(&dk, &pts).ok_or(CurvatureError::EmptyGrid)?;
    let tier = if dk.is_zero() {
        Tier::Symbolic
    } else if max_du < tol {
        Tier::NumericOnly
    } else {
        return Err(CurvatureError::NotInClass { x: max_du_x, u: max_du_u, value: max_du });
    };
    let kappa = eliminate_u(k, dom, &pts);
    let mut dev: f64 = 0.0;
    for &(x, u) in &pts {
        if let (Ok(a), Ok(b)) = (k.eval(x, u), kappa.eval(x, u)) {
            dev = dev.max((a - b).abs());
        }
    }
    let kappa_rational = to_ratfun(&kappa).ok().flatten();
    Ok(CurvatureReport {
        k: k.clone(),
        depends_only_on_x: true,
        tier,
        kappa: Some(kappa),
        kappa_rational,
        c: None,
        c_tier: None,
        numeric: GridStats { max_abs_du: max_du, max_abs_kappa_dev: dev, points: pts.len() },
    })
}

/// `c(x) = φ_x + φ φ_u + κ u`, checked to be independent of u.
pub fn inhomogeneity(phi: &Expr, kappa: &Expr, dom: &Domain) -> Result<(Expr, Tier), CurvatureError> {
    inhomogeneity_with(phi, kappa, dom, GRID, TOL)
}

pub fn inhomogeneity_with(
    phi: &Expr,
    kappa: &Expr,
    dom: &Domain,
    grid: usize,
    tol: f64,
) -> Result<(Expr, Tier), CurvatureError> {
    let c = simplify(&Expr::add(vec![
        phi.diff(Var::X),
        Expr::mul(vec![phi.clone(), phi.diff(Var::U)]),
        Expr::mul(vec![kappa.clone(), Expr::u()]),
    ]));
    let dc = simplify(&c.diff(Var::U));
    let pts = dom.grid(grid, grid);
    let tier = if dc.is_zero() {
        Tier::Symbolic
    } else {
        let (x, u, v) = grid_max(&dc, &pts).ok_or(CurvatureError::EmptyGrid)?;
        if v >= tol {
            return Err(CurvatureError::Inconsistent { x, u, value: v });
        }
        Tier::NumericOnly
    };
    Ok((eliminate_u(&c, dom, &pts), tier))
}

/// Curvature, κ and c in one pass.
pub fn analyze(phi: &Expr, dom: &Domain) -> Result<CurvatureReport, CurvatureError> {
    let k = gauss_curvature(phi);
    let mut rep = extract_kappa(&k, dom)?;
    let (c, tier) = inhomogeneity(phi, rep.kappa.as_ref().unwrap(), dom)?;
    rep.c = Some(c);
    rep.c_tier = Some(tier);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Constraint};

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn apply_a_on_coordinates() {
        let phi = p("u^2 + x");
        assert_eq!(apply_a(&Expr::u(), &phi), phi);
        assert_eq!(apply_a(&Expr::x(), &phi), Expr::one());
    }

    #[test]
    fn linear_flow_curvature() {
        // B = x^2, C = 1: K = -(B' + B^2)
        assert_eq!(gauss_curvature(&p("x^2*u + 1")), simplify(&p("-x^4 - 2*x")));
        assert_eq!(gauss_curvature(&p("x^2*u + 1")).to_string(), "-(x^4 + 2*x)");
        assert_eq!(divergence(&p("x^2*u + 1")), p("x^2"));
        assert_eq!(divergence(&p("x")), Expr::zero());
    }

    #[test]
    fn off_class_reports_witness() {
        let dom = Domain::boxed((0.5, 2.0), (-1.0, 1.0));
        let k = gauss_curvature(&p("u^2 + x"));
        assert!(matches!(extract_kappa(&k, &dom), Err(CurvatureError::NotInClass { .. })));
        assert!(matches!(extract_kappa(&Expr::u(), &dom), Err(CurvatureError::NotInClass { .. })));
    }

    #[test]
    fn euler_cauchy_report() {
        let dom = Domain::new((1.1, 2.0), (-10.0, 10.0), Some(Constraint::parse("u^2 > 4*x").unwrap())).unwrap();
        let rep = analyze(&p("u/(2*x) + (3/(2*x))*sqrt(u^2 - 4*x)"), &dom).unwrap();
        assert_eq!(rep.tier, Tier::Symbolic);
        assert_eq!(rep.kappa.unwrap(), p("-2/x^2"));
        assert_eq!(rep.c.unwrap(), Expr::zero());
        assert!(rep.kappa_rational.is_some());
    }
}
