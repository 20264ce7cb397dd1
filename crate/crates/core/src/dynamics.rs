//! Trajectories of `u' = φ(x, u)`, the divergence along them and the Riccati,
//! Schrödinger and δ identities checked by finite differences.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Domain, EvalError, Expr, Var};
use crate::solution::SolutionRep;

/// Values beyond this magnitude stop integration and quadrature.
pub const BLOWUP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("initial point ({x0}, {u0}) is outside the domain")]
    StartOutside { x0: f64, u0: f64 },
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
    #[error("evaluation failed at ({x}, {u}): {source}")]
    Eval { x: f64, u: f64, source: EvalError },
    #[error("slope evaluation failed at ({x}, {u})")]
    SlopeFailed { x: f64, u: f64 },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
}

/// Why a trajectory or quadrature stopped before the requested end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum Truncation {
    DomainExit { x: f64 },
    Blowup { x: f64 },
    EvaluationFailed { x: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub x0: f64,
    pub h: f64,
    pub points: Vec<(f64, f64)>,
    pub method: &'static str,
    pub truncated: Option<Truncation>,
}

impl Trajectory {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn us(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

/// A real function sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Samples {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub truncated: Option<Truncation>,
}

impl Samples {
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Samples {
        Samples { xs, values, truncated: None }
    }

    pub fn from_fn(xs: &[f64], f: impl Fn(f64) -> f64) -> Samples {
        Samples::new(xs.to_vec(), xs.iter().map(|&x| f(x)).collect())
    }

    pub fn step(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    Riccati,
    Schrodinger,
    Ode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub identity: Identity,
    /// Maximum over interior points, where the 7-point stencils are centred.
    pub max_abs: f64,
    /// `sqrt(h Σ r²)` over the same points.
    pub l2: f64,
    pub grid: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ResidualReport {
    fn from_residuals(identity: Identity, grid: Vec<f64>, residuals: Vec<f64>, h: f64) -> ResidualReport {
        let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let l2 = (residuals.iter().map(|r| r * r).sum::<f64>() * h).sqrt();
        ResidualReport { identity, max_abs, l2, grid, residuals }
    }
}

/// 6th-order central first difference at interior index `i`.
pub fn d1(v: &[f64], i: usize, h: f64) -> f64 {
    (-v[i - 3] + 9.0 * v[i - 2] - 45.0 * v[i - 1] + 45.0 * v[i + 1] - 9.0 * v[i + 2] + v[i + 3]) / (60.0 * h)
}

/// 6th-order central second difference at interior index `i`.
pub fn d2(v: &[f64], i: usize, h: f64) -> f64 {
    (2.0 * v[i - 3] - 27.0 * v[i - 2] + 270.0 * v[i - 1] - 490.0 * v[i] + 270.0 * v[i + 1] - 27.0 * v[i + 2] + 2.0 * v[i + 3])
        / (180.0 * h * h)
}

fn eval_at(e: &Expr, x: f64, u: f64) -> Result<f64, DynamicsError> {
    e.eval(x, u).map_err(|source| DynamicsError::Eval { x, u, source })
}

/// Classical RK4 with `n` fixed steps of size `h`. Stops early, flagged, when
/// a stage leaves the domain, fails to evaluate, or `|u|` exceeds `BLOWUP`.
pub fn integrate_ode(phi: &Expr, dom: &Domain, x0: f64, u0: f64, h: f64, n: usize) -> Result<Trajectory, DynamicsError> {
    if dom.contains(x0, u0) {
        eval_at(phi, x0, u0)?;
    }
    integrate_with(|x, u| phi.eval(x, u).ok(), dom, x0, u0, h, n)
}

/// As `integrate_ode` for a slope given as a closure; `None` is an
/// evaluation failure.
pub fn integrate_with(
    phi: impl Fn(f64, f64) -> Option<f64>,
    dom: &Domain,
    x0: f64,
    u0: f64,
    h: f64,
    n: usize,
) -> Result<Trajectory, DynamicsError> {
    if !(h > 0.0) {
        return Err(DynamicsError::BadStep(h));
    }
    if !dom.contains(x0, u0) {
        return Err(DynamicsError::StartOutside { x0, u0 });
    }
    if phi(x0, u0).is_none() {
        return Err(DynamicsError::SlopeFailed { x: x0, u: u0 });
    }
    let mut points = Vec::with_capacity(n + 1);
    points.push((x0, u0));
    let mut truncated = None;
    let (mut x, mut u) = (x0, u0);
    // Err(true): stage point outside the domain; Err(false): evaluation failed
    let f = |x: f64, u: f64| -> Result<f64, bool> {
        if !dom.contains(x, u) {
            return Err(true);
        }
        phi(x, u).ok_or(false)
    };
    for k in 0..n {
        let stage = || {
            let k1 = f(x, u)?;
            let k2 = f(x + h / 2.0, u + h / 2.0 * k1)?;
            let k3 = f(x + h / 2.0, u + h / 2.0 * k2)?;
            let k4 = f(x + h, u + h * k3)?;
            Ok(u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        };
        let xn = x0 + (k + 1) as f64 * h;
        match stage() {
            Ok(un) if un.abs() > BLOWUP || !un.is_finite() => {
                truncated = Some(Truncation::Blowup { x: xn });
                break;
            }
            Ok(un) if dom.contains(xn, un) => {
                x = xn;
                u = un;
                points.push((x, u));
            }
            Ok(_) | Err(true) => {
                truncated = Some(Truncation::DomainExit { x: xn });
                break;
            }
            Err(false) => {
                truncated = Some(Truncation::EvaluationFailed { x: xn });
                break;
            }
        }
    }
    Ok(Trajectory { x0, h, points, method: "RK4", truncated })
}

/// `p_f(x_i) = φ_u(x_i, u_i)`.
pub fn divergence_along(phi: &Expr, traj: &Trajectory) -> Result<Samples, DynamicsError> {
    let phi_u = crate::expr::simplify(&phi.diff(Var::U));
    let values = traj.points.iter().map(|&(x, u)| eval_at(&phi_u, x, u)).collect::<Result<Vec<_>, _>>()?;
    Ok(Samples::new(traj.xs(), values))
}

fn kappa_values(kappa: &Expr, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| kappa.eval(x, 0.0).unwrap_or(f64::NAN)).collect()
}

/// `p' + p² + κ` at interior points.
pub fn riccati_residual(p: &Samples, kappa: &Expr) -> Result<ResidualReport, DynamicsError> {
    if p.len() < 7 {
        return Err(DynamicsError::TooFewSamples { need: 7, got: p.len() });
    }
    let h = p.step();
    let k = kappa_values(kappa, &p.xs);
    let idx = 3..p.len() - 3;
    let res = idx.clone().map(|i| d1(&p.values, i, h) + p.values[i] * p.values[i] + k[i]).collect();
    Ok(ResidualReport::from_residuals(Identity::Riccati, idx.map(|i| p.xs[i]).collect(), res, h))
}

/// `y'' + κ y` at interior points.
pub fn schrodinger_residual(y: &Samples, kappa: &Expr) -> Result<ResidualReport, DynamicsError> {
    if y.len() < 7 {
        return Err(DynamicsError::TooFewSamples { need: 7, got: y.len() });
    }
    let h = y.step();
    let k = kappa_values(kappa, &y.xs);
    let idx = 3..y.len() - 3;
    let res = idx.clone().map(|i| d2(&y.values, i, h) + k[i] * y.values[i]).collect();
    Ok(ResidualReport::from_residuals(Identity::Schrodinger, idx.map(|i| y.xs[i]).collect(), res, h))
}

/// Schrödinger residual of the real part of a represented solution, sampled
/// on `n` points of `[a, b]`.
pub fn schrodinger_residual_rep(y: &SolutionRep, kappa: &Expr, a: f64, b: f64, n: usize) -> Result<ResidualReport, DynamicsError> {
    let xs: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
    schrodinger_residual(&Samples::from_fn(&xs, |x| y.eval_re(x)), kappa)
}

/// `u' - φ(x, u)` at interior points of a trajectory.
pub fn ode_residual(phi: &Expr, traj: &Trajectory) -> Result<ResidualReport, DynamicsError> {
    ode_residual_with(|x, u| eval_at(phi, x, u), traj)
}

pub fn ode_residual_with(
    phi: impl Fn(f64, f64) -> Result<f64, DynamicsError>,
    traj: &Trajectory,
) -> Result<ResidualReport, DynamicsError> {
    let us = traj.us();
    if us.len() < 7 {
        return Err(DynamicsError::TooFewSamples { need: 7, got: us.len() });
    }
    let idx = 3..us.len() - 3;
    let mut res = Vec::new();
    for i in idx.clone() {
        let (x, u) = traj.points[i];
        res.push(d1(&us, i, traj.h) - phi(x, u)?);
    }
    Ok(ResidualReport::from_residuals(Identity::Ode, idx.map(|i| traj.points[i].0).collect(), res, traj.h))
}

/// `δ_f(x) = exp(∫_{x0}^x p_f)` by composite Simpson, returned on the
/// even-index nodes of the trajectory so every value is a full Simpson sum.
/// Stops, flagged, where `|p_f|` or `δ` exceed `BLOWUP`.
pub fn delta_from_solution(phi: &Expr, traj: &Trajectory) -> Result<Samples, DynamicsError> {
    let p = divergence_along(phi, traj)?;
    Ok(delta_from_divergence(&p))
}

pub fn delta_from_divergence(p: &Samples) -> Samples {
    let h = if p.len() > 1 { p.step() } else { 0.0 };
    let mut xs = vec![p.xs[0]];
    let mut vals = vec![1.0];
    let mut integral = 0.0;
    let mut truncated = None;
    let mut i = 0;
    while i + 2 < p.len() {
        let (a, b, c) = (p.values[i], p.values[i + 1], p.values[i + 2]);
        if [a, b, c].iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) {
            truncated = Some(Truncation::Blowup { x: p.xs[i + 1] });
            break;
        }
        integral += h / 3.0 * (a + 4.0 * b + c);
        let d = integral.exp();
        if !d.is_finite() || d > BLOWUP {
            truncated = Some(Truncation::Blowup { x: p.xs[i + 2] });
            break;
        }
        xs.push(p.xs[i + 2]);
        vals.push(d);
        i += 2;
    }
    Samples { xs, values: vals, truncated }
}

/// CSV with columns `x, u, p, residual`; missing entries are left empty.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    traj: &Trajectory,
    p: Option<&Samples>,
    residual: Option<&ResidualReport>,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "u", "p", "residual"])?;
    for (i, &(x, u)) in traj.points.iter().enumerate() {
        let pv = p.and_then(|s| s.values.get(i)).map(|v| format!("{v:e}")).unwrap_or_default();
        let rv = residual
            .and_then(|r| r.grid.iter().position(|&g| g == x).map(|k| r.residuals[k]))
            .map(|v| format!("{v:e}"))
            .unwrap_or_default();
        w.write_record([format!("{x}"), format!("{u:e}"), pv, rv])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Constraint};

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn constant_flow() {
        let dom = Domain::boxed((0.0, 10.0), (-10.0, 10.0));
        let t = integrate_ode(&Expr::zero(), &dom, 1.0, 5.0, 0.01, 100).unwrap();
        assert!(t.points.iter().all(|&(_, u)| u == 5.0));
        assert_eq!(t.points.len(), 101);
    }

    #[test]
    fn domain_exit_truncates() {
        let dom = Domain::boxed((0.0, 10.0), (-1.0, 1.0));
        let t = integrate_ode(&Expr::one(), &dom, 0.5, 0.0, 0.01, 500).unwrap();
        assert!(matches!(t.truncated, Some(Truncation::DomainExit { .. })));
        assert!(t.points.last().unwrap().1 <= 1.0);
        assert!(integrate_ode(&Expr::one(), &dom, 0.5, 3.0, 0.01, 5).is_err());
    }

    #[test]
    fn stencils_are_sixth_order() {
        let h = 0.05;
        let xs: Vec<f64> = (0..7).map(|k| 1.0 + (k as f64 - 3.0) * h).collect();
        let v: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        assert!((d1(&v, 3, h) - 1f64.cos()).abs() < 1e-9);
        assert!((d2(&v, 3, h) + 1f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn linear_flow_divergence_is_b() {
        let dom = Domain::boxed((0.0, 1.0), (-5.0, 5.0));
        let phi = p("-tan(x)*u");
        let t = integrate_ode(&phi, &dom, 0.1, 1.0, 1e-3, 800).unwrap();
        let pf = divergence_along(&phi, &t).unwrap();
        for (x, v) in pf.xs.iter().zip(&pf.values) {
            assert!((v + x.tan()).abs() < 1e-15);
        }
        assert!(riccati_residual(&pf, &Expr::one()).unwrap().max_abs < 1e-6);
    }

    #[test]
    fn delta_of_divergence_free_flow_is_one() {
        let dom = Domain::boxed((0.0, 2.0), (-5.0, 5.0));
        let t = integrate_ode(&p("x^2"), &dom, 0.5, 0.0, 1e-3, 1000).unwrap();
        let d = delta_from_solution(&p("x^2"), &t).unwrap();
        assert!(d.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn euler_cauchy_trajectory() {
        let dom = Domain::new((1.0, 2.5), (-50.0, 50.0), Some(Constraint::parse("u^2 > 4*x").unwrap())).unwrap();
        let phi = p("u/(2*x) + (3/(2*x))*sqrt(u^2 - 4*x)");
        let t = integrate_ode(&phi, &dom, 1.1, 1.1f64.powi(2) + 1.0 / 1.1, 1e-3, 900).unwrap();
        assert!(t.truncated.is_none());
        for &(x, u) in &t.points {
            assert!((u - (x * x + 1.0 / x)).abs() < 1e-8);
        }
        assert!(ode_residual(&phi, &t).unwrap().max_abs < 1e-8);
    }
}
