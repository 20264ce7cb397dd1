//! Open domains `D ⊂ ℝ²` given by an x-interval, a u bounding box and an
//! optional inequality.

use serde::Serialize;
use thiserror::Error;

use super::{parse, Expr, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("empty interval ({0}, {1})")]
    EmptyInterval(f64, f64),
    #[error("constraint has no comparison operator: `{0}`")]
    NoRelation(String),
    #[error("constraint side does not parse: {0}")]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Gt,
    Ge,
    Lt,
    Le,
}

/// `lhs rel rhs`, e.g. `u^2 > 4*x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: Expr,
    pub rel: Relation,
    pub rhs: Expr,
    pub text: String,
}

impl Constraint {
    pub fn parse(text: &str) -> Result<Constraint, DomainError> {
        for (op, rel) in [(">=", Relation::Ge), ("<=", Relation::Le), (">", Relation::Gt), ("<", Relation::Lt)] {
            if let Some(k) = text.find(op) {
                let lhs = parse(&text[..k])?;
                let rhs = parse(&text[k + op.len()..])?;
                return Ok(Constraint { lhs, rel, rhs, text: text.trim().to_string() });
            }
        }
        Err(DomainError::NoRelation(text.to_string()))
    }

    /// Points where either side fails to evaluate are outside.
    pub fn holds(&self, x: f64, u: f64) -> bool {
        let (Ok(a), Ok(b)) = (self.lhs.eval(x, u), self.rhs.eval(x, u)) else {
            return false;
        };
        match self.rel {
            Relation::Gt => a > b,
            Relation::Ge => a >= b,
            Relation::Lt => a < b,
            Relation::Le => a <= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    /// Open x-interval.
    pub x: (f64, f64),
    /// Bounding box for u used by grids and fiber sampling.
    pub u: (f64, f64),
    pub constraint: Option<Constraint>,
}

impl Domain {
    pub fn new(x: (f64, f64), u: (f64, f64), constraint: Option<Constraint>) -> Result<Domain, DomainError> {
        if !(x.0 < x.1) {
            return Err(DomainError::EmptyInterval(x.0, x.1));
        }
        if !(u.0 < u.1) {
            return Err(DomainError::EmptyInterval(u.0, u.1));
        }
        Ok(Domain { x, u, constraint })
    }

    pub fn boxed(x: (f64, f64), u: (f64, f64)) -> Domain {
        Domain::new(x, u, None).expect("nonempty box")
    }

    pub fn contains(&self, x: f64, u: f64) -> bool {
        x > self.x.0
            && x < self.x.1
            && u >= self.u.0
            && u <= self.u.1
            && self.constraint.as_ref().is_none_or(|c| c.holds(x, u))
    }

    /// Uniform `nx × nu` grid strictly inside the box, filtered by the
    /// constraint.
    pub fn grid(&self, nx: usize, nu: usize) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(nx * nu);
        for i in 0..nx {
            let x = self.x.0 + (i as f64 + 1.0) * (self.x.1 - self.x.0) / (nx as f64 + 1.0);
            for j in 0..nu {
                let u = self.u.0 + (j as f64 + 1.0) * (self.u.1 - self.u.0) / (nu as f64 + 1.0);
                if self.contains(x, u) {
                    pts.push((x, u));
                }
            }
        }
        pts
    }

    /// Connected components of the sampled fiber `D_x` inside the u box.
    pub fn fiber_components(&self, x: f64, samples: usize) -> Vec<(f64, f64)> {
        let mut comps = Vec::new();
        let mut open: Option<(f64, f64)> = None;
        for j in 0..=samples {
            let u = self.u.0 + j as f64 * (self.u.1 - self.u.0) / samples as f64;
            if self.contains(x, u) {
                open = Some(match open {
                    Some((a, _)) => (a, u),
                    None => (u, u),
                });
            } else if let Some(c) = open.take() {
                comps.push(c);
            }
        }
        comps.extend(open);
        comps
    }

    pub fn fiber_is_interval(&self, x: f64, samples: usize) -> bool {
        self.fiber_components(x, samples).len() <= 1
    }

    /// One sub-domain per fiber component at the midpoint abscissa.
    pub fn branches(&self, samples: usize) -> Vec<Domain> {
        let xm = 0.5 * (self.x.0 + self.x.1);
        let comps = self.fiber_components(xm, samples);
        if comps.len() <= 1 {
            return vec![self.clone()];
        }
        let step = (self.u.1 - self.u.0) / samples as f64;
        comps
            .into_iter()
            .map(|(a, b)| Domain {
                x: self.x,
                u: ((a - step).max(self.u.0), (b + step).min(self.u.1)),
                constraint: self.constraint.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_membership() {
        let c = Constraint::parse("u^2 > 4*x").unwrap();
        assert!(c.holds(1.0, 3.0));
        assert!(!c.holds(1.0, 1.0));
        assert!(Constraint::parse("u + x").is_err());
    }

    #[test]
    fn two_branch_fiber_is_detected() {
        let d = Domain::new((1.0, 2.0), (-10.0, 10.0), Some(Constraint::parse("u^2 > 4*x").unwrap())).unwrap();
        assert!(!d.fiber_is_interval(1.5, 400));
        let br = d.branches(400);
        assert_eq!(br.len(), 2);
        assert!(br[0].u.1 < 0.0 && br[1].u.0 > 0.0);
        let d = Domain::boxed((0.0, 1.0), (-1.0, 1.0));
        assert!(d.fiber_is_interval(0.5, 100));
        assert_eq!(d.grid(20, 20).len(), 400);
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(Domain::new((1.0, 1.0), (0.0, 1.0), None).is_err());
    }
}
