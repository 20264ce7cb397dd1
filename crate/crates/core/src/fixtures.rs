//! Named example equations with a domain and a base point inside it.

use crate::expr::{parse, Constraint, Domain, Expr};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub phi: &'static str,
    pub x: (f64, f64),
    pub u: (f64, f64),
    pub constraint: Option<&'static str>,
    pub x0: f64,
    pub u0: f64,
}

impl Fixture {
    pub fn phi(&self) -> Expr {
        parse(self.phi).expect("fixture parses")
    }

    pub fn domain(&self) -> Domain {
        let c = self.constraint.map(|c| Constraint::parse(c).expect("fixture constraint parses"));
        Domain::new(self.x, self.u, c).expect("fixture domain is nonempty")
    }
}

/// `u = x^2 + 1/x` passes through the base point.
pub const EULER_CAUCHY: Fixture = Fixture {
    name: "euler-cauchy",
    phi: "u/(2*x) + (3/(2*x))*sqrt(u^2 - 4*x)",
    x: (1.0, 2.5),
    u: (-50.0, 50.0),
    constraint: Some("u^2 > 4*x"),
    x0: 1.1,
    u0: 1.1 * 1.1 + 1.0 / 1.1,
};

/// Solutions `x^3 + C1 x^2 + C2/x` with `C1 C2 = 1`.
pub const HYPERBOLIC: Fixture = Fixture {
    name: "hyperbolic",
    phi: "u/(2*x) + 5/2*x^2 + 3/(2*x)*sqrt((u - x^3)^2 - 4*x)",
    x: (1.1, 2.0),
    u: (-10.0, 20.0),
    constraint: Some("(u - x^3)^2 > 4*x"),
    x0: 1.5,
    u0: 3.375 + 2.25 + 1.0 / 1.5,
};

/// Solutions `x^3 + s (x^2 + 1/x)`.
pub const LINEAR_LOCUS: Fixture = Fixture {
    name: "linear-locus",
    phi: "(2*x^3 - 1)/(x*(x^3 + 1))*u + (x^5 + 4*x^2)/(x^3 + 1)",
    x: (1.1, 2.0),
    u: (-5.0, 5.0),
    constraint: None,
    x0: 1.5,
    u0: 1.0,
};

/// Solutions `sin(x/2 + a)` with `cos(x/2 + a) > 0`.
pub const SQRT: Fixture = Fixture {
    name: "sqrt",
    phi: "(1/2)*sqrt(1 - u^2)",
    x: (0.0, 1.0),
    u: (-0.9, 0.9),
    constraint: None,
    x0: 0.5,
    u0: 0.0,
};

/// Solutions `s cos x`.
pub const TAN: Fixture = Fixture {
    name: "tan",
    phi: "-tan(x)*u",
    x: (0.0, 1.0),
    u: (-2.0, 2.0),
    constraint: None,
    x0: 0.5,
    u0: 1.0,
};

/// Curvature `-x - 5/(16 x^2)`.
pub const IMPRIMITIVE: Fixture = Fixture {
    name: "imprimitive",
    phi: "u*(sqrt(x)*coth((4/3)*x^(3/2)) - 1/(4*x)) - sqrt(x*u^2 - 2*sqrt(x)*sinh((4/3)*x^(3/2)))/sinh((4/3)*x^(3/2))",
    x: (0.5, 1.5),
    u: (1.0, 10.0),
    constraint: Some("x*u^2 > 2*sqrt(x)*sinh((4/3)*x^(3/2))"),
    x0: 1.0,
    u0: 4.0,
};

/// Curvature `u`; not of the class.
pub const OFF_CLASS: Fixture = Fixture {
    name: "off-class",
    phi: "u^2 + x",
    x: (0.0, 1.0),
    u: (-1.0, 1.0),
    constraint: None,
    x0: 0.5,
    u0: 0.0,
};

pub const ALL: [Fixture; 7] = [EULER_CAUCHY, HYPERBOLIC, LINEAR_LOCUS, SQRT, TAN, IMPRIMITIVE, OFF_CLASS];

pub fn by_name(name: &str) -> Option<Fixture> {
    ALL.iter().copied().find(|f| f.name == name)
}
