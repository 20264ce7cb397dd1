use kappa_core::curvature::{analyze, extract_kappa, gauss_curvature};
use kappa_core::dynamics::{d1, delta_from_solution, divergence_along, integrate_ode, schrodinger_residual};
use kappa_core::embedding::{build_frame, coords};
use kappa_core::expr::{is_zero, parse, simplify, Domain, Expr, Var};
use kappa_core::fixtures::{self, Fixture};
use kappa_core::kovacic::{classify, liouvillian_solution, second_solution, verify_witness, Case, SchrodingerOp};
use kappa_core::ratfun::{GaussRat, Poly, RatFun};
use kappa_core::solution::{wronskian, Span};
use proptest::prelude::*;

fn poly_expr(cs: &[i64]) -> Expr {
    Expr::add(cs.iter().enumerate().map(|(k, &c)| Expr::mul(vec![Expr::int(c), Expr::powi(Expr::x(), k as i64)])).collect())
}

/// `ω = a1/(x - c1) + a2/(x - c2) + b0 + b1 x` with `c1 ≠ c2` left of the sample span.
fn omega() -> impl Strategy<Value = RatFun> {
    ((-4i64..=4, 1i64..=2), (-4i64..=4, 1i64..=2), 1i64..=3, 4i64..=6, -2i64..=2, -1i64..=1).prop_map(
        |((n1, d1), (n2, d2), c1, c2, b0, b1)| {
            let pole = |n, d, c: i64| RatFun::new(Poly::constant(GaussRat::frac(n, d)), Poly::from_ints(&[c, 1])).unwrap();
            let lin = RatFun::from_poly(Poly::from_ints(&[b0, b1]));
            &(&pole(n1, d1, c1) + &pole(n2, d2, c2)) + &lin
        },
    )
}

fn in_class() -> impl Strategy<Value = Fixture> {
    prop::sample::select(vec![fixtures::EULER_CAUCHY, fixtures::HYPERBOLIC, fixtures::LINEAR_LOCUS, fixtures::SQRT, fixtures::TAN])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn riccati_kappa_is_classified_reducible(w in omega()) {
        // y = exp ∫ω solves y'' + κy = 0 for κ = -(ω' + ω²)
        let kappa = -&(&w.derivative() + &(&w * &w));
        let res = classify(&kappa).unwrap();
        prop_assert_eq!(res.case, Case::Reducible);
        let op = SchrodingerOp::new(kappa);
        prop_assert!(verify_witness(&op, &res));

        let span = Span::new(0.5, 1.5, 1.0).unwrap();
        let y1 = liouvillian_solution(&op, &res, span).unwrap();
        let y2 = second_solution(&y1, span).unwrap();
        let ws: Vec<_> = span.samples(200).into_iter().map(|x| wronskian(&y1, &y2, x)).collect();
        let spread = ws.iter().map(|w| (w - ws[0]).norm()).fold(0.0, f64::max);
        prop_assert!(spread < 1e-8 * ws[0].norm(), "W spread {spread} of {}", ws[0]);
    }

    #[test]
    fn returned_witnesses_verify(num in prop::collection::vec(-3i64..=3, 1..=3), roots in prop::collection::vec(-2i64..=2, 0..=2)) {
        let mut den = Poly::one();
        for c in &roots {
            den = &den * &Poly::from_ints(&[-c, 1]).pow(2);
        }
        let kappa = RatFun::new(Poly::from_ints(&num), den).unwrap();
        if let Ok(res) = classify(&kappa) {
            prop_assert_eq!(res.witness.is_some(), res.case.is_liouvillian());
            if res.witness.is_some() {
                prop_assert!(verify_witness(&SchrodingerOp::new(kappa), &res));
            }
        }
    }

    #[test]
    fn linear_fields_have_the_riccati_curvature(a in prop::collection::vec(-3i64..=3, 1..=4), b in prop::collection::vec(-3i64..=3, 1..=4)) {
        let (a, b) = (poly_expr(&a), poly_expr(&b));
        let phi = Expr::add(vec![a, Expr::mul(vec![b.clone(), Expr::u()])]);
        let dom = Domain::boxed((0.5, 1.5), (-2.0, 2.0));
        let rep = extract_kappa(&gauss_curvature(&phi), &dom).unwrap();
        let expected = Expr::neg(Expr::add(vec![b.diff(Var::X), Expr::powi(b, 2)]));
        let kappa = rep.kappa.unwrap();
        prop_assert!(is_zero(&Expr::sub(kappa.clone(), expected.clone())), "{kappa} vs {expected}");
    }

    #[test]
    fn inhomogeneity_ignores_the_probe(f in in_class(), t in 0.05f64..0.95, us in prop::collection::vec(0.0f64..1.0, 10)) {
        let phi = f.phi();
        let dom = f.domain();
        let rep = analyze(&phi, &dom).unwrap();
        let kappa = rep.kappa.unwrap();
        let c = simplify(&Expr::add(vec![
            phi.diff(Var::X),
            Expr::mul(vec![phi.clone(), phi.diff(Var::U)]),
            Expr::mul(vec![kappa, Expr::u()]),
        ]));
        let x = f.x.0 + t * (f.x.1 - f.x.0);
        let vals: Vec<f64> = us
            .iter()
            .map(|s| f.u.0 + s * (f.u.1 - f.u.0))
            .filter(|&u| dom.contains(x, u))
            .filter_map(|u| c.eval(x, u).ok())
            .collect();
        prop_assume!(vals.len() >= 2);
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let spread = vals.iter().map(|v| (v - vals[0]).abs()).fold(0.0, f64::max);
        prop_assert!(spread < 1e-9 * scale, "{} at x = {x}: {vals:?}", f.name);
    }

    #[test]
    fn riccati_identity_holds_off_class(p0 in -2i64..=2, p1 in -2i64..=2, q in -2i64..=2, s in -1i64..=1, u0 in -1.0f64..1.0) {
        // any field, with the full curvature K(x, u) along the trajectory
        let phi = parse(&format!("{p0} + {p1}*x*u + ({q}/4)*u^2 + ({s}/2)*sin(x*u)")).unwrap();
        let dom = Domain::boxed((-0.1, 0.5), (-20.0, 20.0));
        let traj = integrate_ode(&phi, &dom, 0.0, u0, 1e-3, 400).unwrap();
        prop_assume!(traj.points.len() >= 50);
        let p = divergence_along(&phi, &traj).unwrap();
        let k = gauss_curvature(&phi);
        let h = p.step();
        for i in 3..p.len() - 3 {
            let (x, u) = traj.points[i];
            let r = d1(&p.values, i, h) + p.values[i] * p.values[i] + k.eval(x, u).unwrap();
            prop_assert!(r.abs() < 1e-5, "{phi}: residual {r} at x = {x}");
        }
    }

    #[test]
    fn every_delta_solves_the_schrodinger_equation(u0 in 2.2f64..8.0) {
        let f = fixtures::EULER_CAUCHY;
        let kappa = analyze(&f.phi(), &f.domain()).unwrap().kappa.unwrap();
        let traj = integrate_ode(&f.phi(), &f.domain(), 1.1, u0, 1e-3, 600).unwrap();
        prop_assume!(traj.points.len() >= 100);
        let delta = delta_from_solution(&f.phi(), &traj).unwrap();
        let rep = schrodinger_residual(&delta, &kappa).unwrap();
        let scale = delta.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(rep.max_abs < 1e-5 * scale, "u0 = {u0}: {}", rep.max_abs);
    }

    #[test]
    fn coordinates_do_not_depend_on_the_base_point(u0 in 2.2f64..8.0, j in 100usize..400) {
        let f = fixtures::EULER_CAUCHY;
        let phi = f.phi();
        let rep = analyze(&phi, &f.domain()).unwrap();
        let kres = classify(rep.kappa_rational.as_ref().unwrap()).unwrap();
        let frame = build_frame(rep.kappa.as_ref().unwrap(), rep.c.as_ref().unwrap(), &kres, Span::new(1.1, 2.0, 1.5).unwrap()).unwrap();
        let traj = integrate_ode(&phi, &f.domain(), 1.1, u0, 1e-3, 400).unwrap();
        prop_assume!(traj.points.len() > j);
        let at = |(x, u): (f64, f64)| coords(&frame, x, u, phi.eval(x, u).unwrap()).unwrap();
        let a = at(traj.points[0]);
        let b = at(traj.points[j]);
        let scale = a.c1.abs().max(a.c2.abs()).max(1.0);
        prop_assert!((a.c1 - b.c1).abs() < 1e-8 * scale && (a.c2 - b.c2).abs() < 1e-8 * scale, "{a:?} vs {b:?}");
    }
}

#[test]
fn rk4_error_drops_sixteenfold_when_h_halves() {
    let f = fixtures::EULER_CAUCHY;
    let exact = |x: f64| x * x + 1.0 / x;
    let err = |h: f64, n: usize| {
        let t = integrate_ode(&f.phi(), &f.domain(), f.x0, f.u0, h, n).unwrap();
        let &(x, u) = t.points.last().unwrap();
        (u - exact(x)).abs()
    };
    let ratio = err(0.04, 20) / err(0.02, 40);
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}
