use kappa_core::curvature::analyze;
use kappa_core::dynamics::{integrate_ode, schrodinger_residual_rep};
use kappa_core::embedding::*;
use kappa_core::expr::{parse, simplify, Expr};
use kappa_core::fixtures::{self, Fixture};
use kappa_core::kovacic::classify;
use kappa_core::solution::{SolutionRep, Span};

fn frame_for(f: &Fixture, span: Span) -> AffineFrame {
    let rep = analyze(&f.phi(), &f.domain()).unwrap();
    let kres = classify(rep.kappa_rational.as_ref().unwrap()).unwrap();
    build_frame(rep.kappa.as_ref().unwrap(), rep.c.as_ref().unwrap(), &kres, span).unwrap()
}

fn sqrt_frame(span: Span) -> AffineFrame {
    let p = |s: &str| parse(s).unwrap();
    AffineFrame::from_closed(&p("1/4"), &Expr::zero(), p("sin(x/2)"), p("-cos(x/2)"), span).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

#[test]
fn euler_cauchy_probe_on_unit_curve() {
    let f = fixtures::EULER_CAUCHY;
    let fr = frame_for(&f, Span::new(1.1, 2.0, 1.5).unwrap());
    let u0 = 1.5f64.powi(2) + 1.0 / 1.5;
    let slope = f.phi().eval(1.5, u0).unwrap();
    let c = coords(&fr, 1.5, u0, slope).unwrap();
    assert!((c.c1 - 1.0).abs() < 1e-9 && (c.c2 - 1.0).abs() < 1e-9, "{c:?}");
}

#[test]
fn cosine_multiples_sit_on_the_first_axis() {
    let f = fixtures::TAN;
    let fr = frame_for(&f, Span::new(0.0, 1.0, 0.5).unwrap());
    for s in [-1.5, 0.3, 1.0] {
        let u0 = s * 0.5f64.cos();
        let c = coords(&fr, 0.5, u0, f.phi().eval(0.5, u0).unwrap()).unwrap();
        assert!((c.c1 - s).abs() < 1e-12 && c.c2.abs() < 1e-12);
    }
}

#[test]
fn hyperbolic_locus() {
    let f = fixtures::HYPERBOLIC;
    let fr = frame_for(&f, Span::new(1.1, 2.0, 1.5).unwrap());
    let lo = 1.5f64.powi(3) + 2.0 * 1.5f64.sqrt() + 0.05;
    let (pts, errs) = trace_locus(&f.phi(), &fr, 1.5, &linspace(lo, 19.9, 25));
    assert!(errs.is_empty());
    assert_eq!(pts.len(), 25);
    for p in &pts {
        assert!((p.c1 * p.c2 - 1.0).abs() < 1e-6, "{p:?}");
    }
    let fit = &fit_templates(&pts)[0];
    assert_eq!(fit.template, Template::Hyperbola);
    assert!((fit.k - 1.0).abs() < 1e-6);
}

#[test]
fn linear_locus_is_diagonal() {
    let f = fixtures::LINEAR_LOCUS;
    let fr = frame_for(&f, Span::new(1.1, 2.0, 1.5).unwrap());
    let (pts, errs) = trace_locus(&f.phi(), &fr, 1.5, &linspace(-4.9, 4.9, 21));
    assert!(errs.is_empty());
    for p in &pts {
        assert!((p.c1 - p.c2).abs() < 1e-8, "{p:?}");
    }
}

#[test]
fn sqrt_locus_is_unit_circle() {
    let f = fixtures::SQRT;
    let fr = sqrt_frame(Span::new(0.0, 1.0, 0.5).unwrap());
    let (pts, _) = trace_locus(&f.phi(), &fr, 0.5, &linspace(-0.89, 0.89, 21));
    for p in &pts {
        assert!((p.c1 * p.c1 + p.c2 * p.c2 - 1.0).abs() < 1e-6, "{p:?}");
    }
}

#[test]
fn probe_outside_fiber_is_collected() {
    let f = fixtures::HYPERBOLIC;
    let fr = frame_for(&f, Span::new(1.1, 2.0, 1.5).unwrap());
    let (pts, errs) = trace_locus(&f.phi(), &fr, 1.5, &[3.375, 10.0]);
    assert_eq!(pts.len(), 1);
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].0, 3.375);
}

#[test]
fn coordinates_are_constant_along_a_trajectory() {
    let f = fixtures::EULER_CAUCHY;
    let fr = frame_for(&f, Span::new(1.1, 2.0, 1.5).unwrap());
    let traj = integrate_ode(&f.phi(), &f.domain(), f.x0, f.u0, 1e-3, 800).unwrap();
    let at = |k: usize| {
        let (x, u) = traj.points[k];
        coords(&fr, x, u, f.phi().eval(x, u).unwrap()).unwrap()
    };
    let (a, b) = (at(0), at(800));
    assert!((a.c1 - b.c1).abs() < 1e-8 && (a.c2 - b.c2).abs() < 1e-8);
}

#[test]
fn difference_of_two_solutions_lies_in_kernel() {
    let f = fixtures::LINEAR_LOCUS;
    let fr = frame_for(&f, Span::new(1.1, 2.0, 1.5).unwrap());
    let u = |u0: f64| solve_ivp_closed_form(&f.phi(), &fr, 1.5, u0).unwrap();
    let d = SolutionRep::Combination(vec![(1.0.into(), u(2.0)), ((-1.0).into(), u(-1.0))]);
    let r = schrodinger_residual_rep(&d, &parse("-2/x^2").unwrap(), 1.1, 2.0, 901).unwrap();
    assert!(r.max_abs < 1e-5);
}

#[test]
fn gauss_map_of_euler_cauchy() {
    let f = fixtures::EULER_CAUCHY;
    let x0 = 1.8;
    let fr = frame_for(&f, Span::new(1.1, 2.0, x0).unwrap());
    let s = linspace(0.5, 2.0, 16);
    let g = gauss_map_check(&f.phi(), &fr, x0, |s| s * x0 * x0 + 1.0 / (s * x0), &s).unwrap();
    for p in &g {
        assert!(!p.degenerate);
        assert!(p.distance < 1e-5, "{p:?}");
        assert!(projective_distance(p.tangent, (p.s * p.s, -1.0)) < 1e-5, "{p:?}");
    }
}

#[test]
fn gauss_map_of_sqrt_equation() {
    let f = fixtures::SQRT;
    let x0 = 0.5;
    let fr = sqrt_frame(Span::new(0.0, 1.0, x0).unwrap());
    let s = linspace(-1.0, 1.0, 11);
    let g = gauss_map_check(&f.phi(), &fr, x0, |s| ((x0 - s) / 2.0).sin(), &s).unwrap();
    for p in &g {
        assert!(p.distance < 1e-5, "{p:?}");
        assert!(projective_distance(p.tangent, (-(p.s / 2.0).sin(), (p.s / 2.0).cos())) < 1e-5, "{p:?}");
    }
}

#[test]
fn gauss_map_of_linear_equation_is_a_point() {
    let f = fixtures::TAN;
    let fr = frame_for(&f, Span::new(0.0, 1.0, 0.5).unwrap());
    let g = gauss_map_check(&f.phi(), &fr, 0.5, |s| s * 0.5f64.cos(), &linspace(-1.5, 1.5, 9)).unwrap();
    for a in &g {
        for b in &g {
            assert!(projective_distance(a.tangent, b.tangent) < 1e-8);
        }
    }
}

#[test]
fn closed_form_ivp_solutions() {
    let f = fixtures::EULER_CAUCHY;
    let fr = frame_for(&f, Span::new(1.1, 2.0, 1.5).unwrap());
    let u = solve_ivp_closed_form(&f.phi(), &fr, 1.5, 1.5f64.powi(2) + 1.0 / 1.5).unwrap();
    assert_eq!(u.closed_form().unwrap(), &simplify(&parse("x^2 + 1/x").unwrap()));

    let f = fixtures::TAN;
    let fr = frame_for(&f, Span::new(0.0, 1.0, 0.5).unwrap());
    let u = solve_ivp_closed_form(&f.phi(), &fr, 0.5, 3.0 * 0.5f64.cos()).unwrap();
    assert_eq!(u.closed_form().unwrap(), &simplify(&parse("3*cos(x)").unwrap()));
}

fn synth_roundtrip(fr: &AffineFrame, phi: &Expr, locus: LocusCurve, s_range: (f64, f64), xs: &[f64], ss: &[f64]) -> f64 {
    let syn = synthesize_ode_from_locus(fr, locus.clone(), s_range);
    let mut worst: f64 = 0.0;
    for &x in xs {
        for &s in ss {
            let (c1, c2) = locus.at(s);
            let u = fr.eval(c1, c2, x).0;
            let got = syn.eval(x, u).unwrap();
            worst = worst.max((got - phi.eval(x, u).unwrap()).abs());
        }
    }
    worst
}

#[test]
fn synthesis_reproduces_the_equations() {
    let xs = linspace(1.1, 2.0, 10);
    let fr = frame_for(&fixtures::EULER_CAUCHY, Span::new(1.1, 2.0, 1.5).unwrap());
    let e = synth_roundtrip(&fr, &fixtures::EULER_CAUCHY.phi(), LocusCurve::Hyperbola { k: 1.0 }, (1.0, 2.0), &xs, &linspace(1.0, 2.0, 10));
    assert!(e < 1e-6, "hyperbola {e}");

    let fr = frame_for(&fixtures::LINEAR_LOCUS, Span::new(1.1, 2.0, 1.5).unwrap());
    let e = synth_roundtrip(&fr, &fixtures::LINEAR_LOCUS.phi(), LocusCurve::Line { k: 1.0 }, (-3.0, 3.0), &xs, &linspace(-2.9, 2.9, 10));
    assert!(e < 1e-6, "line {e}");

    let fr = sqrt_frame(Span::new(0.0, 1.0, 0.5).unwrap());
    let xs = linspace(0.5, 1.0, 10);
    let e = synth_roundtrip(&fr, &fixtures::SQRT.phi(), LocusCurve::Circle { k: 1.0 }, (-0.75, 0.25), &xs, &linspace(-0.74, 0.24, 10));
    assert!(e < 1e-6, "circle {e}");
}

#[test]
fn traced_synthesis_returns_the_locus() {
    let fr = frame_for(&fixtures::EULER_CAUCHY, Span::new(1.1, 2.0, 1.5).unwrap());
    let syn = synthesize_ode_from_locus(&fr, LocusCurve::Hyperbola { k: 1.0 }, (1.0, 2.0));
    let u0s: Vec<f64> = linspace(1.05, 1.95, 20).iter().map(|s| s * 2.25 + 1.0 / (s * 1.5)).collect();
    let (pts, errs) = trace_locus_with(|x, u| syn.eval(x, u).map_err(|e| e.to_string()), &fr, 1.5, &u0s);
    assert!(errs.is_empty());
    for p in &pts {
        assert!((p.c1 * p.c2 - 1.0).abs() < 1e-6);
    }
}

#[test]
fn two_parameter_values_are_not_invertible() {
    let fr = frame_for(&fixtures::EULER_CAUCHY, Span::new(1.1, 2.0, 1.5).unwrap());
    let syn = synthesize_ode_from_locus(&fr, LocusCurve::Hyperbola { k: 1.0 }, (0.3, 2.0));
    // s = 0.6 and s = 1/(0.6 * 1.5^3) give the same value at x = 1.5
    let u = 0.6 * 2.25 + 1.0 / (0.6 * 1.5);
    assert!(matches!(syn.sigma(1.5, u), Err(EmbeddingError::NonInvertible { .. })));
}

#[test]
fn synthesized_divergence_matches_the_equation() {
    let fr = frame_for(&fixtures::EULER_CAUCHY, Span::new(1.1, 2.0, 1.5).unwrap());
    let syn = synthesize_ode_from_locus(&fr, LocusCurve::Hyperbola { k: 1.0 }, (1.0, 2.0));
    let phi_u = simplify(&fixtures::EULER_CAUCHY.phi().diff(kappa_core::expr::Var::U));
    for s in [1.1, 1.4, 1.9] {
        let u = syn.value(1.7, s);
        assert!((syn.eval_u(1.7, u).unwrap() - phi_u.eval(1.7, u).unwrap()).abs() < 1e-9);
    }
}
