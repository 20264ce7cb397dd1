use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kappa_core::curvature::analyze;
use kappa_core::dynamics::{divergence_along, integrate_ode, riccati_residual};
use kappa_core::embedding::{build_frame, synthesize_ode_from_locus, trace_locus, LocusCurve};
use kappa_core::expr::{parse, simplify};
use kappa_core::fixtures;
use kappa_core::kovacic::classify;
use kappa_core::solution::Span;

fn symbolic(c: &mut Criterion) {
    let phi = fixtures::IMPRIMITIVE.phi();
    c.bench_function("simplify imprimitive curvature input", |b| b.iter(|| simplify(black_box(&phi))));
    c.bench_function("parse euler-cauchy", |b| b.iter(|| parse(black_box(fixtures::EULER_CAUCHY.phi))));
    for f in [fixtures::EULER_CAUCHY, fixtures::IMPRIMITIVE] {
        let (phi, dom) = (f.phi(), f.domain());
        c.bench_function(&format!("analyze {}", f.name), |b| b.iter(|| analyze(black_box(&phi), &dom)));
    }
}

fn kovacic(c: &mut Criterion) {
    for k in ["-2/x^2", "-x - 5/(16*x^2)", "3/(16*x^2) + 2/(9*(x - 1)^2) - 3/(16*x*(x - 1))", "x"] {
        let kappa = simplify(&parse(k).unwrap());
        let r = kappa_core::expr::to_ratfun(&kappa).unwrap().unwrap();
        c.bench_function(&format!("classify {k}"), |b| b.iter(|| classify(black_box(&r))));
    }
}

fn dynamics(c: &mut Criterion) {
    let f = fixtures::EULER_CAUCHY;
    let (phi, dom) = (f.phi(), f.domain());
    let kappa = analyze(&phi, &dom).unwrap().kappa.unwrap();
    c.bench_function("integrate euler-cauchy n=900", |b| b.iter(|| integrate_ode(&phi, &dom, f.x0, black_box(f.u0), 1e-3, 900)));
    let traj = integrate_ode(&phi, &dom, f.x0, f.u0, 1e-3, 900).unwrap();
    c.bench_function("riccati residual n=900", |b| {
        b.iter(|| riccati_residual(&divergence_along(&phi, black_box(&traj)).unwrap(), &kappa))
    });
}

fn embedding(c: &mut Criterion) {
    let f = fixtures::EULER_CAUCHY;
    let (phi, dom) = (f.phi(), f.domain());
    let rep = analyze(&phi, &dom).unwrap();
    let kres = classify(rep.kappa_rational.as_ref().unwrap()).unwrap();
    let span = Span::new(1.1, 2.0, 1.5).unwrap();
    let (kappa, inh) = (rep.kappa.unwrap(), rep.c.unwrap());
    c.bench_function("build frame euler-cauchy", |b| b.iter(|| build_frame(&kappa, &inh, black_box(&kres), span)));
    let frame = build_frame(&kappa, &inh, &kres, span).unwrap();
    let u0s: Vec<f64> = (0..21).map(|k| 3.1 + 0.8 * k as f64).collect();
    c.bench_function("trace locus 21 probes", |b| b.iter(|| trace_locus(&phi, &frame, 1.5, black_box(&u0s))));
    let syn = synthesize_ode_from_locus(&frame, LocusCurve::Hyperbola { k: 1.0 }, (1.0, 2.0));
    let u = 1.5 * 2.25 + 1.0 / (1.5 * 1.5);
    c.bench_function("synthesized field eval", |b| b.iter(|| syn.eval(black_box(1.5), black_box(u))));
}

criterion_group!(benches, symbolic, kovacic, dynamics, embedding);
criterion_main!(benches);
