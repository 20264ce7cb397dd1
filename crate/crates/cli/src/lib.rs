//! The `kappa` pipeline: curvature, κ and c, Kovacic, frame, dynamics
//! residuals, locus and Gauss map, gathered into a versioned JSON report.

// `!(a < b)` comparisons are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;

use std::io::Write;
use std::path::Path;

use kappa_core::curvature::{self, CurvatureError, Tier};
use kappa_core::dynamics::{self, DynamicsError, ResidualReport, Samples, Trajectory};
use kappa_core::embedding::{self, AffineFrame, GaussMapSample, LocusCurve, LocusPoint, SynthesizedOde};
use kappa_core::expr::{parse, simplify, to_ratfun, Expr, Var};
use kappa_core::kovacic::{self, KovacicError, KovacicResult, SchrodingerOp};
use kappa_core::ratfun::RatFun;
use kappa_core::solution::{self, Span};
use thiserror::Error;

pub use config::{AnalysisConfig, Overrides, Resolved, Source};
pub use report::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

/// Largest `|IVP closed form - RK4|` accepted along the trajectory.
pub const IVP_TOL: f64 = 1e-6;
/// Pairwise projective distance below which the Gauss map is a single point.
pub const COLLAPSE_TOL: f64 = 1e-8;

/// The slope field being analysed: a formula or a synthesized `φ̂`.
pub enum Field {
    Formula { phi: Expr, phi_u: Expr },
    Synth(Box<SynthesizedOde>),
}

impl Field {
    pub fn phi(&self, x: f64, u: f64) -> Result<f64, String> {
        match self {
            Field::Formula { phi, .. } => phi.eval(x, u).map_err(|e| e.to_string()),
            Field::Synth(s) => s.eval(x, u).map_err(|e| e.to_string()),
        }
    }

    pub fn phi_u(&self, x: f64, u: f64) -> Result<f64, String> {
        match self {
            Field::Formula { phi_u, .. } => phi_u.eval(x, u).map_err(|e| e.to_string()),
            Field::Synth(s) => s.eval_u(x, u).map_err(|e| e.to_string()),
        }
    }
}

/// Frame span strictly inside the open x-interval.
fn frame_span(r: &Resolved) -> Span {
    let (a, b) = r.domain.x;
    let m = 1e-3 * (b - a);
    Span::new(a + m, b - m, r.x0).expect("nonempty interval")
}

fn kovacic_verdict(e: &KovacicError) -> Verdict {
    Verdict::Undecided(
        match e {
            KovacicError::UnsupportedPoleField(_) => "unsupported poles",
            KovacicError::IrrationalCoefficient(_) => "irrational exponent",
            KovacicError::CandidateOverflow { .. } => "candidate overflow",
        }
        .into(),
    )
}

/// Kovacic on κ with the witness verified; `Err` only on a failed check.
fn run_kovacic(kr: &RatFun) -> Result<(KovacicSection, Result<KovacicResult, Verdict>), CliError> {
    match kovacic::classify(kr) {
        Ok(res) => {
            let op = SchrodingerOp::new(kr.clone());
            let check = res.witness.as_ref().map(|w| kovacic::check_witness(&op, w));
            if res.case.is_liouvillian() && !check.as_ref().is_some_and(|c| c.passed()) {
                return Err(CliError::Internal(format!("{} witness failed verification: {check:?}", res.case.label())));
            }
            Ok((KovacicSection::from_result(&res, check), Ok(res)))
        }
        Err(e) => Ok((KovacicSection::from_error(&e), Err(kovacic_verdict(&e)))),
    }
}

/// Everything the subcommands share: κ, c, the verdict so far, the field and
/// the frame when requested.
pub struct Prepared {
    pub resolved: Resolved,
    pub kappa: Expr,
    pub c: Expr,
    pub curvature: CurvatureSection,
    pub kovacic: Option<KovacicSection>,
    pub verdict: Verdict,
    pub frame: Option<AffineFrame>,
    pub field: Field,
    pub diagnostics: Vec<String>,
}

pub enum Stage {
    Ready(Box<Prepared>),
    NotInClass(Box<AnalysisReport>),
}

pub fn prepare(r: &Resolved, with_frame: bool) -> Result<Stage, CliError> {
    let mut diagnostics = Vec::new();
    let span = frame_span(r);
    match &r.source {
        Source::Phi(phi) => {
            let k = curvature::gauss_curvature(phi);
            let mut rep = match curvature::extract_kappa_with(&k, &r.domain, curvature::GRID, r.tol_sym) {
                Ok(rep) => rep,
                Err(CurvatureError::NotInClass { x, u, value }) => {
                    let sec = CurvatureSection::not_in_class(&k, x, u, value);
                    return Ok(Stage::NotInClass(Box::new(AnalysisReport::new(r, sec, Verdict::NotInClass { x, u }))));
                }
                Err(e) => return Err(CliError::Input(e.to_string())),
            };
            let kappa = rep.kappa.clone().expect("set on success");
            let (c, c_tier) = curvature::inhomogeneity_with(phi, &kappa, &r.domain, curvature::GRID, r.tol_sym).map_err(|e| match e {
                CurvatureError::EmptyGrid => CliError::Input(e.to_string()),
                _ => CliError::Internal(e.to_string()),
            })?;
            rep.c = Some(c.clone());
            rep.c_tier = Some(c_tier);
            let (kovacic, verdict, kres) = classify_section(rep.kappa_rational.as_ref(), &mut diagnostics)?;
            let frame = if with_frame { Some(make_frame(&kappa, &c, kres.as_ref(), None, span, &mut diagnostics)?) } else { None };
            let phi_u = simplify(&phi.diff(Var::U));
            Ok(Stage::Ready(Box::new(Prepared {
                resolved: r.clone(),
                curvature: CurvatureSection::from_report(&rep),
                kappa,
                c,
                kovacic,
                verdict,
                frame,
                field: Field::Formula { phi: phi.clone(), phi_u },
                diagnostics,
            })))
        }
        Source::Synth(spec) => {
            let kr = to_ratfun(&spec.kappa).ok().flatten();
            let (kovacic, verdict, kres) = classify_section(kr.as_ref(), &mut diagnostics)?;
            let frame = make_frame(&spec.kappa, &spec.c, kres.as_ref(), spec.pair.clone(), span, &mut diagnostics)?;
            let locus = LocusCurve::named(&spec.locus, spec.k).expect("checked in config");
            let syn = embedding::synthesize_ode_from_locus(&frame, locus, spec.s_range);
            let check = declared_identity(&syn, &spec.kappa, &spec.c, r);
            let curvature = CurvatureSection::declared(&spec.kappa, &spec.c, kr.is_some(), check);
            Ok(Stage::Ready(Box::new(Prepared {
                resolved: r.clone(),
                kappa: spec.kappa.clone(),
                c: spec.c.clone(),
                curvature,
                kovacic,
                verdict,
                frame: Some(frame),
                field: Field::Synth(Box::new(syn)),
                diagnostics,
            })))
        }
    }
}

fn classify_section(
    kr: Option<&RatFun>,
    diagnostics: &mut Vec<String>,
) -> Result<(Option<KovacicSection>, Verdict, Option<KovacicResult>), CliError> {
    let Some(kr) = kr else {
        diagnostics.push("kappa is not a rational function of x; Kovacic does not apply".into());
        return Ok((None, Verdict::Undecided("kappa not rational".into()), None));
    };
    let (sec, out) = run_kovacic(kr)?;
    Ok(match out {
        Ok(res) => {
            let v = if res.case.is_liouvillian() { Verdict::Yes } else { Verdict::No };
            (Some(sec), v, Some(res))
        }
        Err(v) => (Some(sec), v, None),
    })
}

fn make_frame(
    kappa: &Expr,
    c: &Expr,
    kres: Option<&KovacicResult>,
    pair: Option<(Expr, Expr)>,
    span: Span,
    diagnostics: &mut Vec<String>,
) -> Result<AffineFrame, CliError> {
    if let Some((y1, y2)) = pair {
        return AffineFrame::from_closed(kappa, c, y1, y2, span).map_err(|e| CliError::Input(format!("synth frame: {e}")));
    }
    if let Some(res) = kres.filter(|r| r.case.is_liouvillian()) {
        match embedding::build_frame(kappa, c, res, span) {
            Ok(f) => return Ok(f),
            Err(e) => diagnostics.push(format!("closed frame unavailable ({e}); using numeric frame")),
        }
    }
    embedding::build_frame_numeric(kappa, c, span).map_err(|e| CliError::Internal(format!("numeric frame: {e}")))
}

/// `max |φ̂_x + φ̂ φ̂_u - (c - κ u)|` on a 5 × 5 grid of `(x, s)`, which
/// vanishes exactly when `φ̂` has curvature κ and inhomogeneity c.
fn declared_identity(syn: &SynthesizedOde, kappa: &Expr, c: &Expr, r: &Resolved) -> f64 {
    let (a, b) = r.domain.x;
    let (s0, s1) = syn.s_range;
    let mut worst: f64 = 0.0;
    for i in 1..=5 {
        let x = a + (b - a) * i as f64 / 6.0;
        for j in 1..=5 {
            let s = s0 + (s1 - s0) * j as f64 / 6.0;
            let u = syn.value(x, s);
            let h = 1e-4;
            let v = (|| -> Result<f64, embedding::EmbeddingError> {
                let fx = (syn.eval(x + h, u)? - syn.eval(x - h, u)?) / (2.0 * h);
                Ok(fx + syn.eval(x, u)? * syn.eval_u(x, u)?)
            })();
            let target = c.eval(x, 0.0).unwrap_or(f64::NAN) - kappa.eval(x, 0.0).unwrap_or(f64::NAN) * u;
            worst = worst.max(v.map_or(f64::INFINITY, |v| (v - target).abs()));
        }
    }
    worst
}

impl Prepared {
    /// The trajectory start: `u0[0]`, else the middle of the fiber at `x0`.
    pub fn start(&self) -> Result<f64, CliError> {
        let r = &self.resolved;
        if let Some(&u) = r.u0.first() {
            return Ok(u);
        }
        match &self.field {
            Field::Synth(s) => Ok(s.value(r.x0, 0.5 * (s.s_range.0 + s.s_range.1))),
            Field::Formula { .. } => {
                let comps = r.domain.fiber_components(r.x0, 2000);
                let (a, b) = comps
                    .into_iter()
                    .max_by(|p, q| (p.1 - p.0).total_cmp(&(q.1 - q.0)))
                    .ok_or_else(|| CliError::Input(format!("empty fiber at x0 = {}", r.x0)))?;
                Ok(0.5 * (a + b))
            }
        }
    }

    /// Probe values at `x0`: the configured list, else interior points of the
    /// fiber component holding the start value.
    pub fn probes(&self) -> Result<Vec<f64>, CliError> {
        let r = &self.resolved;
        if r.u0.len() >= 2 {
            return Ok(r.u0.clone());
        }
        let n = r.probes.max(2);
        let spread = |a: f64, b: f64| (0..n).map(|k| a + (b - a) * (k as f64 + 0.5) / n as f64).collect::<Vec<_>>();
        match &self.field {
            Field::Synth(s) => Ok(spread(s.s_range.0, s.s_range.1).into_iter().map(|t| s.value(r.x0, t)).collect()),
            Field::Formula { .. } => {
                let u = self.start()?;
                let comps = r.domain.fiber_components(r.x0, 2000);
                let (a, b) = comps
                    .iter()
                    .copied()
                    .find(|&(a, b)| a <= u && u <= b)
                    .or_else(|| comps.first().copied())
                    .ok_or_else(|| CliError::Input(format!("empty fiber at x0 = {}", r.x0)))?;
                let m = 0.01 * (b - a);
                Ok(spread(a + m, b - m))
            }
        }
    }

    pub fn trajectory(&self) -> Result<Trajectory, CliError> {
        let r = &self.resolved;
        let u0 = self.start()?;
        dynamics::integrate_with(|x, u| self.field.phi(x, u).ok(), &r.domain, r.x0, u0, r.h, r.n)
            .map_err(|e| CliError::Input(e.to_string()))
    }

    /// `p = φ_u` along the trajectory.
    pub fn divergence(&self, traj: &Trajectory) -> Result<Samples, String> {
        let vals = traj.points.iter().map(|&(x, u)| self.field.phi_u(x, u)).collect::<Result<Vec<_>, _>>()?;
        Ok(Samples::new(traj.xs(), vals))
    }

    /// ODE, Riccati and δ-Schrödinger residuals along the trajectory.
    pub fn residuals(&self, traj: &Trajectory) -> (Vec<(ResidualReport, Option<String>)>, Vec<String>) {
        let mut out = Vec::new();
        let mut diags = Vec::new();
        let ode = dynamics::ode_residual_with(
            |x, u| self.field.phi(x, u).map_err(|_| DynamicsError::SlopeFailed { x, u }),
            traj,
        );
        match ode {
            Ok(r) => out.push((r, None)),
            Err(e) => diags.push(format!("ode residual: {e}")),
        }
        match self.divergence(traj) {
            Ok(p) => {
                match dynamics::riccati_residual(&p, &self.kappa) {
                    Ok(r) => out.push((r, None)),
                    Err(e) => diags.push(format!("riccati residual: {e}")),
                }
                let delta = dynamics::delta_from_divergence(&p);
                let note = delta.truncated.map(|t| format!("delta truncated: {t:?}"));
                match dynamics::schrodinger_residual(&delta, &self.kappa) {
                    Ok(r) => out.push((r, note)),
                    Err(e) => diags.push(format!("delta residual: {e}")),
                }
            }
            Err(e) => diags.push(format!("divergence along trajectory: {e}")),
        }
        (out, diags)
    }

    pub fn locus(&self, probes: &[f64]) -> (Vec<LocusPoint>, Vec<(f64, embedding::EmbeddingError)>) {
        let frame = self.frame.as_ref().expect("frame requested");
        embedding::trace_locus_with(|x, u| self.field.phi(x, u), frame, self.resolved.x0, probes)
    }

    /// Gauss map of the family through `(x0, s)` for the traced probes.
    pub fn gauss_map(&self, pts: &[LocusPoint]) -> (Vec<GaussMapSample>, Vec<String>) {
        let frame = self.frame.as_ref().expect("frame requested");
        let mut out = Vec::new();
        let mut diags = Vec::new();
        for p in pts {
            let s = p.source.1;
            match embedding::gauss_map_check_with(
                |x, u| self.field.phi(x, u),
                |x, u| self.field.phi_u(x, u),
                frame,
                self.resolved.x0,
                |s| s,
                &[s],
            ) {
                Ok(mut g) => out.append(&mut g),
                Err(e) => diags.push(format!("gauss map at u0 = {s}: {e}")),
            }
        }
        (out, diags)
    }
}

/// Full analysis with the artifacts used for CSV export.
pub struct Analysis {
    pub report: AnalysisReport,
    pub trajectory: Option<Trajectory>,
    pub divergence: Option<Samples>,
    pub ode_residual: Option<ResidualReport>,
    pub locus: Vec<LocusPoint>,
    pub gauss_map: Vec<GaussMapSample>,
}

pub fn cmd_analyze(r: &Resolved) -> Result<Analysis, CliError> {
    let prep = match prepare(r, true)? {
        Stage::NotInClass(rep) => {
            return Ok(Analysis {
                report: *rep,
                trajectory: None,
                divergence: None,
                ode_residual: None,
                locus: Vec::new(),
                gauss_map: Vec::new(),
            })
        }
        Stage::Ready(p) => p,
    };
    let mut report = AnalysisReport::new(r, prep.curvature.clone(), prep.verdict.clone());
    report.kovacic = prep.kovacic.clone();
    report.diagnostics = prep.diagnostics.clone();
    let frame = prep.frame.as_ref().expect("frame requested");
    if !frame_consistent(frame) {
        return Err(CliError::Internal(format!("Wronskian of the closed frame drifts by {:e}", frame.wronskian_spread)));
    }
    report.frame = Some(FrameSection::from_frame(frame, &prep.kappa));

    let traj = prep.trajectory()?;
    report.trajectory = Some(TrajectorySection::from_trajectory(&traj));
    let (res, diags) = prep.residuals(&traj);
    report.diagnostics.extend(diags);
    report.residuals = res.iter().map(|(r, note)| ResidualSummary::new(r, note.clone(), prep.resolved.tol_num)).collect();
    let ode_residual = res.iter().find(|(r, _)| r.identity == dynamics::Identity::Ode).map(|(r, _)| r.clone());

    let probes = prep.probes()?;
    let (pts, fails) = prep.locus(&probes);
    report.locus = Some(LocusSection::new(probes.len(), &pts, &fails));
    let (gm, diags) = prep.gauss_map(&pts);
    report.diagnostics.extend(diags);
    report.gauss_map = Some(GaussSection::new(&gm));

    let (x0, u0) = traj.points[0];
    match prep.field.phi(x0, u0).map_err(|e| e.to_string()).and_then(|s| embedding::ivp_solution(frame, x0, u0, s).map_err(|e| e.to_string())) {
        Ok(sol) => {
            let dev = traj.points.iter().map(|&(x, u)| (sol.eval_re(x) - u).abs()).fold(0.0, f64::max);
            report.ivp = Some(IvpSection { solution: sol.to_string(), closed_form: sol.closed_form().is_some(), max_dev_vs_rk4: dev, pass: dev < IVP_TOL });
        }
        Err(e) => report.diagnostics.push(format!("closed-form IVP: {e}")),
    }
    let divergence = prep.divergence(&traj).ok();
    Ok(Analysis { report, trajectory: Some(traj), divergence, ode_residual, locus: pts, gauss_map: gm })
}

/// Residual suite only.
pub fn cmd_verify(r: &Resolved) -> Result<AnalysisReport, CliError> {
    let needs_frame = matches!(r.source, Source::Synth(_));
    let prep = match prepare(r, needs_frame)? {
        Stage::NotInClass(rep) => return Ok(*rep),
        Stage::Ready(p) => p,
    };
    let mut report = AnalysisReport::new(r, prep.curvature.clone(), prep.verdict.clone());
    report.kovacic = prep.kovacic.clone();
    report.diagnostics = prep.diagnostics.clone();
    let traj = prep.trajectory()?;
    report.trajectory = Some(TrajectorySection::from_trajectory(&traj));
    let (res, diags) = prep.residuals(&traj);
    report.diagnostics.extend(diags);
    report.residuals = res.iter().map(|(x, note)| ResidualSummary::new(x, note.clone(), r.tol_num)).collect();
    Ok(report)
}

/// Traced points and the probes that failed.
pub type LocusTrace = (Vec<LocusPoint>, Vec<(f64, embedding::EmbeddingError)>);

/// Locus points for the probes; fails when `φ` is outside the class.
pub fn cmd_locus(r: &Resolved) -> Result<LocusTrace, CliError> {
    match prepare(r, true)? {
        Stage::NotInClass(rep) => Err(CliError::Input(rep.verdict_line)),
        Stage::Ready(p) => Ok(p.locus(&p.probes()?)),
    }
}

/// One `kappa kovacic` run: case and witness, or the reason it is undecided.
#[derive(Debug, Clone)]
pub struct KovacicOutcome {
    pub section: KovacicSection,
    pub verdict: Verdict,
}

impl KovacicOutcome {
    /// `Reducible, omega = 2/x` style summary.
    pub fn headline(&self) -> String {
        match (&self.section.case, &self.section.witness) {
            (Some(c), Some(w)) => format!("{c}, {w}"),
            (Some(c), None) => c.clone(),
            _ => format!("{}: {}", self.verdict, self.section.error.as_deref().unwrap_or("")),
        }
    }
}

pub fn cmd_kovacic(kappa: &str) -> Result<KovacicOutcome, CliError> {
    let e = parse(kappa).map_err(|e| CliError::Input(format!("kappa: {e}")))?;
    let kr = to_ratfun(&simplify(&e))
        .ok()
        .flatten()
        .ok_or_else(|| CliError::Input(format!("kappa is not a rational function of x: {kappa}")))?;
    let (section, out) = run_kovacic(&kr)?;
    let verdict = match out {
        Ok(res) if res.case.is_liouvillian() => Verdict::Yes,
        Ok(_) => Verdict::No,
        Err(v) => v,
    };
    Ok(KovacicOutcome { section, verdict })
}

/// Rows `(x, s, u, φ̂)` of a synthesized field on an `nx × ns` grid.
pub fn cmd_synth(r: &Resolved, nx: usize, ns: usize) -> Result<Vec<[f64; 4]>, CliError> {
    if !matches!(r.source, Source::Synth(_)) {
        return Err(CliError::Input("synth needs a [synth] section or --kappa/--locus".into()));
    }
    let Stage::Ready(p) = prepare(r, true)? else { unreachable!("synthesized fields are in class") };
    let Field::Synth(syn) = &p.field else { unreachable!() };
    let (a, b) = r.domain.x;
    let (s0, s1) = syn.s_range;
    let mut rows = Vec::with_capacity(nx * ns);
    for i in 0..nx {
        let x = a + (b - a) * (i as f64 + 0.5) / nx as f64;
        for j in 0..ns {
            let s = s0 + (s1 - s0) * (j as f64 + 0.5) / ns as f64;
            let u = syn.value(x, s);
            let v = syn.eval(x, u).unwrap_or(f64::NAN);
            rows.push([x, s, u, v]);
        }
    }
    Ok(rows)
}

pub fn write_synth_csv<W: Write>(out: W, rows: &[[f64; 4]]) -> Result<(), CliError> {
    let mut w = out;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    writeln!(w, "x,s,u,phi_hat").map_err(io)?;
    for r in rows {
        writeln!(w, "{:e},{:e},{:e},{:e}", r[0], r[1], r[2], r[3]).map_err(io)?;
    }
    Ok(())
}

pub fn report_json(report: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Writes the report and any CSV outputs named in the configuration.
pub fn write_outputs(a: &Analysis, r: &Resolved) -> Result<(), CliError> {
    fn err(p: &Path, e: impl std::fmt::Display) -> CliError {
        CliError::Io(format!("{}: {e}", p.display()))
    }
    let create = |p: &Path| std::fs::File::create(p).map_err(|e| err(p, e));
    if let (Some(p), Some(t)) = (&r.output.trajectory, &a.trajectory) {
        dynamics::write_trajectory_csv(create(p)?, t, a.divergence.as_ref(), a.ode_residual.as_ref()).map_err(|e| err(p, e))?;
    }
    if let Some(p) = &r.output.locus {
        embedding::write_locus_csv(create(p)?, &a.locus).map_err(|e| err(p, e))?;
    }
    if let Some(p) = &r.output.gauss_map {
        embedding::write_gauss_map_csv(create(p)?, &a.gauss_map).map_err(|e| err(p, e))?;
    }
    Ok(())
}

/// Sanity bound on the Wronskian drift of a closed frame.
pub fn frame_consistent(frame: &AffineFrame) -> bool {
    frame.numeric_fallback || frame.wronskian_spread < 1e-6
}

pub(crate) fn tier_name(t: Tier) -> &'static str {
    match t {
        Tier::Symbolic => "symbolic",
        Tier::NumericOnly => "numeric-only",
    }
}

pub(crate) fn kernel_residual(frame: &AffineFrame, kappa: &Expr) -> f64 {
    let xs = frame.span.samples(21);
    let xs = &xs[1..xs.len() - 1];
    solution::relative_residual(&frame.y1, kappa, xs).max(solution::relative_residual(&frame.y2, kappa, xs))
}
