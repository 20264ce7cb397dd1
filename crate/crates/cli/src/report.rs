//! Report schema. Field order is fixed, so equal inputs give byte-identical
//! JSON.

use std::fmt;

use kappa_core::curvature::{CurvatureReport, GridStats};
use kappa_core::dynamics::{Identity, ResidualReport, Trajectory, Truncation};
use kappa_core::embedding::{fit_templates, projective_distance, AffineFrame, EmbeddingError, GaussMapSample, LocusPoint, TemplateFit};
use kappa_core::expr::Expr;
use kappa_core::kovacic::{KovacicError, KovacicResult, WitnessCheck};
use serde::{Serialize, Serializer};

use crate::config::{Resolved, Source};
use crate::{kernel_residual, tier_name, COLLAPSE_TOL};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Yes,
    No,
    Undecided(String),
    NotInClass { x: f64, u: f64 },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Yes => write!(f, "yes"),
            Verdict::No => write!(f, "no"),
            Verdict::Undecided(why) => write!(f, "undecided({why})"),
            Verdict::NotInClass { .. } => write!(f, "NotInClass"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Verdict {
    pub fn line(&self) -> String {
        match self {
            Verdict::NotInClass { x, u } => format!("NotInClass: curvature depends on u at (x, u) = ({x}, {u})"),
            v => format!("Liouvillian-integrable: {v}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainEcho {
    pub x: [f64; 2],
    pub u: [f64; 2],
    pub constraint: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthEcho {
    pub kappa: String,
    pub c: String,
    pub y1: Option<String>,
    pub y2: Option<String>,
    pub locus: String,
    pub k: f64,
    pub s_range: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct InputEcho {
    pub phi: Option<String>,
    pub synth: Option<SynthEcho>,
    pub domain: DomainEcho,
    pub x0: f64,
    pub u0: Vec<f64>,
    pub h: f64,
    pub n: usize,
    pub tol_sym: f64,
    pub tol_num: f64,
}

impl InputEcho {
    pub fn new(r: &Resolved) -> InputEcho {
        let (phi, synth) = match &r.source {
            Source::Phi(p) => (Some(p.to_string()), None),
            Source::Synth(s) => (
                None,
                Some(SynthEcho {
                    kappa: s.kappa.to_string(),
                    c: s.c.to_string(),
                    y1: s.pair.as_ref().map(|p| p.0.to_string()),
                    y2: s.pair.as_ref().map(|p| p.1.to_string()),
                    locus: s.locus.clone(),
                    k: s.k,
                    s_range: [s.s_range.0, s.s_range.1],
                }),
            ),
        };
        InputEcho {
            phi,
            synth,
            domain: DomainEcho {
                x: [r.domain.x.0, r.domain.x.1],
                u: [r.domain.u.0, r.domain.u.1],
                constraint: r.domain.constraint.as_ref().map(|c| c.text.clone()),
            },
            x0: r.x0,
            u0: r.u0.clone(),
            h: r.h,
            n: r.n,
            tol_sym: r.tol_sym,
            tol_num: r.tol_num,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OffClassWitness {
    pub x: f64,
    pub u: f64,
    /// `|∂u K|` there.
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSection {
    /// `K(x, u)`; absent for a synthesized field.
    pub k: Option<String>,
    pub depends_only_on_x: bool,
    /// `symbolic`, `numeric-only` or `declared`.
    pub tier: &'static str,
    pub kappa: Option<String>,
    pub kappa_rational: bool,
    pub c: Option<String>,
    pub c_tier: Option<&'static str>,
    pub grid: Option<GridStats>,
    /// `max |φ̂_x + φ̂ φ̂_u - (c - κ u)|` for a synthesized field.
    pub declared_identity_residual: Option<f64>,
    pub not_in_class: Option<OffClassWitness>,
}

impl CurvatureSection {
    pub fn from_report(r: &CurvatureReport) -> CurvatureSection {
        CurvatureSection {
            k: Some(r.k.to_string()),
            depends_only_on_x: r.depends_only_on_x,
            tier: tier_name(r.tier),
            kappa: r.kappa.as_ref().map(|e| e.to_string()),
            kappa_rational: r.kappa_rational.is_some(),
            c: r.c.as_ref().map(|e| e.to_string()),
            c_tier: r.c_tier.map(tier_name),
            grid: Some(r.numeric),
            declared_identity_residual: None,
            not_in_class: None,
        }
    }

    pub fn not_in_class(k: &Expr, x: f64, u: f64, value: f64) -> CurvatureSection {
        CurvatureSection {
            k: Some(k.to_string()),
            depends_only_on_x: false,
            tier: "symbolic",
            kappa: None,
            kappa_rational: false,
            c: None,
            c_tier: None,
            grid: None,
            declared_identity_residual: None,
            not_in_class: Some(OffClassWitness { x, u, value }),
        }
    }

    pub fn declared(kappa: &Expr, c: &Expr, rational: bool, residual: f64) -> CurvatureSection {
        CurvatureSection {
            k: None,
            depends_only_on_x: true,
            tier: "declared",
            kappa: Some(kappa.to_string()),
            kappa_rational: rational,
            c: Some(c.to_string()),
            c_tier: Some("declared"),
            grid: None,
            declared_identity_residual: Some(residual),
            not_in_class: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KovacicSection {
    pub case: Option<String>,
    pub witness: Option<String>,
    pub witness_degree: Option<usize>,
    pub check: Option<WitnessCheck>,
    pub error: Option<String>,
    pub trace: Vec<String>,
}

impl KovacicSection {
    pub fn from_result(r: &KovacicResult, check: Option<WitnessCheck>) -> KovacicSection {
        KovacicSection {
            case: Some(r.case.label().to_string()),
            witness: r.witness.as_ref().map(|w| w.to_string()),
            witness_degree: r.witness.as_ref().map(|w| w.degree()),
            check,
            error: None,
            trace: r.trace.clone(),
        }
    }

    pub fn from_error(e: &KovacicError) -> KovacicSection {
        KovacicSection { case: None, witness: None, witness_degree: None, check: None, error: Some(e.to_string()), trace: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameSection {
    pub y1: String,
    pub y2: String,
    pub wronskian: f64,
    pub wronskian_symbolic: Option<String>,
    pub wronskian_spread: f64,
    pub u_p: String,
    pub u_p_exact: bool,
    pub u_p_residual: f64,
    /// `max |y'' + κ y| / |y|` over both basis functions.
    pub kernel_residual: f64,
    pub numeric_fallback: bool,
    pub span: [f64; 2],
}

impl FrameSection {
    pub fn from_frame(f: &AffineFrame, kappa: &Expr) -> FrameSection {
        FrameSection {
            y1: f.y1.to_string(),
            y2: f.y2.to_string(),
            wronskian: f.wronskian,
            wronskian_symbolic: f.wronskian_symbolic.as_ref().map(|e| e.to_string()),
            wronskian_spread: f.wronskian_spread,
            u_p: f.u_p.to_string(),
            u_p_exact: f.u_p_exact,
            u_p_residual: f.u_p_residual,
            kernel_residual: kernel_residual(f, kappa),
            numeric_fallback: f.numeric_fallback,
            span: [f.span.a, f.span.b],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySection {
    pub method: &'static str,
    pub x0: f64,
    pub u0: f64,
    pub h: f64,
    pub points: usize,
    pub x_end: f64,
    pub u_end: f64,
    pub truncated: Option<Truncation>,
}

impl TrajectorySection {
    pub fn from_trajectory(t: &Trajectory) -> TrajectorySection {
        let (x_end, u_end) = *t.points.last().expect("trajectory has its start point");
        TrajectorySection {
            method: t.method,
            x0: t.x0,
            u0: t.points[0].1,
            h: t.h,
            points: t.points.len(),
            x_end,
            u_end,
            truncated: t.truncated,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualSummary {
    pub identity: Identity,
    pub max_abs: f64,
    pub l2: f64,
    pub points: usize,
    pub pass: bool,
    pub note: Option<String>,
}

impl ResidualSummary {
    pub fn new(r: &ResidualReport, note: Option<String>, tol: f64) -> ResidualSummary {
        ResidualSummary { identity: r.identity, max_abs: r.max_abs, l2: r.l2, points: r.residuals.len(), pass: r.max_abs < tol, note }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeFailure {
    pub u0: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocusSection {
    pub probes: usize,
    pub traced: usize,
    pub failures: Vec<ProbeFailure>,
    pub fits: Vec<TemplateFit>,
}

impl LocusSection {
    pub fn new(probes: usize, pts: &[LocusPoint], fails: &[(f64, EmbeddingError)]) -> LocusSection {
        LocusSection {
            probes,
            traced: pts.len(),
            failures: fails.iter().map(|(u0, e)| ProbeFailure { u0: *u0, error: e.to_string() }).collect(),
            fits: fit_templates(pts),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussSection {
    pub samples: usize,
    pub degenerate: usize,
    /// Largest angle between a tangent and the kernel element given by `φ_u`.
    pub max_distance: f64,
    /// Largest angle between two tangents.
    pub max_pairwise: f64,
    /// All tangents are one projective point.
    pub collapsed: bool,
}

impl GaussSection {
    pub fn new(g: &[GaussMapSample]) -> GaussSection {
        let live: Vec<&GaussMapSample> = g.iter().filter(|s| !s.degenerate).collect();
        let max_distance = live.iter().map(|s| s.distance).fold(0.0, f64::max);
        let mut max_pairwise: f64 = 0.0;
        for (i, a) in live.iter().enumerate() {
            for b in &live[i + 1..] {
                max_pairwise = max_pairwise.max(projective_distance(a.tangent, b.tangent));
            }
        }
        GaussSection {
            samples: g.len(),
            degenerate: g.len() - live.len(),
            max_distance,
            max_pairwise,
            collapsed: live.len() > 1 && max_pairwise < COLLAPSE_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IvpSection {
    pub solution: String,
    pub closed_form: bool,
    pub max_dev_vs_rk4: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub input: InputEcho,
    pub curvature: CurvatureSection,
    pub kovacic: Option<KovacicSection>,
    pub frame: Option<FrameSection>,
    pub trajectory: Option<TrajectorySection>,
    pub residuals: Vec<ResidualSummary>,
    pub locus: Option<LocusSection>,
    pub gauss_map: Option<GaussSection>,
    pub ivp: Option<IvpSection>,
    pub diagnostics: Vec<String>,
    pub verdict: Verdict,
    pub verdict_line: String,
}

impl AnalysisReport {
    pub fn new(r: &Resolved, curvature: CurvatureSection, verdict: Verdict) -> AnalysisReport {
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            input: InputEcho::new(r),
            curvature,
            kovacic: None,
            frame: None,
            trajectory: None,
            residuals: Vec::new(),
            locus: None,
            gauss_map: None,
            ivp: None,
            diagnostics: Vec::new(),
            verdict_line: verdict.line(),
            verdict,
        }
    }
}
