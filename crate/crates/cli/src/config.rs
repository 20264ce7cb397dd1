//! Analysis configuration: a TOML file, a named fixture, and flag overrides.

use std::path::{Path, PathBuf};

use kappa_core::expr::{parse, Constraint, Domain, Expr};
use kappa_core::fixtures;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_H: f64 = 1e-3;
pub const DEFAULT_N: usize = 800;
pub const DEFAULT_PROBES: usize = 21;
/// Numeric-only identity tolerance on the curvature grid.
pub const DEFAULT_TOL_SYM: f64 = 1e-9;
/// Residual bound for finite-difference identities.
pub const DEFAULT_TOL_NUM: f64 = 1e-5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Right-hand side `φ(x, u)`.
    pub phi: Option<String>,
    /// Name of a built-in example; explicit fields take precedence.
    pub fixture: Option<String>,
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    /// `φ̂` from a locus in a frame instead of a formula.
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub x: [f64; 2],
    pub u: Option<[f64; 2]>,
    pub constraint: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x0: Option<f64>,
    /// The first value starts the trajectory; two or more are the locus probes.
    #[serde(default)]
    pub u0: Vec<f64>,
    pub h: Option<f64>,
    pub n: Option<usize>,
    /// Locus probes generated when `u0` has fewer than two entries.
    pub probes: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub sym: Option<f64>,
    pub num: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub locus: Option<PathBuf>,
    pub gauss_map: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub kappa: String,
    #[serde(default = "zero_text")]
    pub c: String,
    /// Closed fundamental pair; built from `kappa` when absent.
    pub y1: Option<String>,
    pub y2: Option<String>,
    /// `hyperbola`, `line` or `circle`.
    pub locus: String,
    #[serde(default = "one")]
    pub k: f64,
    pub s_range: [f64; 2],
}

fn zero_text() -> String {
    "0".into()
}

fn one() -> f64 {
    1.0
}

/// Command-line overrides, applied after the file and fixture.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub fixture: Option<String>,
    pub phi: Option<String>,
    pub x0: Option<f64>,
    pub u0: Vec<f64>,
    pub h: Option<f64>,
    pub n: Option<usize>,
    pub tol_sym: Option<f64>,
    pub tol_num: Option<f64>,
    pub out: Option<PathBuf>,
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<AnalysisConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<AnalysisConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        AnalysisConfig::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.fixture.is_some() {
            self.fixture = o.fixture.clone();
        }
        if o.phi.is_some() {
            self.phi = o.phi.clone();
        }
        if o.x0.is_some() {
            self.grid.x0 = o.x0;
        }
        if !o.u0.is_empty() {
            self.grid.u0 = o.u0.clone();
        }
        if o.h.is_some() {
            self.grid.h = o.h;
        }
        if o.n.is_some() {
            self.grid.n = o.n;
        }
        if o.tol_sym.is_some() {
            self.tolerances.sym = o.tol_sym;
        }
        if o.tol_num.is_some() {
            self.tolerances.num = o.tol_num;
        }
        if o.out.is_some() {
            self.output.report = o.out.clone();
        }
    }

    /// Fills gaps from the named fixture and checks every field.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let fx = match &self.fixture {
            Some(name) => Some(fixtures::by_name(name).ok_or_else(|| CliError::Input(format!("unknown fixture `{name}`")))?),
            None => None,
        };
        let bad = |m: String| CliError::Input(m);
        let domain = match (&self.domain, &fx) {
            (Some(d), _) => {
                let c = d.constraint.as_deref().map(Constraint::parse).transpose().map_err(|e| bad(format!("constraint: {e}")))?;
                Domain::new((d.x[0], d.x[1]), d.u.map_or((-1e3, 1e3), |u| (u[0], u[1])), c).map_err(|e| bad(format!("domain: {e}")))?
            }
            (None, Some(f)) => f.domain(),
            (None, None) => return Err(bad("no domain given".into())),
        };
        let source = match (&self.synth, &self.phi, &fx) {
            (Some(s), None, _) => Source::Synth(SynthSpec::from_config(s)?),
            (Some(_), Some(_), _) => return Err(bad("`phi` and `synth` are exclusive".into())),
            (None, Some(p), _) => Source::Phi(parse(p).map_err(|e| bad(format!("phi: {e}")))?),
            (None, None, Some(f)) => Source::Phi(f.phi()),
            (None, None, None) => return Err(bad("no `phi`, `fixture` or `synth` given".into())),
        };
        let x0 = self.grid.x0.or(fx.map(|f| f.x0)).unwrap_or(0.5 * (domain.x.0 + domain.x.1));
        if !(domain.x.0 <= x0 && x0 <= domain.x.1) {
            return Err(bad(format!("x0 = {x0} is outside the x-interval")));
        }
        let mut u0 = self.grid.u0.clone();
        if u0.is_empty() && self.phi.is_none() && self.synth.is_none() {
            if let Some(f) = fx {
                u0.push(f.u0);
            }
        }
        let h = self.grid.h.unwrap_or(DEFAULT_H);
        let n = self.grid.n.unwrap_or(DEFAULT_N);
        let tol_sym = self.tolerances.sym.unwrap_or(DEFAULT_TOL_SYM);
        let tol_num = self.tolerances.num.unwrap_or(DEFAULT_TOL_NUM);
        for (name, v) in [("h", h), ("tolerances.sym", tol_sym), ("tolerances.num", tol_num)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("{name} must be positive, got {v}")));
            }
        }
        if n < 7 {
            return Err(bad(format!("n must be at least 7, got {n}")));
        }
        Ok(Resolved {
            source,
            domain,
            x0,
            u0,
            h,
            n,
            probes: self.grid.probes.unwrap_or(DEFAULT_PROBES),
            tol_sym,
            tol_num,
            output: self.output.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub kappa: Expr,
    pub c: Expr,
    pub pair: Option<(Expr, Expr)>,
    pub locus: String,
    pub k: f64,
    pub s_range: (f64, f64),
}

impl SynthSpec {
    pub fn from_config(s: &SynthConfig) -> Result<SynthSpec, CliError> {
        let p = |what: &str, t: &str| parse(t).map_err(|e| CliError::Input(format!("synth.{what}: {e}")));
        let pair = match (&s.y1, &s.y2) {
            (Some(a), Some(b)) => Some((p("y1", a)?, p("y2", b)?)),
            (None, None) => None,
            _ => return Err(CliError::Input("synth needs both y1 and y2 or neither".into())),
        };
        if !(s.s_range[0] < s.s_range[1]) {
            return Err(CliError::Input(format!("synth.s_range [{}, {}] is empty", s.s_range[0], s.s_range[1])));
        }
        if kappa_core::embedding::LocusCurve::named(&s.locus, s.k).is_none() {
            return Err(CliError::Input(format!("synth.locus: unknown curve `{}`", s.locus)));
        }
        Ok(SynthSpec {
            kappa: p("kappa", &s.kappa)?,
            c: p("c", &s.c)?,
            pair,
            locus: s.locus.clone(),
            k: s.k,
            s_range: (s.s_range[0], s.s_range[1]),
        })
    }
}

#[derive(Debug, Clone)]
pub enum Source {
    Phi(Expr),
    Synth(SynthSpec),
}

/// A checked configuration with defaults filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub source: Source,
    pub domain: Domain,
    pub x0: f64,
    /// Possibly empty; a start value is then chosen from the fiber at `x0`.
    pub u0: Vec<f64>,
    pub h: f64,
    pub n: usize,
    pub probes: usize,
    pub tol_sym: f64,
    pub tol_num: f64,
    pub output: OutputConfig,
}
