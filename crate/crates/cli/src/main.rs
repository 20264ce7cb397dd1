use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kappa_cli::config::SynthConfig;
use kappa_cli::{AnalysisConfig, CliError, Overrides, Resolved};

#[derive(Parser)]
#[command(name = "kappa", version, about = "Curvature, Kovacic and locus analysis of u' = phi(x, u)")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full pipeline; writes the JSON report.
    Analyze(Common),
    /// Kovacic classification of y'' + kappa y = 0.
    Kovacic {
        #[arg(allow_hyphen_values = true)]
        kappa: String,
        /// Print the section as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Trajectory residual suite only.
    Verify(Common),
    /// Locus coordinates (u0, C1, C2) as CSV.
    Locus(Common),
    /// Sample a field synthesized from a locus as CSV.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Curvature kappa(x).
        #[arg(long, allow_hyphen_values = true)]
        kappa: Option<String>,
        /// Inhomogeneity c(x); defaults to 0.
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        /// Closed fundamental pair; both or neither.
        #[arg(long, allow_hyphen_values = true)]
        y1: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y2: Option<String>,
        /// hyperbola, line or circle.
        #[arg(long)]
        locus: Option<String>,
        /// Curve parameter.
        #[arg(long)]
        k: Option<f64>,
        /// Parameter interval `a,b` on the curve.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s_range: Option<Vec<f64>>,
        /// Sampled x-interval `a,b`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
        /// Samples in x.
        #[arg(long, default_value_t = 20)]
        nx: usize,
        /// Samples along the curve.
        #[arg(long, default_value_t = 20)]
        ns: usize,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    config: Option<PathBuf>,
    /// Built-in example by name.
    #[arg(long)]
    fixture: Option<String>,
    /// Right-hand side phi(x, u).
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    #[arg(long)]
    x0: Option<f64>,
    /// Start values at x0, comma separated; the first one drives the trajectory.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    u0: Vec<f64>,
    /// RK4 step.
    #[arg(long)]
    h: Option<f64>,
    /// RK4 steps.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tol_sym: Option<f64>,
    #[arg(long)]
    tol_num: Option<f64>,
    /// Report path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<AnalysisConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => AnalysisConfig::load(p)?,
            None => AnalysisConfig::default(),
        };
        cfg.apply(&Overrides {
            fixture: self.fixture.clone(),
            phi: self.phi.clone(),
            x0: self.x0,
            u0: self.u0.clone(),
            h: self.h,
            n: self.n,
            tol_sym: self.tol_sym,
            tol_num: self.tol_num,
            out: self.out.clone(),
        });
        Ok(cfg)
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Analyze(c) => {
            let r = c.config()?.resolve()?;
            let a = kappa_cli::cmd_analyze(&r)?;
            kappa_cli::write_outputs(&a, &r)?;
            emit(&kappa_cli::report_json(&a.report), r.output.report.as_ref())
        }
        Cmd::Verify(c) => {
            let r = c.config()?.resolve()?;
            let rep = kappa_cli::cmd_verify(&r)?;
            emit(&kappa_cli::report_json(&rep), r.output.report.as_ref())
        }
        Cmd::Locus(c) => {
            let r: Resolved = c.config()?.resolve()?;
            let (pts, fails) = kappa_cli::cmd_locus(&r)?;
            for (u0, e) in &fails {
                eprintln!("probe u0 = {u0}: {e}");
            }
            let mut buf = Vec::new();
            kappa_core::embedding::write_locus_csv(&mut buf, &pts).map_err(|e| CliError::Io(e.to_string()))?;
            emit(&String::from_utf8(buf).expect("csv is utf-8"), c.out.as_ref())
        }
        Cmd::Kovacic { kappa, json } => {
            let o = kappa_cli::cmd_kovacic(&kappa)?;
            let text = if json {
                serde_json::to_string_pretty(&o.section).expect("section serializes") + "\n"
            } else {
                let mut t = o.headline() + "\n";
                if let Some(ch) = &o.section.check {
                    t += &format!("witness check: exact = {}, numeric max = {:e} on {} points\n", ch.exact, ch.numeric_max, ch.samples);
                }
                t + &o.verdict.line() + "\n"
            };
            emit(&text, None)
        }
        Cmd::Synth { common, kappa, c, y1, y2, locus, k, s_range, x, nx, ns } => {
            let mut cfg = common.config()?;
            for (name, v) in [("x", &x), ("s-range", &s_range)] {
                if v.as_ref().is_some_and(|v| v.len() != 2) {
                    return Err(CliError::Input(format!("--{name} takes two comma-separated values")));
                }
            }
            if let Some(x) = x {
                let d = cfg.domain.get_or_insert(kappa_cli::config::DomainConfig { x: [x[0], x[1]], u: None, constraint: None });
                d.x = [x[0], x[1]];
            }
            if kappa.is_some() || locus.is_some() || cfg.synth.is_some() {
                let base = cfg.synth.take();
                let need = |v: Option<String>, b: Option<String>, what: &str| v.or(b).ok_or_else(|| CliError::Input(format!("synth needs --{what}")));
                let s = SynthConfig {
                    kappa: need(kappa, base.as_ref().map(|b| b.kappa.clone()), "kappa")?,
                    c: c.or(base.as_ref().map(|b| b.c.clone())).unwrap_or_else(|| "0".into()),
                    y1: y1.or(base.as_ref().and_then(|b| b.y1.clone())),
                    y2: y2.or(base.as_ref().and_then(|b| b.y2.clone())),
                    locus: need(locus, base.as_ref().map(|b| b.locus.clone()), "locus")?,
                    k: k.or(base.as_ref().map(|b| b.k)).unwrap_or(1.0),
                    s_range: match (s_range, &base) {
                        (Some(v), _) => [v[0], v[1]],
                        (None, Some(b)) => b.s_range,
                        (None, None) => return Err(CliError::Input("synth needs --s-range".into())),
                    },
                };
                cfg.synth = Some(s);
            }
            let r = cfg.resolve()?;
            let rows = kappa_cli::cmd_synth(&r, nx, ns)?;
            let mut buf = Vec::new();
            kappa_cli::write_synth_csv(&mut buf, &rows)?;
            emit(&String::from_utf8(buf).expect("ascii"), common.out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kappa: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
