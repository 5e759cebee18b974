//! The `thetanull` command line.
//!
//! Every report embeds the effective configuration and a canonical
//! invocation that reproduces it byte for byte. Exit codes: 0 success,
//! 1 usage or input error, 2 numerical failure (ambiguous vanishing,
//! unreliable rank cut, bound violation, rank disagreement).

mod output;

pub use output::{flatten, Format, Table};

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::characteristics::{
    hyperelliptic_theta2_enumerated, hyperelliptic_theta2_formula, theta2_bound,
    MAX_HYPERELLIPTIC_ENUMERATION_GENUS, MAX_HYPERELLIPTIC_GENUS,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::multmap::{
    g2_irreducible_rank_scan, sample_points, sym_kernel_dim, verify_kempf, RankSettings,
    DEFAULT_REL_TOL,
};
use crate::ppav::io::{read_period_matrix, PeriodMatrixFile};
use crate::ppav::{
    product_ppav, random_ppav, theta2_count_with, theta_n_count_with, TorsionPoint, DEFAULT_EPS,
    DEFAULT_VANISH_TOL,
};
use crate::theta::RiemannMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Stream offsets so that one `--seed` drives independent generators.
const POINT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const SCAN_STREAM: u64 = 0xc2b2_ae3d_27d4_eb4f;

#[derive(Debug, Parser)]
#[command(
    name = "thetanull",
    version,
    about = "Torsion points on theta divisors and ranks of multiplication maps"
)]
pub struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, env = "THETANULL_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count n-torsion points on the theta divisor.
    Count(CountArgs),
    /// Numerical rank of M(x, y) against the two-torsion translate count.
    Rank(RankArgs),
    /// The hyperelliptic count 4^g - C(2g+1, g), with enumeration for g <= 10.
    Hyperelliptic(HyperellipticArgs),
    /// Upper bounds on Θ(2) and Θ(2m) over a range of genera.
    BoundTable(BoundTableArgs),
    /// Dimension of the space of quadrics in the second-order theta functions
    /// vanishing on the image of A.
    Quadrics(QuadricsArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Product of elliptic curves, e.g. `i,2i` or `0.2+1.4i,i`.
    #[arg(long, value_name = "TAUS", allow_hyphen_values = true)]
    pub product: Option<String>,
    /// Random period matrix of the given genus, from `--seed`.
    #[arg(long, value_name = "G")]
    pub random: Option<usize>,
    /// JSON period-matrix file `{"g", "re", "im"}`.
    #[arg(long, value_name = "PATH")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    /// Absolute precision of each theta value.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    /// Vanishing threshold on normalized theta moduli; nonvanishing needs ten times it.
    #[arg(long, default_value_t = DEFAULT_VANISH_TOL)]
    pub vanish_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    /// Torsion order n.
    #[arg(long, default_value_t = 2)]
    pub order: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    /// Relative singular-value cut.
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    pub rel_tol: f64,
    /// Sample points; defaults to 2·4^g + 16.
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// `0`, `random`, `frac:M:K:N` for (m + τk)/n, or `real:S:T` for s + τt;
    /// vectors are comma-separated.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub x: PointSpec,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub y: PointSpec,
    /// Scan M(0, x) over random, on-divisor and two-torsion x (genus 2).
    #[arg(long)]
    pub scan_lemma_g2: bool,
    /// Random points in the scan.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

#[derive(Debug, Clone, Args)]
pub struct HyperellipticArgs {
    #[arg(long, short)]
    pub genus: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BoundTableArgs {
    #[arg(long, default_value_t = 1)]
    pub g_min: usize,
    #[arg(long, default_value_t = 5)]
    pub g_max: usize,
    #[arg(long, default_value_t = 1)]
    pub m_min: u64,
    #[arg(long, default_value_t = 3)]
    pub m_max: u64,
}

#[derive(Debug, Clone, Args)]
pub struct QuadricsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    pub rel_tol: f64,
    #[arg(long)]
    pub n_samples: Option<usize>,
}

/// A point of `C^g` named on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSpec {
    Zero,
    Random,
    Torsion { m: Vec<u64>, k: Vec<u64>, n: u64 },
    Real { s: Vec<f64>, t: Vec<f64> },
}

impl FromStr for PointSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        fn list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
            s.split(',')
                .map(|v| v.trim().parse().map_err(|_| format!("bad number `{v}`")))
                .collect()
        }
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["0"] => Ok(PointSpec::Zero),
            ["random"] => Ok(PointSpec::Random),
            ["frac", m, k, n] => Ok(PointSpec::Torsion {
                m: list(m)?,
                k: list(k)?,
                n: n.parse().map_err(|_| format!("bad order `{n}`"))?,
            }),
            ["real", s, t] => Ok(PointSpec::Real {
                s: list(s)?,
                t: list(t)?,
            }),
            _ => Err(format!(
                "expected `0`, `random`, `frac:M:K:N` or `real:S:T`, got `{s}`"
            )),
        }
    }
}

impl fmt::Display for PointSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        match self {
            PointSpec::Zero => write!(f, "0"),
            PointSpec::Random => write!(f, "random"),
            PointSpec::Torsion { m, k, n } => write!(f, "frac:{}:{}:{n}", join(m), join(k)),
            PointSpec::Real { s, t } => write!(f, "real:{}:{}", join(s), join(t)),
        }
    }
}

impl PointSpec {
    /// `slot` picks an independent random point for `x` and `y`.
    fn resolve(&self, tau: &RiemannMatrix, seed: u64, slot: usize) -> Result<Vec<Complex64>> {
        let g = tau.genus();
        match self {
            PointSpec::Zero => Ok(vec![Complex64::new(0.0, 0.0); g]),
            PointSpec::Random => Ok(sample_points(tau, 2, seed ^ POINT_STREAM).swap_remove(slot)),
            PointSpec::Torsion { m, k, n } => {
                let p = TorsionPoint::new(m.clone(), k.clone(), *n)?;
                if p.genus() != g {
                    return Err(Error::DimensionMismatch {
                        expected: g,
                        found: p.genus(),
                    });
                }
                Ok(p.to_complex(tau))
            }
            PointSpec::Real { s, t } => {
                if s.len() != g || t.len() != g {
                    return Err(Error::DimensionMismatch {
                        expected: g,
                        found: if s.len() != g { s.len() } else { t.len() },
                    });
                }
                Ok(tau.lattice_point(s, t))
            }
        }
    }
}

/// Parses `a+bi`, `bi`, `i`, `-i`, or a plain real.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse `{s}` as a complex number");
    let Some(body) = t.strip_suffix('i') else {
        return t
            .parse()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let re = if re.is_empty() {
        0.0
    } else {
        re.parse().map_err(|_| bad())?
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

/// Round-trips through [`parse_complex`].
pub fn format_complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

/// Where the period matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatrixSource {
    Product { moduli: Vec<String> },
    Random { g: usize },
    File { path: PathBuf },
}

impl MatrixSource {
    fn from_args(a: &SourceArgs) -> Result<Self> {
        if let Some(p) = &a.product {
            let moduli = p
                .split(',')
                .map(|t| parse_complex(t).map(format_complex))
                .collect::<std::result::Result<_, _>>()
                .map_err(Error::InvalidArgument)?;
            Ok(MatrixSource::Product { moduli })
        } else if let Some(g) = a.random {
            Ok(MatrixSource::Random { g })
        } else if let Some(path) = &a.file {
            Ok(MatrixSource::File { path: path.clone() })
        } else {
            Err(Error::InvalidArgument("no period matrix given".into()))
        }
    }

    fn build(&self, seed: u64) -> Result<RiemannMatrix> {
        match self {
            MatrixSource::Product { moduli } => {
                let taus = moduli
                    .iter()
                    .map(|m| parse_complex(m).map_err(Error::InvalidArgument))
                    .collect::<Result<Vec<_>>>()?;
                product_ppav(&taus)
            }
            MatrixSource::Random { g } => random_ppav(*g, seed),
            MatrixSource::File { path } => read_period_matrix(path),
        }
    }

    fn flag(&self) -> (&'static str, String) {
        match self {
            MatrixSource::Product { moduli } => ("product", moduli.join(",")),
            MatrixSource::Random { g } => ("random", g.to_string()),
            MatrixSource::File { path } => ("file", path.display().to_string()),
        }
    }
}

/// The effective configuration of a run, echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<MatrixSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vanish_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_lemma_g2: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genus: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_range: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_range: Option<[u64; 2]>,
    pub format: Format,
}

impl RunConfig {
    fn new(command: &str, format: Format) -> Self {
        RunConfig {
            command: command.into(),
            source: None,
            seed: None,
            eps: None,
            vanish_tol: None,
            rel_tol: None,
            n_samples: None,
            order: None,
            x: None,
            y: None,
            scan_lemma_g2: None,
            trials: None,
            genus: None,
            g_range: None,
            m_range: None,
            format,
        }
    }

    /// Arguments, without the program name, that reproduce this run.
    pub fn invocation(&self) -> Vec<String> {
        let mut a = vec![self.command.clone()];
        let mut push = |flag: &str, v: String| {
            a.push(format!("--{flag}"));
            a.push(v);
        };
        if let Some(s) = &self.source {
            let (flag, v) = s.flag();
            push(flag, v);
        }
        let sci = |v: f64| format!("{v:e}");
        if let Some(v) = self.seed {
            push("seed", v.to_string());
        }
        if let Some(v) = self.eps {
            push("eps", sci(v));
        }
        if let Some(v) = self.vanish_tol {
            push("vanish-tol", sci(v));
        }
        if let Some(v) = self.rel_tol {
            push("rel-tol", sci(v));
        }
        if let Some(v) = self.n_samples {
            push("n-samples", v.to_string());
        }
        if let Some(v) = self.order {
            push("order", v.to_string());
        }
        if let Some(v) = &self.x {
            push("x", v.clone());
        }
        if let Some(v) = &self.y {
            push("y", v.clone());
        }
        if let Some(v) = self.trials {
            push("trials", v.to_string());
        }
        if let Some(v) = self.genus {
            push("genus", v.to_string());
        }
        if let Some([lo, hi]) = self.g_range {
            push("g-min", lo.to_string());
            push("g-max", hi.to_string());
        }
        if let Some([lo, hi]) = self.m_range {
            push("m-min", lo.to_string());
            push("m-max", hi.to_string());
        }
        push("format", self.format.name().into());
        if self.scan_lemma_g2 == Some(true) {
            a.push("--scan-lemma-g2".into());
        }
        a
    }
}

/// A finished command: its document, optional table view, and exit code.
struct Outcome {
    config: RunConfig,
    period_matrix: Option<PeriodMatrixFile>,
    result: Value,
    table: Option<Table>,
    code: i32,
    /// Explanation for a numerical exit code.
    diagnostic: Option<String>,
}

impl Outcome {
    fn new(config: RunConfig, result: Value) -> Self {
        Outcome {
            config,
            period_matrix: None,
            result,
            table: None,
            code: EXIT_OK,
            diagnostic: None,
        }
    }

    fn fail(mut self, why: String) -> Self {
        self.code = EXIT_NUMERICAL;
        self.diagnostic = Some(why);
        self
    }

    fn document(&self) -> Value {
        let mut doc = json!({
            "command": self.config.command,
            "invocation": self.config.invocation(),
            "config": self.config,
        });
        if let Some(pm) = &self.period_matrix {
            doc["period_matrix"] = json!(pm);
        }
        doc["result"] = self.result.clone();
        doc
    }

    fn config_pairs(&self, sep: &str) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        flatten("", &json!(self.config), sep, &mut pairs);
        pairs.retain(|(k, _)| k != "command");
        pairs
    }

    fn render(&self) -> Result<String> {
        match self.config.format {
            Format::Json => Ok(serde_json::to_string_pretty(&self.document())
                .map_err(|e| Error::Io(e.to_string()))?
                + "\n"),
            Format::Csv => {
                let table = match &self.table {
                    Some(t) => t.clone(),
                    None => {
                        let mut prefix =
                            vec![("invocation".to_string(), self.config.invocation().join(" "))];
                        prefix.extend(self.config_pairs(";"));
                        Table::from_values(&prefix, std::slice::from_ref(&self.result), ";")
                    }
                };
                table.to_csv()
            }
            Format::Human => {
                let mut out = format!("thetanull {}\n", self.config.invocation().join(" "));
                out.push_str(&output::key_values("config", &self.config_pairs(", ")));
                if let Some(pm) = &self.period_matrix {
                    let mut pairs = Vec::new();
                    flatten("", &json!(pm), ", ", &mut pairs);
                    out.push_str(&output::key_values("period matrix", &pairs));
                }
                match &self.table {
                    Some(t) => out.push_str(&t.to_text()),
                    None => {
                        let mut pairs = Vec::new();
                        flatten("", &self.result, ", ", &mut pairs);
                        out.push_str(&output::key_values("result", &pairs));
                    }
                }
                Ok(out)
            }
        }
    }
}

fn check_tolerances(t: &ToleranceArgs) -> Result<()> {
    crate::ppav::check_tolerances(t.eps, t.vanish_tol)
}

fn execution(threads: usize) -> Execution {
    if threads == 1 {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn cmd_count(a: &CountArgs, format: Format, exec: Execution) -> Result<Outcome> {
    check_tolerances(&a.tol)?;
    let source = MatrixSource::from_args(&a.source)?;
    let tau = source.build(a.seed)?;
    let mut config = RunConfig::new("count", format);
    config.source = Some(source);
    config.seed = Some(a.seed);
    config.eps = Some(a.tol.eps);
    config.vanish_tol = Some(a.tol.vanish_tol);
    config.order = Some(a.order);
    let report = if a.order == 2 {
        theta2_count_with(&tau, a.tol.eps, a.tol.vanish_tol, exec)?
    } else {
        theta_n_count_with(&tau, a.order, a.tol.eps, a.tol.vanish_tol, exec)?
    };
    let mut out = Outcome::new(config, to_value(&report));
    out.period_matrix = Some(PeriodMatrixFile::from_matrix(&tau));
    Ok(out)
}

fn rank_settings(
    tol: &ToleranceArgs,
    rel_tol: f64,
    n_samples: Option<usize>,
    seed: u64,
    exec: Execution,
) -> RankSettings {
    RankSettings {
        eps: tol.eps,
        vanish_tol: tol.vanish_tol,
        rel_tol,
        n_samples,
        seed,
        exec,
    }
}

fn cmd_rank(a: &RankArgs, format: Format, exec: Execution) -> Result<Outcome> {
    check_tolerances(&a.tol)?;
    let source = MatrixSource::from_args(&a.source)?;
    let tau = source.build(a.seed)?;
    let g = tau.genus();
    let n_samples = a
        .n_samples
        .unwrap_or_else(|| crate::multmap::default_samples(g));
    let settings = rank_settings(&a.tol, a.rel_tol, Some(n_samples), a.seed, exec);
    let mut config = RunConfig::new("rank", format);
    config.source = Some(source);
    config.seed = Some(a.seed);
    config.eps = Some(a.tol.eps);
    config.vanish_tol = Some(a.tol.vanish_tol);
    config.rel_tol = Some(a.rel_tol);
    config.n_samples = Some(n_samples);
    let pm = PeriodMatrixFile::from_matrix(&tau);

    let mut out = if a.scan_lemma_g2 {
        config.scan_lemma_g2 = Some(true);
        config.trials = Some(a.trials);
        let scan = g2_irreducible_rank_scan(&tau, a.trials, a.seed ^ SCAN_STREAM, &settings)?;
        let rows: Vec<Value> = scan
            .entries
            .iter()
            .map(|e| {
                json!({
                    "kind": e.kind,
                    "x": e.x.iter().map(|z| format_complex(*z)).collect::<Vec<_>>(),
                    "numerical_rank": e.report.numerical_rank,
                    "kempf_count": e.report.kempf_count,
                    "agrees": e.report.agrees,
                    "gap_ratio": e.report.gap_ratio.is_finite().then_some(e.report.gap_ratio),
                    "within_bound": e.within_bound,
                })
            })
            .collect();
        let holds = scan.holds;
        let disagreements = scan
            .entries
            .iter()
            .filter(|e| e.report.agrees != Some(true))
            .count();
        let mut out = Outcome::new(config, to_value(&scan));
        let mut table = Table::from_values(&[], &rows, ";");
        if table.header.is_empty() {
            table.header = [
                "kind",
                "x",
                "numerical_rank",
                "kempf_count",
                "agrees",
                "gap_ratio",
                "within_bound",
            ]
            .map(String::from)
            .to_vec();
        }
        out.table = Some(table);
        if !holds {
            out = out.fail("rank bound violated: below 11 off A[2] or not 10 on A[2]".into());
        } else if disagreements > 0 {
            out = out.fail(format!(
                "{disagreements} ranks disagree with the translate count"
            ));
        }
        out
    } else {
        config.x = Some(a.x.to_string());
        config.y = Some(a.y.to_string());
        let x = a.x.resolve(&tau, a.seed, 0)?;
        let y = a.y.resolve(&tau, a.seed, 1)?;
        let report = verify_kempf(&tau, &x, &y, &settings)?;
        let agrees = report.agrees == Some(true);
        let result = json!({
            "x": x.iter().map(|z| format_complex(*z)).collect::<Vec<_>>(),
            "y": y.iter().map(|z| format_complex(*z)).collect::<Vec<_>>(),
            "report": report,
        });
        let out = Outcome::new(config, result);
        if agrees {
            out
        } else {
            out.fail(format!(
                "numerical rank {} disagrees with the translate count {:?}",
                report.numerical_rank, report.kempf_count
            ))
        }
    };
    out.period_matrix = Some(pm);
    Ok(out)
}

fn cmd_hyperelliptic(a: &HyperellipticArgs, format: Format) -> Result<Outcome> {
    let mut config = RunConfig::new("hyperelliptic", format);
    config.genus = Some(a.genus);
    let formula = hyperelliptic_theta2_formula(a.genus)?;
    let enumerated = if a.genus <= MAX_HYPERELLIPTIC_ENUMERATION_GENUS {
        Some(hyperelliptic_theta2_enumerated(a.genus)?)
    } else {
        None
    };
    let agrees = enumerated.map(|e| e == formula);
    let out = Outcome::new(
        config,
        json!({
            "g": a.genus,
            "formula": formula,
            "enumerated": enumerated,
            "agrees": agrees,
            "bound": theta2_bound(a.genus),
        }),
    );
    Ok(if agrees == Some(false) {
        out.fail("closed form and enumeration disagree".into())
    } else {
        out
    })
}

fn cmd_bound_table(a: &BoundTableArgs, format: Format) -> Result<Outcome> {
    let mut config = RunConfig::new("bound-table", format);
    config.g_range = Some([a.g_min, a.g_max]);
    config.m_range = Some([a.m_min, a.m_max]);
    if a.g_min == 0 || a.m_min == 0 {
        return Err(Error::InvalidArgument("genus and m start at 1".into()));
    }
    if a.g_max > MAX_HYPERELLIPTIC_GENUS && a.g_min <= a.g_max {
        return Err(Error::GenusOutOfRange {
            g: a.g_max,
            min: 1,
            max: MAX_HYPERELLIPTIC_GENUS,
        });
    }
    let ms: Vec<u64> = (a.m_min..=a.m_max).collect();
    let mut header: Vec<String> = ["g", "theta2_bound", "hyperelliptic"]
        .map(String::from)
        .to_vec();
    header.extend(ms.iter().map(|m| format!("cor_m{m}")));
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for g in a.g_min..=a.g_max {
        let bound = theta2_bound(g);
        let hyper = hyperelliptic_theta2_formula(g)?;
        let mut row = vec![g.to_string(), bound.to_string(), hyper.to_string()];
        let mut cor = serde_json::Map::new();
        for &m in &ms {
            let v = (m as u128)
                .checked_pow(2 * g as u32)
                .and_then(|p| p.checked_mul(bound as u128))
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("m^(2g)(4^g - 3^g) overflows at g={g}, m={m}"))
                })?;
            row.push(v.to_string());
            cor.insert(format!("cor_m{m}"), json!(v.to_string()));
        }
        rows.push(row);
        let mut rec = json!({"g": g, "theta2_bound": bound, "hyperelliptic": hyper});
        rec.as_object_mut().expect("object").extend(cor);
        records.push(rec);
    }
    let mut out = Outcome::new(config, json!({ "rows": records }));
    out.table = Some(Table { header, rows });
    Ok(out)
}

fn cmd_quadrics(a: &QuadricsArgs, format: Format, exec: Execution) -> Result<Outcome> {
    check_tolerances(&a.tol)?;
    let source = MatrixSource::from_args(&a.source)?;
    let tau = source.build(a.seed)?;
    let g = tau.genus();
    let n_samples = a
        .n_samples
        .unwrap_or_else(|| crate::multmap::default_samples(g));
    let settings = rank_settings(&a.tol, a.rel_tol, Some(n_samples), a.seed, exec);
    let is_product = matches!(source, MatrixSource::Product { .. });
    let mut config = RunConfig::new("quadrics", format);
    config.source = Some(source);
    config.seed = Some(a.seed);
    config.eps = Some(a.tol.eps);
    config.vanish_tol = Some(a.tol.vanish_tol);
    config.rel_tol = Some(a.rel_tol);
    config.n_samples = Some(n_samples);
    let k = sym_kernel_dim(&tau, &settings)?;
    let formula = (1u64 << (g - 1)) * ((1u64 << g) + 1) - 3u64.pow(g as u32);
    let matches = k.kernel_dim as u64 == formula;
    let mut out = Outcome::new(
        config,
        json!({
            "g": g,
            "kernel_dim": k.kernel_dim,
            "products": k.products,
            "product_formula": formula,
            "matches_product_formula": matches,
            "rank": k.rank,
        }),
    );
    out.period_matrix = Some(PeriodMatrixFile::from_matrix(&tau));
    Ok(if is_product && !matches {
        out.fail(format!(
            "kernel dimension {} differs from {formula} on a product",
            k.kernel_dim
        ))
    } else {
        out
    })
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let exec = execution(cli.threads);
    match &cli.command {
        Command::Count(a) => cmd_count(a, cli.format, exec),
        Command::Rank(a) => cmd_rank(a, cli.format, exec),
        Command::Hyperelliptic(a) => cmd_hyperelliptic(a, cli.format),
        Command::BoundTable(a) => cmd_bound_table(a, cli.format),
        Command::Quadrics(a) => cmd_quadrics(a, cli.format, exec),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let threads = cli.threads;
    let result = exec::with_threads(threads, || {
        dispatch(&cli).and_then(|o| Ok((o.render()?, o)))
    });
    match result {
        Ok((text, outcome)) => {
            if out.write_all(text.as_bytes()).is_err() {
                return EXIT_USAGE;
            }
            if let Some(d) = &outcome.diagnostic {
                let _ = writeln!(err, "thetanull: {d}");
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(err, "thetanull: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

#[cfg(test)]
mod tests;
