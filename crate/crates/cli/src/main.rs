//! `altcsit` command line: seeded experiments over the alternating-CSIT
//! schemes, the pattern census and the DoF region.
//!
//! Every output embeds the resolved configuration, so `altcsit --replay FILE`
//! regenerates FILE byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use altcsit::channel::NoiseConfig;
use altcsit::csit::{census, CsitPattern};
use altcsit::estimation::{rate_slope, run_trials_under, SlopeEstimate, TrialReport};
use altcsit::region::{enumerate_vertices, fmt_q, max_sum, outer_bound, Q};
use altcsit::schemes::SchemeId;
use altcsit::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::One;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

const SCHEMA_VERSION: u32 = 1;

mod exit {
    pub const OTHER: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PATTERN_MISMATCH: u8 = 3;
    pub const INVALID_SWEEP: u8 = 4;
    pub const INVARIANT: u8 = 5;
}

#[derive(Parser)]
#[command(name = "altcsit", version, about, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Re-run the configuration embedded in an earlier output file.
    #[arg(long, value_name = "FILE")]
    replay: Option<PathBuf>,

    /// Where to write the replayed output (stdout if absent).
    #[arg(long, value_name = "FILE", requires = "replay")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo decode trials, optionally with a power sweep.
    Simulate(SimulateArgs),
    /// Census of all two-receiver CSIT patterns of a given length.
    Patterns(PatternsArgs),
    /// Vertices and sum-DoF optimum of the two-user outer bound.
    Region(OutputArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// scheme1, scheme1m, ..., three-user, kuser, kx2, 2xk (or kuser:K etc.)
    #[arg(long)]
    scheme: String,
    /// K for the kuser, kx2 and 2xk families.
    #[arg(long)]
    k: Option<usize>,
    /// CSIT pattern such as "DD,PN,NP"; defaults to the scheme's minimal one.
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, env = "ALTCSIT_SEED", default_value_t = 0)]
    seed: u64,
    /// Receiver noise variance; 0 runs noiseless.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Geometric power sweep `lo:hi:points` for the rate-slope estimate.
    #[arg(long)]
    sweep: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PatternsArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Rows)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    /// Tab-separated records, one per line.
    Rows,
    /// One JSON document.
    Structured,
}

/// Everything needed to reproduce a run. The output path is deliberately
/// left out so a replay to another file stays byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunConfig {
    command: String,
    scheme: Option<String>,
    k: Option<usize>,
    pattern: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    noise: Option<f64>,
    sweep: Option<String>,
    n: Option<usize>,
    format: Format,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: exit::USAGE,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PatternMismatch { .. } => exit::PATTERN_MISMATCH,
            Error::InvalidSweep(_) => exit::INVALID_SWEEP,
            Error::Parse { .. } | Error::InvalidScheme(_) => exit::USAGE,
            _ => exit::OTHER,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

struct Output {
    text: String,
    /// Set when the run completed but some invariant did not hold.
    violation: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match (cli.command, cli.replay) {
        (Some(cmd), None) => {
            let (cfg, out) = match cmd {
                Command::Simulate(a) => {
                    let out = a.output.out.clone();
                    (simulate_config(a), out)
                }
                Command::Patterns(a) => (
                    Ok(RunConfig {
                        command: "patterns".into(),
                        n: Some(a.n),
                        ..empty_config(a.output.format)
                    }),
                    a.output.out,
                ),
                Command::Region(a) => (
                    Ok(RunConfig {
                        command: "region".into(),
                        ..empty_config(a.format)
                    }),
                    a.out,
                ),
            };
            cfg.and_then(|c| execute(&c, out.as_deref()))
        }
        (None, Some(file)) => read_config(&file).and_then(|c| execute(&c, cli.out.as_deref())),
        _ => Err(Failure::usage("give a command, or --replay FILE")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn empty_config(format: Format) -> RunConfig {
    RunConfig {
        command: String::new(),
        scheme: None,
        k: None,
        pattern: None,
        trials: None,
        seed: None,
        noise: None,
        sweep: None,
        n: None,
        format,
    }
}

/// Resolves the scheme name and default pattern so the stored config is
/// canonical.
fn simulate_config(a: SimulateArgs) -> Result<RunConfig, Failure> {
    let id = resolve_scheme(&a.scheme, a.k)?;
    let pattern = match &a.pattern {
        Some(p) => p.parse::<CsitPattern>()?,
        None => id.minimal_pattern()?,
    };
    Ok(RunConfig {
        command: "simulate".into(),
        scheme: Some(id.to_string()),
        k: a.k,
        pattern: Some(pattern.to_string()),
        trials: Some(a.trials),
        seed: Some(a.seed),
        noise: Some(a.noise),
        sweep: a.sweep,
        ..empty_config(a.output.format)
    })
}

fn resolve_scheme(name: &str, k: Option<usize>) -> Result<SchemeId, Failure> {
    let name = name.trim().to_ascii_lowercase();
    let full = match k {
        Some(k) if !name.contains(':') => format!("{name}:{k}"),
        _ => name,
    };
    Ok(full.parse::<SchemeId>()?)
}

fn parse_sweep(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = |why: &str| Failure::from(Error::InvalidSweep(format!("{s:?}: {why}")));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(bad("expected lo:hi:points"));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad("lo is not a number"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad("hi is not a number"))?;
    let n: usize = n.trim().parse().map_err(|_| bad("points is not an integer"))?;
    if n < 2 || !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(bad("need 0 < lo < hi and at least 2 points"));
    }
    // in log10 so decade endpoints come out exact
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect())
}

fn read_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: exit::OTHER,
        msg: format!("{}: {e}", path.display()),
    })?;
    let parsed = if text.trim_start().starts_with('{') {
        serde_json::from_str::<Value>(&text)
            .ok()
            .and_then(|v| v.get("config").cloned())
            .map(serde_json::from_value::<RunConfig>)
    } else {
        text.lines()
            .find_map(|l| l.strip_prefix("# config "))
            .map(serde_json::from_str::<RunConfig>)
    };
    match parsed {
        Some(Ok(cfg)) => Ok(cfg),
        Some(Err(e)) => Err(Failure::usage(format!("{}: bad config: {e}", path.display()))),
        None => Err(Failure::usage(format!("{}: no embedded config", path.display()))),
    }
}

fn execute(cfg: &RunConfig, out: Option<&Path>) -> Result<(), Failure> {
    let output = match cfg.command.as_str() {
        "simulate" => simulate(cfg)?,
        "patterns" => patterns(cfg)?,
        "region" => region(cfg)?,
        other => return Err(Failure::usage(format!("unknown command {other:?}"))),
    };
    match out {
        Some(p) => std::fs::write(p, &output.text).map_err(|e| Failure {
            code: exit::OTHER,
            msg: format!("{}: {e}", p.display()),
        })?,
        None => print!("{}", output.text),
    }
    match output.violation {
        Some(msg) => Err(Failure {
            code: exit::INVARIANT,
            msg,
        }),
        None => Ok(()),
    }
}

fn missing(field: &str) -> Failure {
    Failure::usage(format!("config lacks {field}"))
}

fn simulate(cfg: &RunConfig) -> Result<Output, Failure> {
    let id: SchemeId = cfg.scheme.as_deref().ok_or_else(|| missing("scheme"))?.parse()?;
    let pattern: CsitPattern = cfg.pattern.as_deref().ok_or_else(|| missing("pattern"))?.parse()?;
    let trials = cfg.trials.ok_or_else(|| missing("trials"))?;
    let seed = cfg.seed.ok_or_else(|| missing("seed"))?;
    let variance = cfg.noise.unwrap_or(0.0);
    let noise = if variance == 0.0 {
        NoiseConfig::noiseless()
    } else {
        NoiseConfig::awgn(variance)?
    };
    let powers = cfg.sweep.as_deref().map(parse_sweep).transpose()?;

    let report = run_trials_under(id, &pattern, trials, &noise, seed)?;
    let slope = match &powers {
        Some(p) => Some(rate_slope(id, p, trials, seed)?),
        None => None,
    };

    let violation = if !report.clean() || report.successes != report.trials {
        Some(format!(
            "{} of {} trials succeeded; identifiability failures {}, recipe mismatches {}, plan failures {}",
            report.successes,
            report.trials,
            report.identifiability_failures,
            report.recipe_mismatches,
            report.plan_failures
        ))
    } else {
        None
    };
    let text = match cfg.format {
        Format::Rows => simulate_rows(cfg, &report, slope.as_ref()),
        Format::Structured => document(
            cfg,
            json!({
                "report": report_json(&report),
                "slope": slope.as_ref().map(slope_json),
            }),
        ),
    };
    Ok(Output { text, violation })
}

fn report_json(r: &TrialReport) -> Value {
    json!({
        "scheme": r.scheme.to_string(),
        "pattern": r.pattern.to_string(),
        "seed": r.seed,
        "noise_variance": r.noise_variance,
        "trials": r.trials,
        "successes": r.successes,
        "max_residual": r.max_residual,
        "condition_p50": r.condition_quantiles.0,
        "condition_p95": r.condition_quantiles.1,
        "condition_max": r.condition_quantiles.2,
        "identifiability_failures": r.identifiability_failures,
        "recipe_mismatches": r.recipe_mismatches,
        "plan_failures": r.plan_failures,
    })
}

fn slope_json(s: &SlopeEstimate) -> Value {
    json!({
        "points": s.snr_points.iter().zip(&s.rate_std)
            .map(|((p, r), sd)| json!({"power": p, "mean_rate": r, "std": sd}))
            .collect::<Vec<_>>(),
        "slope": s.slope,
        "r_squared": s.r_squared,
        "fit_points": s.fit_points,
    })
}

/// Merges `body` into a top-level object carrying the schema version and
/// config.
fn document(cfg: &RunConfig, body: Value) -> String {
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
    });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
    s.push('\n');
    s
}

fn rows_header(cfg: &RunConfig) -> String {
    format!(
        "# altcsit rows v{SCHEMA_VERSION}\n# config {}\n",
        serde_json::to_string(cfg).expect("config serializes")
    )
}

fn row(out: &mut String, fields: &[String]) {
    let _ = writeln!(out, "{}", fields.join("\t"));
}

/// Shortest round-trip form; scientific for very small or large values.
fn g(x: f64) -> String {
    format!("{x:?}")
}

macro_rules! fields {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

fn simulate_rows(cfg: &RunConfig, r: &TrialReport, slope: Option<&SlopeEstimate>) -> String {
    let mut out = rows_header(cfg);
    row(
        &mut out,
        &fields![
            "#report", "scheme", "pattern", "seed", "noise_variance", "trials", "successes",
            "max_residual", "condition_p50", "condition_p95", "condition_max",
            "identifiability_failures", "recipe_mismatches", "plan_failures"
        ],
    );
    row(
        &mut out,
        &fields![
            "report", r.scheme, r.pattern, r.seed, g(r.noise_variance), r.trials, r.successes,
            g(r.max_residual), g(r.condition_quantiles.0), g(r.condition_quantiles.1),
            g(r.condition_quantiles.2), r.identifiability_failures, r.recipe_mismatches,
            r.plan_failures
        ],
    );
    if let Some(s) = slope {
        row(&mut out, &fields!["#sweep", "power", "mean_rate", "std"]);
        for ((p, m), sd) in s.snr_points.iter().zip(&s.rate_std) {
            row(&mut out, &fields!["sweep", g(*p), g(*m), g(*sd)]);
        }
        row(&mut out, &fields!["#summary", "slope", "r_squared", "fit_points"]);
        row(&mut out, &fields!["summary", g(s.slope), g(s.r_squared), s.fit_points]);
    }
    out
}

fn patterns(cfg: &RunConfig) -> Result<Output, Failure> {
    let n = cfg.n.ok_or_else(|| missing("n"))?;
    let c = census(n)?;
    let text = match cfg.format {
        Format::Rows => {
            let mut out = rows_header(cfg);
            row(
                &mut out,
                &fields![
                    "#census", "n_slots", "total", "synergistic", "dispatched",
                    "synergistic_only", "dispatched_only"
                ],
            );
            row(
                &mut out,
                &fields![
                    "census", c.n_slots, c.total, c.synergistic, c.dispatched,
                    c.synergistic_only, c.dispatched_only
                ],
            );
            row(&mut out, &fields!["#dispatch", "scheme", "count"]);
            for (id, k) in &c.histogram {
                row(&mut out, &fields!["dispatch", id, k]);
            }
            out
        }
        Format::Structured => document(
            cfg,
            json!({
                "census": {
                    "n_slots": c.n_slots,
                    "total": c.total,
                    "synergistic": c.synergistic,
                    "dispatched": c.dispatched,
                    "synergistic_only": c.synergistic_only,
                    "dispatched_only": c.dispatched_only,
                    "histogram": c.histogram.iter()
                        .map(|(id, k)| json!({"scheme": id.to_string(), "count": k}))
                        .collect::<Vec<_>>(),
                }
            }),
        ),
    };
    Ok(Output {
        text,
        violation: None,
    })
}

fn region(cfg: &RunConfig) -> Result<Output, Failure> {
    let poly = outer_bound();
    let vertices = enumerate_vertices(&poly)?;
    let (best, argmax) = max_sum(&poly, &vec![Q::one(); poly.dim()])?;
    let qs = |v: &[Q]| v.iter().map(fmt_q).collect::<Vec<_>>();
    let text = match cfg.format {
        Format::Rows => {
            let mut out = rows_header(cfg);
            row(&mut out, &fields!["#constraint", "k", "c1", "c2", "c3", "c4", "bound"]);
            for (k, h) in poly.constraints().iter().enumerate() {
                let mut f = fields!["constraint", k + 1];
                f.extend(qs(&h.coeffs));
                f.push(fmt_q(&h.bound));
                row(&mut out, &f);
            }
            row(&mut out, &fields!["#vertex", "k", "d11", "d12", "d21", "d22", "active"]);
            for (k, v) in vertices.iter().enumerate() {
                let mut f = fields!["vertex", k + 1];
                f.extend(qs(v));
                f.push(active_list(&poly.active(v)));
                row(&mut out, &f);
            }
            row(&mut out, &fields!["#max_sum", "value"]);
            row(&mut out, &fields!["max_sum", fmt_q(&best)]);
            row(&mut out, &fields!["#argmax", "d11", "d12", "d21", "d22"]);
            for v in &argmax {
                let mut f = fields!["argmax"];
                f.extend(qs(v));
                row(&mut out, &f);
            }
            out
        }
        Format::Structured => document(
            cfg,
            json!({
                "constraints": poly.constraints().iter()
                    .map(|h| json!({"coeffs": qs(&h.coeffs), "bound": fmt_q(&h.bound)}))
                    .collect::<Vec<_>>(),
                "vertices": vertices.iter()
                    .map(|v| json!({
                        "point": qs(v),
                        "active": poly.active(v).iter().map(|a| a + 1).collect::<Vec<_>>(),
                    }))
                    .collect::<Vec<_>>(),
                "max_sum": fmt_q(&best),
                "argmax": argmax.iter().map(|v| qs(v)).collect::<Vec<_>>(),
            }),
        ),
    };
    Ok(Output {
        text,
        violation: None,
    })
}

fn active_list(active: &[usize]) -> String {
    active
        .iter()
        .map(|a| (a + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}
