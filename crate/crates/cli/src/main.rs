//! `ptl`: command-line front end for the padic-theta library.

mod fixtures;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use padic_theta::galrep::{self, ExceptionalParams, LocalShape, ReductionInput, Regime, Table};
use padic_theta::padic::{is_prime, parse_rational};
use padic_theta::qexp::{self, Eigenvalue, RootChoice};
use padic_theta::thetalift::{self, LiftBounds, Mode, Outcome};
use padic_theta::upslopes::{self, Caps, Target};
use padic_theta::{Error, PadicScalar, RamifiedScalar, Rational};

#[derive(Parser, Debug)]
#[command(name = "ptl", version, about = "Theta operator, U_p slopes and mod-p local shapes")]
struct Cli {
    #[command(flatten)]
    cfg: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// The prime p.
    #[arg(long, global = true, default_value_t = 5)]
    p: u64,
    /// p-adic precision (digits).
    #[arg(long, global = true, default_value_t = padic_theta::DEFAULT_PRECISION)]
    prec: u32,
    /// q-expansion depth.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true, default_value_t = 2)]
    kappa: u32,
    /// Largest M probed by `lift`.
    #[arg(long, global = true, default_value_t = 1)]
    mmax: u32,
    /// Largest weight probed by `lift`.
    #[arg(long, global = true, default_value_t = 60)]
    lmax: i64,
    /// certified or heuristic congruence depth.
    #[arg(long, global = true, default_value = "certified")]
    mode: String,
    /// Write JSON here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomly generated inputs.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certified U_p slopes at weight k.
    Slopes {
        k: i64,
        /// Number of slopes (with multiplicity).
        #[arg(long, default_value_t = 5, conflicts_with = "upto")]
        count: usize,
        /// Every slope up to this bound instead of a count.
        #[arg(long)]
        upto: Option<String>,
        /// Keep the Eisenstein slope.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 120)]
        max_dimension: usize,
    },
    /// theta^(kappa-1) f mod p.
    Theta { f: String },
    /// p-stabilization of a level-one eigenform.
    Stabilize {
        f: String,
        #[arg(long, default_value = "small")]
        root: String,
    },
    /// Search for g = theta^(kappa-1) f mod p of slope alpha + kappa - 1.
    Lift {
        f: String,
        #[arg(long, default_value_t = 40)]
        max_dimension: usize,
    },
    /// Reduction shape on inertia for weight k and slope.
    Classify {
        k: i64,
        slope: String,
        /// a_p, or its rational part when --ap-sqrt is given.
        #[arg(long, allow_hyphen_values = true)]
        ap: Option<String>,
        /// Coefficient of sqrt(p) in a_p.
        #[arg(long, allow_hyphen_values = true)]
        ap_sqrt: Option<String>,
        /// Explicit tau (or tau') instead of a_p.
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<String>,
    },
    /// Replay one of the comparison tables.
    Compat { table: String },
    /// Candidate shapes for slopes in [2, 3).
    Extrapolate { l: i64, slope: String },
    /// Radius constraint for the family through g of weight l.
    Radius { l: i64, slope: String },
    /// Serre weight of a worked configuration.
    Serre { shape: String },
    /// Multiplicity probes around k0 for the radius of a slope-alpha family.
    RadiusSearch {
        k0: i64,
        alpha: String,
        /// Comma-separated probe weights.
        #[arg(long, value_delimiter = ',')]
        probes: Vec<i64>,
        #[arg(long, default_value_t = 3)]
        cap: u32,
    },
}

/// Failure with the exit code it maps to.
struct Fail {
    code: u8,
    msg: String,
    partial: Option<Value>,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::ResourceCap(_)) { 2 } else { 1 };
        Fail { code, msg: e.to_string(), partial: None }
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail { code: 1, msg: msg.into(), partial: None }
}

fn pipeline_prime(p: u64) -> Result<(), Fail> {
    if p < 5 || !is_prime(p) {
        return Err(usage(format!("--p {p}: pipeline commands need a prime p >= 5")));
    }
    Ok(())
}

fn odd_prime(p: u64) -> Result<(), Fail> {
    if p < 3 || !is_prime(p) {
        return Err(usage(format!("--p {p}: need an odd prime")));
    }
    Ok(())
}

fn rational(s: &str) -> Result<Rational, Fail> {
    parse_rational(s).map_err(|e| usage(e.to_string()))
}

fn emit(cfg: &Global, v: &Value) -> Result<(), Fail> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text + "\n").map_err(|e| usage(format!("{}: {e}", path.display())))
        }
        None => {
            // A closed pipe (e.g. `| head`) is not an error.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn shape_value(s: &LocalShape) -> Value {
    json!({ "shape": s.to_string(), "json": to_value(s) })
}

fn run(cli: Cli) -> Result<(), Fail> {
    let cfg = &cli.cfg;
    let p = cfg.p;
    match &cli.cmd {
        Command::Slopes { k, count, upto, all, max_dimension } => {
            pipeline_prime(p)?;
            let caps = Caps { max_dimension: *max_dimension, ..Caps::default() };
            let target = match upto {
                Some(b) => Target::UpTo(rational(b)?),
                None => Target::Count(*count),
            };
            let res = match target {
                Target::Count(c) => upslopes::slope_sequence_with(p, *k, c, !all, caps),
                t => upslopes::certified_slopes(p, *k, t, !all, caps),
            };
            match res {
                Ok(s) => emit(cfg, &to_value(&s)),
                Err(Error::ResourceCap(msg)) => Err(Fail {
                    code: 2,
                    msg: msg.clone(),
                    partial: Some(json!({ "p": p, "weight": k, "status": "capped", "reason": msg })),
                }),
                Err(e) => Err(e.into()),
            }
        }
        Command::Theta { f } => {
            if !is_prime(p) {
                return Err(usage(format!("--p {p} is not prime")));
            }
            let depth = cfg.depth.unwrap_or(50);
            let series = fixtures::load(f, depth, cfg.seed)?;
            let t = qexp::theta_power(&series.reduce(p, 1)?, cfg.kappa)?;
            emit(cfg, &to_value(&t))
        }
        Command::Stabilize { f, root } => {
            pipeline_prime(p)?;
            let choice = match root.as_str() {
                "small" => RootChoice::SmallSlope,
                "large" => RootChoice::LargeSlope,
                other => return Err(usage(format!("--root {other}: expected small or large"))),
            };
            let depth = cfg.depth.unwrap_or(50).max(p as usize);
            let rec = fixtures::record(f, p, cfg.prec, depth, cfg.seed)?;
            let st = qexp::p_stabilize(&rec, choice, cfg.prec)?;
            emit(
                cfg,
                &json!({
                    "p": p,
                    "weight": st.weight(),
                    "slope": st.slope.to_string(),
                    "a_p": eigenvalue_string(&st.a_p),
                    "series": to_value(&st.series),
                }),
            )
        }
        Command::Lift { f, max_dimension } => {
            pipeline_prime(p)?;
            let mode: Mode = cfg.mode.parse().map_err(|e: Error| usage(e.to_string()))?;
            let bounds = LiftBounds {
                m_max: cfg.mmax,
                l_max: cfg.lmax,
                precision: cfg.prec,
                depth: cfg.depth,
                mode,
                max_dimension: *max_dimension,
            };
            let need = match mode {
                Mode::Certified => qexp::sturm_depth(cfg.lmax, p).max(cfg.depth.unwrap_or(0)),
                Mode::Heuristic => cfg.depth.unwrap_or_else(|| qexp::sturm_depth(cfg.lmax, p)),
            };
            let rec = fixtures::record(f, p, cfg.prec, need.max(p as usize), cfg.seed)?;
            let report = thetalift::lift_search(&rec, cfg.kappa, &bounds)?;
            let summary = match &report.outcome {
                Outcome::Found { g } => format!(
                    "found g at l = {} (M = {}), slope {}, congruent mod {p} to depth {}",
                    g.l, g.m, g.slope, g.depth
                ),
                Outcome::Exhausted { m_max, l_max } => {
                    format!("exhausted: no g with M <= {m_max}, l <= {l_max}")
                }
                Outcome::Capped { reason } => format!("capped: {reason}"),
            };
            let value = to_value(&report);
            if cfg.out.is_some() {
                println!("{summary}");
            }
            if let Outcome::Capped { reason } = &report.outcome {
                return Err(Fail { code: 2, msg: reason.clone(), partial: Some(value) });
            }
            emit(cfg, &value)
        }
        Command::Classify { k, slope, ap, ap_sqrt, tau } => {
            odd_prime(p)?;
            let slope = rational(slope)?;
            let mut input = ReductionInput::new(p, *k, slope)?;
            if let Some(a) = ap {
                let x = PadicScalar::from_ratio(p, &parse_big_rational(a)?, cfg.prec)?;
                input = match ap_sqrt {
                    Some(y) => {
                        let y = PadicScalar::from_ratio(p, &parse_big_rational(y)?, cfg.prec)?;
                        input.with_eigenvalue(Eigenvalue::Ramified(RamifiedScalar::new(x, y)?))
                    }
                    None => input.with_eigenvalue(Eigenvalue::Padic(x)),
                };
            }
            let params = match tau {
                Some(t) => {
                    let regime =
                        regime_of(slope).ok_or_else(|| usage("--tau applies to slopes 1/2, 1, 3/2"))?;
                    Some(ExceptionalParams::symbolic(p, *k, regime, rational(t)?))
                }
                None => None,
            };
            let shape = galrep::classify(&input, params.as_ref())?;
            let mut v = shape_value(&shape);
            v["p"] = json!(p);
            v["weight"] = json!(k);
            v["slope"] = json!(slope.to_string());
            emit(cfg, &v)
        }
        Command::Compat { table } => {
            odd_prime(p)?;
            let t: Table = table.parse().map_err(|e: Error| usage(e.to_string()))?;
            let report = galrep::compat_check(p, t)?;
            let mut v = to_value(&report);
            v["all_pass"] = json!(report.all_pass());
            emit(cfg, &v)
        }
        Command::Extrapolate { l, slope } => {
            odd_prime(p)?;
            let shapes = galrep::extrapolate_slope2(p, *l, rational(slope)?)?;
            let list: Vec<Value> = shapes.iter().map(shape_value).collect();
            emit(cfg, &json!({ "p": p, "l": l, "slope": slope, "candidates": list }))
        }
        Command::Radius { l, slope } => {
            odd_prime(p)?;
            let c = galrep::radius_constraint(rational(slope)?, *l, p)?;
            emit(cfg, &json!({ "constraint": c.to_string() }))
        }
        Command::Serre { shape } => {
            odd_prime(p)?;
            let s = LocalShape::parse(p, shape).map_err(|e| usage(e.to_string()))?;
            let w = galrep::serre_weight_fixture(&s)?;
            emit(cfg, &json!({ "p": p, "shape": s.to_string(), "serre_weight": w }))
        }
        Command::RadiusSearch { k0, alpha, probes, cap } => {
            pipeline_prime(p)?;
            let r = upslopes::radius_search(p, *k0, rational(alpha)?, probes, *cap)?;
            emit(cfg, &to_value(&r))
        }
    }
}

fn regime_of(s: Rational) -> Option<Regime> {
    [Regime::SlopeOne, Regime::SlopeHalf, Regime::SlopeThreeHalves].into_iter().find(|r| r.slope() == s)
}

fn parse_big_rational(s: &str) -> Result<num_rational::BigRational, Fail> {
    s.trim().parse().map_err(|_| usage(format!("not a rational number: {s:?}")))
}

fn eigenvalue_string(a: &Eigenvalue) -> String {
    match a {
        Eigenvalue::Padic(x) => x.symmetric().to_string(),
        Eigenvalue::Ramified(x) => x.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(v) = f.partial {
                let text = serde_json::to_string_pretty(&v).expect("serializable");
                let _ = writeln!(std::io::stdout().lock(), "{text}");
            }
            eprintln!("ptl: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
